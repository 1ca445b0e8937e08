"""
Radial blocks in several variables
==================================

f(x) = g(|x|^2) has derivatives given by a Faa di Bruno sum over tuples
(k_i1, k_i2).  The p-dimensional assembly places radial blocks at points on the
flat curve x_2 = exp(-1/x_1^2).
"""

# %%
import math
from fractions import Fraction

from carleman.assemblies import build_masterthm, masterthm_derivatives, s_distance_check
from carleman.multivar import fdb_derivative, fdb_tuples
from carleman.weights import gevrey

print([t.pairs for t in fdb_tuples((2, 1))])

# g(u) = u^2 has g'' = 2, so f = (x^2 + y^2)^2 and d^4 f / dx^4 = 24
g_derivs = [0, 0, 2, 0, 0]
print(fdb_derivative(g_derivs, [0, 0], (4, 0)).re.value)

# %%
M = gevrey(1)
A = build_masterthm(M, 2)
print("start index", A.start_index)
for n in range(A.start_index, 5):
    a = A.witness(n)
    (z, _), = masterthm_derivatives(A, a, [(2 * n, 0)])
    bound = (2 * n) ** (2 * n) * math.factorial(2 * n) * int(M.M(2 * n).value)
    print(n, [c.arb().str(6) for c in a], z.abs_lower() >= bound)

# %%
# Away from the witnesses the derivatives are small.
x = [Fraction(1, 5), Fraction(1, 2)]
alphas = [(i, k - i) for k in range(5) for i in range(k + 1)]
for alpha, (z, cert) in zip(alphas, masterthm_derivatives(A, x, alphas)):
    print(alpha, z.abs_upper().str(5), "K =", cert.groups_used)

# %%
# The flat curve stays at distance >= exp(-1/t^2) from x_2 >= x_1.
for t in (Fraction(1, 20), Fraction(1, 5), Fraction(2, 5)):
    r = s_distance_check(t)
    print(t, r.status, r.distance_lower.str(6), r.bound.str(6))
