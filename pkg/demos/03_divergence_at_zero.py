"""
A smooth function whose Taylor series at 0 escapes the class
============================================================

Shifted building blocks are placed at a_n = M_n^(-1/(2n)) with constants c_n
large enough that the n-th coefficient at a_n exceeds n^n M_n.  At 0 all
coefficients stay below 2 e^j M_j.
"""

# %%
from fractions import Fraction

from flint import arb

from carleman.assemblies import assembly_coeffs, build_thm2
from carleman.verify import growth_classifier
from carleman.weights import gevrey

M = gevrey(1)
A = build_thm2(M)
for n in range(1, 7):
    print(n, "a_n =", A.witness(n).arb().str(8), "c_n =", A.c(n), "T_n =", A.T_bound(n).str(6))

# %%
wit = {}
for n in range(1, 9):
    z, _ = assembly_coeffs(A, A.witness(n), n)[n]
    wit[n] = z
    target = arb(n) ** n * M.M(n).arb()
    print(n, "|coeff| >=", z.abs_lower().str(6), "target", target.str(6), z.abs_lower() >= target)

# %%
# rho_n = (|coeff_n| / M_n)^(1/n) stays above n.  For small n the interference
# from neighbouring blocks inflates c_n, so rho_n starts high and decreases
# before the linear trend sets in.
g = growth_classifier(wit, M)
print([round(r, 2) for r in g.rho], g.trend, round(g.slope, 3))

# %%
at0 = assembly_coeffs(A, Fraction(0), 12)
for j, (z, _) in enumerate(at0):
    print(j, z.abs_upper().str(6), (2 * arb(j).exp() * M.M(j).arb()).str(6))
