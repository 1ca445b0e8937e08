"""
Weight sequences and the associated function
============================================

A weight sequence M = (M_n) fixes how fast derivatives may grow.  This script
tabulates a few families, evaluates phi(alpha) = sup_l alpha^(l+1) / M_l and
checks the identity M_n phi(m_n) = m_n^(n+1) that links the two.
"""

# %%
from fractions import Fraction

from carleman.weights import (
    b_sequence,
    check_log_convex,
    gevrey,
    phi,
    phi_identity_check,
    qfamily,
    quasianalytic_diagnostic,
    regularize_strict,
    table,
)

M = gevrey(1)
print("Gevrey-1:", [M.M(n).value for n in range(8)])
print("ratios m_n:", [M.ratio(n).value for n in range(8)])
print("b_n:", [b_sequence(M, n) for n in range(1, 12)])

# %%
# The quasianalytic family has ratios log(n + e); its values are balls.
Q = qfamily()
for n in range(4):
    print(n, Q.M(n).arb().str(12))
print("strictly log-convex to depth 40:", check_log_convex(Q, 40, strict=True).ok)

# %%
# phi peaks where m_l crosses alpha.  At alpha = m_n two terms tie.
for alpha in (Fraction(5, 2), Fraction(5), Fraction(23, 2)):
    r = phi(M, alpha)
    print(f"phi({alpha}) = {r.value.value}  argmax l = {r.argmax_index}  tie = {r.is_tie}")

print(all(phi_identity_check(M, n).ok for n in range(1, 60)))
print(phi_identity_check(Q, 30))

# %%
# Repeated ratios are spread out geometrically to give a strictly log-convex
# sequence defining the same class.
T = table([1, 1, 2, 4, 8, 16, 64, 256, 1024, 5120, 25600, 153600])
R = regularize_strict(T)
for n in range(10):
    print(n, T.ratio(n).value, R.ratio(n).arb().str(8))

# %%
print(quasianalytic_diagnostic(M, 200).status, quasianalytic_diagnostic(Q, 200).status)
