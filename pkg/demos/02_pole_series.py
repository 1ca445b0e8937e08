"""
Pole series with certified Taylor coefficients
==============================================

Both one-dimensional constructions are sums of simple poles just above the
real axis.  Coefficients f^(j)(x)/j! come back as complex balls whose radius
includes a proven bound on the discarded groups.
"""

# %%
from fractions import Fraction

from carleman.poleseries import build_block, build_thm1, taylor_coeffs
from carleman.verify import BoundSpec, check_bound, domination_check, search_threshold
from carleman.weights import gevrey

M = gevrey(1)
series = build_thm1(M)
vals = taylor_coeffs(series, Fraction(1, 2), 10)
for j, (z, cert) in enumerate(vals):
    print(j, z.re.arb().str(8), z.im.arb().str(8), "groups:", cert.groups_used)

# %%
# Upper bound 4.5 M_j on a coarse grid.
grid = [Fraction(k, 10) for k in range(-9, 10, 3)]
coeffs = {x: taylor_coeffs(series, x, 20) for x in grid}
rep = check_bound(lambda x, j: coeffs[x][j], grid, range(21), BoundSpec("upper", "AB^jM_j", M, A=Fraction(9, 2)))
print(rep.statuses)

# %%
# At dyadic points the coefficients are also large: |c_j| >= 3^-j M_j / 2 from
# some order on, and either Re or Im dominates by a factor 3.
t = Fraction(1, 2)
vals = taylor_coeffs(series, t, 30, tol=Fraction(1, 3**34))
low = search_threshold(lambda _x, j: vals[j], t, range(31), BoundSpec("lower", "c3^-jM_j", M, c=Fraction(1, 2)))
dom = domination_check({j: v for j, (v, _) in enumerate(vals)}, range(31))
print("lower bound from j =", low.found_j0, "; domination from j =", dom.found_j0, dom.parity_dominant)

# %%
# The building block has one pole i/m_k per group and is bounded by M_j and by
# |x|^-(j+1) away from the origin.
block = build_block(M)
for x in (Fraction(0), Fraction(1, 10), Fraction(10)):
    z, cert = taylor_coeffs(block, x, 6)[6]
    print(x, z.abs_upper().str(6), "tail", cert.tail_bound.arb().str(3))
