"""
Composing with polynomial curves
================================

Along a polynomial curve the composite f o gamma has Taylor coefficients that
stay within the class: rho_j = (|c_j| / M_j)^(1/j) does not grow.
"""

# %%
from fractions import Fraction

from carleman.assemblies import build_masterthm
from carleman.multivar import PolynomialCurve, compose_curve
from carleman.verify import growth_classifier
from carleman.weights import gevrey

A = build_masterthm(gevrey(1), 2)
curves = {
    "(t, t^2) at 1/10": (PolynomialCurve.from_json({"components": [["0", "1"], ["0", "0", "1"]]}), Fraction(1, 10)),
    "(0, t) at 0": (PolynomialCurve.from_json({"components": [["0"], ["0", "1"]]}), Fraction(0)),
}
for name, (gamma, t0) in curves.items():
    jet = compose_curve(A, gamma, t0, 12)
    g = growth_classifier({j: jet[j] for j in range(1, 13)}, A.M)
    print(name, g.trend, round(g.slope, 4), [round(r, 3) for r in g.rho])
