import csv
import io
import json
import math
from fractions import Fraction

import pytest
from flint import arb
from hypothesis import given, settings
from hypothesis import strategies as st

from carleman.numerics import ComplexEnclosure, Enclosure
from carleman.verify import (
    CSV_FIELDS,
    BoundSpec,
    check_bound,
    cj_check,
    domination_check,
    fit_shape,
    growth_classifier,
    report_csv,
    report_json,
    search_threshold,
)
from carleman.weights import gevrey

M = gevrey(1)


def test_bound_spec_formulas():
    assert BoundSpec("upper", "AB^jM_j", M, A=Fraction(9, 2)).rhs(3).overlaps(arb(27))
    assert BoundSpec("lower", "c3^-jM_j", M, c=Fraction(1, 2)).rhs(2).overlaps(arb(1) / 9)
    assert BoundSpec("upper", "|x|^-(j+1)", M).rhs(2, Fraction(1, 2)).overlaps(arb(8))
    assert BoundSpec("lower", "n^nM_n", M).rhs(3).overlaps(arb(27 * 6))
    lemma = BoundSpec("upper", "lemma", M, p=2).rhs(1, [0, 0])
    assert lemma.overlaps(8 * arb(2).exp())
    with pytest.raises(ValueError):
        BoundSpec("upper", "nonsense", M)
    with pytest.raises(ValueError):
        BoundSpec("sideways", "AB^jM_j", M)
    with pytest.raises(ValueError):
        BoundSpec("upper", "|x|^-(j+1)", M).rhs(1)


def test_check_bound_statuses():
    spec = BoundSpec("upper", "AB^jM_j", M)
    ev = lambda x, j: Enclosure.exact(M.M(j).value * x)
    rep = check_bound(ev, [Fraction(1, 2), Fraction(2)], range(4), spec)
    assert [c.status for c in rep.cells[:4]] == ["pass-certified"] * 4
    assert all(c.status == "fail-certified" for c in rep.cells[4:])
    assert not rep.ok and len(rep.failing()) == 4
    fuzzy = lambda x, j: Enclosure.ball(M.M(j).arb() + arb(0, 1))
    rep = check_bound(fuzzy, [0], [3], spec)
    assert rep.cells[0].status == "indeterminate"


def test_exception_threshold_excludes_orders():
    spec = BoundSpec("upper", "AB^jM_j", M, exception_threshold=3)
    rep = check_bound(lambda x, j: Enclosure.exact(0), [0], range(6), spec)
    assert [c.order for c in rep.cells] == [3, 4, 5]
    assert rep.excluded == [("0", 0), ("0", 1), ("0", 2)]


def test_lower_bound_on_zero_fails():
    spec = BoundSpec("lower", "2^-jM_j", M)
    rep = check_bound(lambda x, j: Enclosure.exact(0), [0], [1], spec)
    assert rep.cells[0].status == "fail-certified"


def test_search_threshold():
    spec = BoundSpec("lower", "c3^-jM_j", M, c=Fraction(1, 2))
    # value below the bound for j < 4, above afterwards
    ev = lambda x, j: Enclosure.exact(M.M(j).value * (Fraction(1, 100) if j < 4 else 1))
    rep = search_threshold(ev, 0, range(12), spec)
    assert rep.found_j0 == 4
    rep = search_threshold(ev, 0, range(12), spec, cap=3)
    assert rep.found_j0 is None


@given(st.floats(min_value=0.5, max_value=3.0))
@settings(max_examples=20)
def test_growth_classifier_linear(scale):
    coeffs = {j: Enclosure.ball(arb(scale * j) ** j * M.M(j).arb()) for j in range(1, 13)}
    g = growth_classifier(coeffs, M)
    assert g.trend == "linear-growth"
    assert abs(g.slope - scale) < 1e-6


@given(st.floats(min_value=0.1, max_value=20.0))
@settings(max_examples=20)
def test_growth_classifier_bounded(b):
    coeffs = {j: Enclosure.ball(arb(b) ** j * M.M(j).arb()) for j in range(1, 21)}
    g = growth_classifier(coeffs, M)
    assert g.trend == "bounded" and abs(g.slope) < 1e-9
    assert g.sup_rho >= b * (1 - 1e-9)


def test_growth_classifier_needs_points():
    with pytest.raises(ValueError):
        growth_classifier({1: Enclosure.exact(1)}, M)
    short = {j: Enclosure.ball(arb(j) ** j) for j in range(1, 6)}
    assert growth_classifier(short, gevrey(1)).trend != "linear-growth"


def test_domination_parity():
    coeffs = {}
    for j in range(10):
        big, small = Fraction(1), Fraction(1, 10)
        if j < 2:
            coeffs[j] = ComplexEnclosure.exact(1, 1)
        elif j % 2:
            coeffs[j] = ComplexEnclosure.exact(big, small)
        else:
            coeffs[j] = ComplexEnclosure.exact(small, -big)
    rep = domination_check(coeffs)
    assert rep.found_j0 == 2 and rep.ok
    assert rep.parity_dominant == {0: "im", 1: "re"}
    coeffs[6] = ComplexEnclosure.exact(1, Fraction(1, 10))
    rep = domination_check(coeffs)
    assert rep.parity_dominant[0] == "mixed" and not rep.ok


def test_fit_shape_recovers_constants():
    vals = [(j, Enclosure.exact(3 * Fraction(5) ** j * M.M(j).value)) for j in range(10)]
    fit = fit_shape(vals, M)
    assert abs(float(fit.A) - 3) < 1e-9 and abs(float(fit.B) - 5) < 1e-9
    assert fit.A >= 3 and fit.B >= 5
    assert fit.within(6) and not fit.within(4)


def test_cj_check():
    r = cj_check(25)
    assert r.decreasing and r.c20_below_eighth and r.ok
    assert r.values[1].arb().overlaps(arb.pi() / arb.pi().tanh() - 1)


def test_report_writers():
    spec = BoundSpec("upper", "AB^jM_j", M)
    rep = check_bound(lambda x, j: Enclosure.exact(Fraction(j, 2)), [Fraction(1, 3)], range(3), spec)
    text = report_csv([rep])
    rows = list(csv.DictReader(io.StringIO(text)))
    assert list(rows[0]) == list(CSV_FIELDS)
    assert rows[0]["lhs_log2_lo"] == "-inf" and rows[0]["point"] == "1/3"
    assert rows[1]["status"] == "pass-certified"
    data = json.loads(report_json([rep]))
    assert data[0]["formula"] == "AB^jM_j" and len(data[0]["cells"]) == 3
