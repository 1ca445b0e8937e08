import json
import math
from fractions import Fraction

import pytest
from flint import arb
from hypothesis import given, settings
from hypothesis import strategies as st

from carleman.assemblies import (
    CCache,
    Region,
    assembly_coeffs,
    build_masterthm,
    build_thm2,
    masterthm_derivative,
    masterthm_derivatives,
    region_contains,
    s_distance_check,
    select_c,
)
from carleman.multivar import MultiIndex, PolynomialCurve, compose_curve
from carleman.numerics import Enclosure
from carleman.weights import gevrey, mk_sequence

M = gevrey(1)


@pytest.fixture(scope="module")
def thm2():
    return build_thm2(M)


@pytest.fixture(scope="module")
def pd2():
    return build_masterthm(M, 2)


def test_witnesses_decrease(thm2):
    prev = None
    for n in range(1, 12):
        a = thm2.witness(n)
        assert a.arb().overlaps(arb(math.factorial(n)) ** (arb(-1) / (2 * n)))
        if prev is not None:
            assert a.certainly_lt(prev)
        prev = a


@pytest.mark.parametrize("n", range(1, 6))
def test_select_c_guarantee(thm2, n):
    c = select_c(thm2, n)
    assert c.is_exact and c.value.denominator == 1
    assert c.certainly_ge(M.M(n))
    # 4^-n c_n M_n - T_n dominates the target n^n M_n
    assert thm2.guarantee(n) > thm2.target(n)
    mk_sequence(M, n, c)  # c_n >= M_n makes the sequence well defined


def test_interference_matches_direct_sum(thm2):
    n = 3
    T, K = thm2.interference(n)
    an = float(thm2.witness(n))
    direct = sum(2.0**-k * abs(an - float(thm2.witness(k))) ** -(n + 1) for k in range(1, 200) if k != n)
    assert float(T.lower()) <= direct * (1 + 1e-9)
    assert float(T.upper()) >= direct * (1 - 1e-9)


@pytest.mark.parametrize("n", range(1, 5))
def test_witness_lower_bound(thm2, n):
    z, _ = assembly_coeffs(thm2, thm2.witness(n), n)[n]
    assert z.abs_lower() >= n**n * M.M(n).arb()


def test_formal_bound_at_zero(thm2):
    vals = assembly_coeffs(thm2, Fraction(0), 12)
    for j, (z, _) in enumerate(vals):
        assert z.abs_upper() <= 2 * arb(j).exp() * M.M(j).arb()


def test_cache_roundtrip(tmp_path, monkeypatch):
    path = tmp_path / "c.json"
    A = build_thm2(M, cache=CCache(path))
    c3 = A.c(3)
    data = json.loads(path.read_text())
    assert data[CCache.key(A.family, 3, 256)]["c"] == str(c3)
    monkeypatch.setenv("CARLEMAN_CACHE", str(path))
    B = build_thm2(M, cache=CCache())
    assert B.cache.get(A.family, 3, 256)["c"] == str(c3)
    assert B.c(3) == c3
    assert not list(tmp_path.glob("*.tmp"))


def test_pd_start_index_and_witnesses(pd2):
    assert pd2.start_index == 2
    for n in range(2, 6):
        a = pd2.witness(n)
        assert a[0].certainly_gt(0) and a[1].certainly_gt(0)
        # second coordinate is e^(-1/x_1^2) of the first
        assert a[1].arb().overlaps((-1 / (a[0].arb() ** 2)).exp())
    with pytest.raises(ValueError):
        pd2.witness(1)


@pytest.mark.parametrize("n", [2, 3])
def test_pd_witness_divergence(pd2, n):
    z, _ = masterthm_derivative(pd2, pd2.witness(n), (2 * n, 0))
    assert z.abs_lower() >= math.factorial(2 * n) * pd2.target(n)


def test_pd_tail_shrinks_with_K(pd2):
    x = [Enclosure.exact(Fraction(1, 10)), Enclosure.exact(0)]
    a = MultiIndex.of((2, 1))
    assert pd2.tail_majorant(x, a, 30) < pd2.tail_majorant(x, a, 10)


def test_pd_values_stable_in_K(pd2):
    x = [Fraction(-1, 5), Fraction(1, 10)]
    alphas = [(0, 0), (1, 0), (2, 1)]
    a = masterthm_derivatives(pd2, x, alphas)
    b = masterthm_derivatives(pd2, x, alphas, K=70)
    for (za, _), (zb, _) in zip(a, b):
        assert za.acb().overlaps(zb.acb())


def test_pd_chain_rule_finite_difference(pd2):
    x = [Fraction(-1, 5), Fraction(1, 10)]
    h = Fraction(1, 2**16)
    (d, _), = masterthm_derivatives(pd2, x, [(1, 0)], K=40)
    f = lambda pt: masterthm_derivatives(pd2, pt, [(0, 0)], K=40)[0][0].acb()
    fd = (f([x[0] + h, x[1]]) - f([x[0] - h, x[1]])) / (2 * arb(h.numerator) / h.denominator)
    ref = d.acb()
    assert abs(complex(fd.mid()) - complex(ref.mid())) <= 1e-6 * abs(complex(ref.mid())) + 1e-12


def test_regions():
    S = Region.S(1, 1)
    assert region_contains(S, ["1/2", "1"]) == "yes"
    assert region_contains(S, ["1/2", "1/4"]) == "no"
    assert region_contains(S, ["-1/2", "1"]) == "no"
    Q = Region.Qcomplement()
    assert region_contains(Q, ["0", "1"]) == "yes"
    assert region_contains(Q, ["1", "1"]) == "no"
    P = Region.punctured()
    assert region_contains(P, ["0", "0"]) == "no"
    fuzzy = [Enclosure.ball(arb("0 +/- 1e-10")), Enclosure.exact(0)]
    assert region_contains(P, fuzzy) == "boundary-indeterminate"
    with pytest.raises(ValueError):
        Region.S(0, 1)


@pytest.mark.parametrize("t", [Fraction(1, 20), Fraction(1, 10), Fraction(1, 4), Fraction(2, 5)])
def test_s_distance_passes(t):
    r = s_distance_check(t)
    assert r.ok
    assert r.distance_lower >= r.bound


def test_s_distance_fail_and_scope():
    # a wide parabola hugs the flat point: the distance falls below e^(-1/t^2)
    r = s_distance_check(Fraction(1, 2), a=Fraction(1, 10**6), m=1)
    assert r.status in ("out-of-scope", "fail-certified")
    with pytest.raises(ValueError):
        s_distance_check(0)


@given(st.fractions(min_value=Fraction(1, 20), max_value=Fraction(1, 2), max_denominator=100))
@settings(max_examples=15, deadline=None)
def test_s_distance_property(t):
    r = s_distance_check(t)
    assert r.status == "pass-certified"
    assert r.distance_estimate >= float(r.bound) * (1 - 1e-12)


def test_compose_curve_matches_derivative(pd2):
    gamma = PolynomialCurve.from_json({"components": [["0", "1"], ["0", "0", "1"]]})
    t0 = Fraction(1, 10)
    jet = compose_curve(pd2, gamma, t0, 3)
    x = [t0, t0**2]
    (dx, _), (dy, _) = masterthm_derivatives(pd2, x, [(1, 0), (0, 1)])
    # d/dt f(t, t^2) = f_x + 2 t f_y
    chain = dx.acb() + 2 * arb(t0.numerator) / t0.denominator * dy.acb()
    assert jet[1].acb().overlaps(chain)
    f0, _ = masterthm_derivative(pd2, x, (0, 0))
    assert jet[0].acb().overlaps(f0.acb())
