"""Pole series on the real line with certified Taylor coefficients.

Two constructions are provided:

* ``thm1``: group k carries weight 1/(3^k phi(m_k)) and the 2 b_k + 1 poles
  a/b_k + i/m_k, a = -b_k..b_k;
* ``block``: group k carries weight 1/(2^k phi(m_k)) and the single pole i/m_k.

The j-th normalized coefficient f^(j)(x)/j! of a sum of simple poles is
sum_k coeff_k sum_z (-1)^j (x - z)^-(j+1).  Truncating after K groups leaves a
tail bounded by a closed-form geometric majorant, which is folded into the
radius of the returned enclosure.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from flint import acb, arb, ctx

from .numerics import (
    amax,
    amin,
    ComplexEnclosure,
    Enclosure,
    MAX_PREC,
    NeedMorePrecision,
    precision,
    to_arb,
    to_fraction,
)
from .weights import WeightSequence, b_sequence, phi

__all__ = [
    "TailNotSmallEnough",
    "PoleGroup",
    "PoleSeries",
    "Certificate",
    "DyadicPoint",
    "build_thm1",
    "build_block",
    "tail_majorant",
    "taylor_coeff",
    "taylor_coeffs",
    "partial_sums",
    "real_variant_coeff",
    "real_plus_imag",
    "cj_enclosure",
    "DEFAULT_MAX_GROUPS",
]

DEFAULT_MAX_GROUPS = 2000
# exact evaluation is used automatically below this many pole-order products
EXACT_BUDGET = 3000


class TailNotSmallEnough(RuntimeError):
    pass


@dataclass(frozen=True)
class DyadicPoint:
    """t = p / 2^q in (-1, 1), stored reduced."""

    p: int
    q: int

    def __post_init__(self):
        if self.q < 0:
            raise ValueError("exponent must be non-negative")
        if self.p != 0 and self.p % 2 == 0 and self.q > 0:
            raise ValueError("dyadic point not reduced")
        if abs(self.p) >= 2**self.q:
            raise ValueError("dyadic point must lie in (-1, 1)")

    @classmethod
    def from_fraction(cls, x) -> "DyadicPoint":
        x = to_fraction(x)
        den = x.denominator
        if den & (den - 1):
            raise ValueError(f"{x} is not dyadic")
        return cls(x.numerator, den.bit_length() - 1)

    def to_fraction(self) -> Fraction:
        return Fraction(self.p, 2**self.q)


@dataclass(frozen=True)
class PoleGroup:
    k: int
    coeff: Enclosure
    poles_re: tuple  # Fractions
    pole_im: Enclosure

    @property
    def poles(self) -> list[ComplexEnclosure]:
        return [ComplexEnclosure(Enclosure.exact(r), self.pole_im) for r in self.poles_re]

    def term_bound(self, j: int) -> Enclosure:
        """|coeff| * sum over poles of |Im z|^-(j+1)."""
        return self.coeff * len(self.poles_re) / self.pole_im ** (j + 1)


@dataclass(frozen=True)
class Certificate:
    groups_used: int
    tail_bound: Enclosure
    precision_bits: int
    exact_partial: bool = False

    def to_json(self) -> dict:
        return {
            "K": self.groups_used,
            "tail_bound": self.tail_bound.upper().str(6, radius=False),
            "precision_bits": self.precision_bits,
            "exact_partial": self.exact_partial,
        }


class PoleSeries:
    """Lazily generated stream of pole groups (memoized, thread-safe)."""

    def __init__(self, kind: str, weights: WeightSequence):
        if kind not in ("thm1", "block"):
            raise ValueError(f"unknown pole series kind {kind!r}")
        self.kind = kind
        self.weights = weights
        self._groups: dict = {}
        self._lock = threading.RLock()

    def __repr__(self):
        return f"<PoleSeries {self.kind} over {self.weights.spec()}>"

    @property
    def exact(self) -> bool:
        return self.weights.exact

    def group(self, k: int) -> PoleGroup:
        if k < 1:
            raise ValueError("groups start at k = 1")
        key = (-1 if self.exact else ctx.prec, k)
        g = self._groups.get(key)
        if g is None:
            with self._lock:
                g = self._groups.get(key)
                if g is None:
                    g = self._make_group(k)
                    self._groups[key] = g
        return g

    def _make_group(self, k: int) -> PoleGroup:
        M = self.weights
        m = M.ratio(k)
        ph = phi(M, m).value
        if self.kind == "thm1":
            b = b_sequence(M, k)
            coeff = 1 / (ph * 3**k)
            re = tuple(Fraction(a, b) for a in range(-b, b + 1))
        else:
            coeff = 1 / (ph * 2**k)
            re = (Fraction(0),)
        return PoleGroup(k, coeff, re, 1 / m)

    def groups(self, K: int):
        return [self.group(k) for k in range(1, K + 1)]

    def pole_count(self, K: int) -> int:
        return sum(len(self.group(k).poles_re) for k in range(1, K + 1))


def build_thm1(M: WeightSequence) -> PoleSeries:
    return PoleSeries("thm1", M)


def build_block(M: WeightSequence) -> PoleSeries:
    return PoleSeries("block", M)


# ---------------------------------------------------------------------------
# Tail control
# ---------------------------------------------------------------------------


def _geom_factor(kind: str, K: int) -> arb:
    if kind == "thm1":
        return 6 * (arb(2) / 3) ** (K + 1) + arb(3) / 2 * arb(3) ** (-(K + 1))
    return arb(2) ** (-K)


def tail_majorant(series: PoleSeries, j: int, K: int) -> Enclosure:
    """Bound on the sum of the group majorants over k > K (times M_j)."""
    if K < 1:
        raise ValueError("K must be >= 1")
    return Enclosure(_geom_factor(series.kind, K) * series.weights.M(j).arb(), ctx.prec)


def _tail_bound(series: PoleSeries, x: arb, j: int, K: int) -> arb:
    """Tail bound used in evaluation; block series also use phi(m_k) >= 1."""
    t = tail_majorant(series, j, K).arb()
    if series.kind == "block":
        ax = x.abs_lower()
        if ax > 0:
            t = amin(t, arb(2) ** (-K) * ax ** (-(j + 1)))
    return t.upper()


def _scale(series: PoleSeries, x: arb, j: int) -> arb:
    s = series.weights.M(j).arb()
    if series.kind == "block":
        ax = x.abs_lower()
        if ax > 0:
            s = amin(s, ax ** (-(j + 1)))
    return s


def _choose_K(series: PoleSeries, x: arb, j: int, tol, max_groups: int) -> int:
    """Smallest K whose tail is at most tol times the scale of coefficient j."""
    tol = to_arb(tol)
    target = tol * _scale(series, x, j)
    if series.kind == "block":
        K = max(1, int(math.ceil(-float(tol.log().upper()) / math.log(2))))
    else:
        K = max(1, int(math.ceil(math.log(7 / float(tol.lower())) / math.log(1.5))) - 1)
    while K <= max_groups and not (_tail_bound(series, x, j, K) <= target):
        K += 1
    while K > 1 and _tail_bound(series, x, j, K - 1) <= target:
        K -= 1
    if K > max_groups:
        raise TailNotSmallEnough(f"tolerance {tol} needs more than {max_groups} groups")
    return K


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _is_rational(x) -> bool:
    if isinstance(x, (int, Fraction, DyadicPoint)):
        return True
    return isinstance(x, Enclosure) and x.is_exact


def _as_fraction(x) -> Fraction:
    if isinstance(x, DyadicPoint):
        return x.to_fraction()
    return to_fraction(x)


def _as_arb(x) -> arb:
    if isinstance(x, DyadicPoint):
        return to_arb(x.to_fraction())
    return to_arb(x)


def _partial_ball(series: PoleSeries, x: arb, J: int, K: int) -> list:
    acc = [acb(0)] * (J + 1)
    for g in series.groups(K):
        c = g.coeff.arb()
        im = g.pole_im.arb()
        S = [acb(0)] * (J + 1)
        for r in g.poles_re:
            w = 1 / acb(x - to_arb(r), -im)
            p = w
            for j in range(J + 1):
                S[j] += p
                p *= w
        for j in range(J + 1):
            acc[j] += c * S[j]
    return [a if j % 2 == 0 else -a for j, a in enumerate(acc)]


def _partial_exact(series: PoleSeries, x: Fraction, J: int, K: int) -> list:
    acc = [(Fraction(0), Fraction(0))] * (J + 1)
    for g in series.groups(K):
        c = g.coeff.value
        im = g.pole_im.value
        S = [[Fraction(0), Fraction(0)] for _ in range(J + 1)]
        for r in g.poles_re:
            u, v = x - r, -im
            n2 = u * u + v * v
            wr, wi = u / n2, -v / n2
            pr, pi = wr, wi
            for j in range(J + 1):
                S[j][0] += pr
                S[j][1] += pi
                pr, pi = pr * wr - pi * wi, pr * wi + pi * wr
        acc = [(a[0] + c * s[0], a[1] + c * s[1]) for a, s in zip(acc, S)]
    out = []
    for j, (re, im) in enumerate(acc):
        sign = 1 if j % 2 == 0 else -1
        out.append(ComplexEnclosure.exact(sign * re, sign * im))
    return out


def partial_sums(series: PoleSeries, x, J: int, K: int, backend: str = "ball") -> list:
    """Normalized coefficients 0..J of the first K groups (no tail)."""
    if series.kind == "thm1":
        _check_thm1_domain(x)
    if backend == "exact":
        if not (_is_rational(x) and series.exact):
            raise ValueError("exact backend needs a rational point and exact weights")
        return _partial_exact(series, _as_fraction(x), J, K)
    return [ComplexEnclosure.from_acb(z) for z in _partial_ball(series, _as_arb(x), J, K)]


def _check_thm1_domain(x):
    xa = _as_arb(x)
    if not (xa.abs_upper() < 1):
        raise ValueError("thm1 series is evaluated on (-1, 1) only")


def _add_disc(z: ComplexEnclosure, r: arb) -> ComplexEnclosure:
    # the square [-r, r]^2 contains the disc of radius r
    d = arb(0, r)
    return ComplexEnclosure(
        Enclosure(z.re.arb() + d, ctx.prec), Enclosure(z.im.arb() + d, ctx.prec)
    )


def taylor_coeffs(
    series: PoleSeries,
    x,
    jmax: int,
    *,
    tol=None,
    K: Optional[int] = None,
    backend: str = "auto",
    max_groups: int = DEFAULT_MAX_GROUPS,
    max_prec: int = MAX_PREC,
) -> list[tuple[ComplexEnclosure, Certificate]]:
    """Certified enclosures of f^(j)(x)/j! for j = 0..jmax.

    Pass either ``K`` (groups summed explicitly) or ``tol`` (tail at most
    ``tol`` times the coefficient scale, M_j; block series use
    min(M_j, |x|^-(j+1))).  ``backend`` is ``"exact"``, ``"ball"`` or
    ``"auto"``; the exact backend sums the K groups in rational arithmetic and
    only the tail is an interval.
    """
    if jmax < 0:
        raise ValueError("j must be >= 0")
    if series.kind == "thm1":
        _check_thm1_domain(x)
    bits = ctx.prec
    while True:
        try:
            with precision(bits):
                return _taylor_coeffs(series, x, jmax, tol, K, backend, max_groups)
        except NeedMorePrecision:
            if bits * 2 > max_prec:
                raise
            bits *= 2


def _taylor_coeffs(series, x, jmax, tol, K, backend, max_groups):
    xa = _as_arb(x)
    if K is None:
        if tol is None:
            tol = Fraction(1, 10**12)
        Ks = [_choose_K(series, xa, j, tol, max_groups) for j in range(jmax + 1)]
    else:
        if K < 1:
            raise ValueError("K must be >= 1")
        Ks = [K] * (jmax + 1)
    Kmax = max(Ks)
    if backend == "auto":
        rational = _is_rational(x) and series.exact
        backend = (
            "exact"
            if rational and series.pole_count(Kmax) * (jmax + 1) <= EXACT_BUDGET
            else "ball"
        )
    if backend == "exact":
        parts = _partial_exact(series, _as_fraction(x), jmax, Kmax)
    elif backend == "ball":
        parts = [ComplexEnclosure.from_acb(z) for z in _partial_ball(series, xa, jmax, Kmax)]
    else:
        raise ValueError(f"unknown backend {backend!r}")
    out = []
    for j, z in enumerate(parts):
        tail = _tail_bound(series, xa, j, Kmax)
        if not z.is_exact:
            rad = amax(z.re.radius, z.im.radius)
            scale = _scale(series, xa, j)
            if not rad.is_finite() or rad > scale * arb(2) ** (-(ctx.prec // 2)) + tail:
                raise NeedMorePrecision(f"rounding error dominates coefficient {j}")
        cert = Certificate(Kmax, Enclosure(tail, ctx.prec), ctx.prec, backend == "exact")
        out.append((_add_disc(z, tail), cert))
    return out


def taylor_coeff(series: PoleSeries, x, j: int, **kw) -> tuple[ComplexEnclosure, Certificate]:
    """Single-order version of :func:`taylor_coeffs`."""
    return taylor_coeffs(series, x, j, **kw)[j]


def real_plus_imag(z: ComplexEnclosure) -> Enclosure:
    return z.real_plus_imag()


def real_variant_coeff(series: PoleSeries, x, j: int, **kw) -> tuple[Enclosure, Certificate]:
    """Normalized coefficient of g = Re f + Im f."""
    z, cert = taylor_coeff(series, x, j, **kw)
    return real_plus_imag(z), cert


# ---------------------------------------------------------------------------
# Lattice interference constant
# ---------------------------------------------------------------------------


def cj_enclosure(j: int, N: Optional[int] = None) -> Enclosure:
    """C_j = 2 sum_{n>=1} (n^2+1)^(-(j+1)/2), for j >= 1.

    Terms n < N are summed; the rest is bounded by 2 * int_{N-1}^inf x^-(j+1) dx.
    """
    if j < 1:
        raise ValueError("C_j diverges for j < 1")
    if N is None:
        N = min(20000, max(64, int(2 ** (40 / j)) + 2))
    e = -arb(j + 1) / 2
    s = arb(0)
    for n in range(1, N):
        s += arb(n * n + 1) ** e
    t = (2 * arb(N - 1) ** (-j) / j).upper()
    # the omitted terms lie in [0, t]
    return Enclosure(2 * s + t / 2 + arb(0, (t / 2).upper()), ctx.prec)
