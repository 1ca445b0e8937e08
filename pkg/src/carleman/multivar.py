"""Derivatives of radial compositions g(|x|^2) and truncated jet arithmetic.

For f(x) = g(x_1^2 + ... + x_p^2),

    D^alpha f(x) = alpha! * sum  g^(n)(|x|^2) prod_j (2 x_j)^(k_j1) / prod (k_j1! k_j2!)

summed over tuples with k_j1 + 2 k_j2 = alpha_j and n = sum of all k.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

from flint import arb, ctx

from .numerics import ComplexEnclosure, Enclosure, LogMag, Ordering, log2_arb, log_compare, to_arb, to_fraction

__all__ = [
    "MultiIndex",
    "FdBTuple",
    "fdb_tuples",
    "fdb_derivative",
    "fdb_bound_check",
    "FdBBoundReport",
    "multinomial_sum",
    "TaylorJet",
    "PolynomialCurve",
    "load_curve",
    "compose_curve",
]


@dataclass(frozen=True)
class MultiIndex:
    components: tuple

    def __post_init__(self):
        if any((not isinstance(a, int)) or a < 0 for a in self.components):
            raise ValueError("multi-index entries must be non-negative integers")

    @classmethod
    def of(cls, alpha) -> "MultiIndex":
        if isinstance(alpha, MultiIndex):
            return alpha
        if isinstance(alpha, str):
            alpha = [int(a) for a in alpha.split(",")]
        return cls(tuple(int(a) for a in alpha))

    @property
    def p(self) -> int:
        return len(self.components)

    @property
    def order(self) -> int:
        return sum(self.components)

    @property
    def factorial(self) -> int:
        return math.prod(math.factorial(a) for a in self.components)

    def __iter__(self):
        return iter(self.components)

    def __str__(self):
        return ",".join(map(str, self.components))


@dataclass(frozen=True)
class FdBTuple:
    """Pairs (k_i1, k_i2), one per coordinate."""

    pairs: tuple

    @property
    def n(self) -> int:
        return sum(a + b for a, b in self.pairs)

    @property
    def flat(self) -> tuple:
        return tuple(v for pair in self.pairs for v in pair)

    @property
    def alpha(self) -> tuple:
        return tuple(a + 2 * b for a, b in self.pairs)

    @property
    def denominator(self) -> int:
        return math.prod(math.factorial(v) for v in self.flat)


def fdb_tuples(alpha) -> list[FdBTuple]:
    alpha = MultiIndex.of(alpha)
    choices = [[(a - 2 * q, q) for q in range(a // 2 + 1)] for a in alpha]
    return [FdBTuple(tuple(c)) for c in itertools.product(*choices)]


def multinomial_sum(alpha) -> int:
    """sum over the tuples of n! / prod k!."""
    return sum(math.factorial(t.n) // t.denominator for t in fdb_tuples(alpha))


GOracle = Union[Sequence, Callable[[int], object]]


def _oracle(g: GOracle) -> Callable[[int], ComplexEnclosure]:
    if callable(g):
        return lambda n: ComplexEnclosure.of(g(n))
    return lambda n: ComplexEnclosure.of(g[n])


def _coords(x) -> list[Enclosure]:
    return [Enclosure.of(v) for v in x]


def fdb_derivative(g: GOracle, x, alpha, normalized: bool = False) -> ComplexEnclosure:
    """D^alpha of g(|x|^2) at x.

    ``g(n)`` (or ``g[n]``) supplies g^(n)(|x|^2); with ``normalized=True`` it
    supplies g^(n)(|x|^2)/n! instead.  Exact inputs give an exact result.
    """
    alpha = MultiIndex.of(alpha)
    xs = _coords(x)
    if len(xs) != alpha.p:
        raise ValueError("point and multi-index dimensions differ")
    gn = _oracle(g)
    cache: dict = {}
    total = ComplexEnclosure.exact(0)
    for t in fdb_tuples(alpha):
        n = t.n
        if n not in cache:
            v = gn(n)
            cache[n] = v * math.factorial(n) if normalized else v
        mono = Enclosure.exact(Fraction(alpha.factorial, t.denominator))
        for xj, (k1, _) in zip(xs, t.pairs):
            if k1:
                mono = mono * (2 * xj) ** k1
        total = total + cache[n] * mono
    return total


@dataclass(frozen=True)
class FdBBoundReport:
    alpha: MultiIndex
    lhs: LogMag
    rhs: LogMag
    status: str

    @property
    def ok(self) -> bool:
        return self.status == "pass-certified"


def _norm_upper(xs: Sequence[Enclosure]) -> arb:
    s = arb(0)
    for v in xs:
        s += v.arb() * v.arb()
    return s.sqrt().upper()


def fdb_bound_check(g: GOracle, x, alpha, C, normalized: bool = False) -> FdBBoundReport:
    """|D^alpha g(|x|^2)| <= (4 p e^p (|x| + 1))^|alpha| |alpha|! C_|alpha|.

    ``C`` is a sequence or callable giving C_{|x|^2, j}.
    """
    alpha = MultiIndex.of(alpha)
    xs = _coords(x)
    val = fdb_derivative(g, xs, alpha, normalized=normalized)
    p, ell = alpha.p, alpha.order
    B = 4 * p * arb(p).exp()
    c = to_arb(C(ell) if callable(C) else C[ell])
    rhs = (B * (_norm_upper(xs) + 1)) ** ell * math.factorial(ell) * c
    lhs = val.log2mag()
    r = LogMag.of(Enclosure(rhs, ctx.prec))
    order = log_compare(lhs, r)
    if lhs.hi is None:
        status = "pass-certified"
    elif order is Ordering.LESS:
        status = "pass-certified"
    elif order is Ordering.GREATER:
        status = "fail-certified"
    else:
        status = "indeterminate"
    return FdBBoundReport(alpha, lhs, r, status)


# ---------------------------------------------------------------------------
# Truncated jets
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TaylorJet:
    """Coefficients of (t - t0)^j for j = 0..order."""

    t0: object
    coeffs: tuple

    @classmethod
    def of(cls, t0, coeffs, order: Optional[int] = None) -> "TaylorJet":
        cs = [ComplexEnclosure.of(c) for c in coeffs]
        if order is not None:
            cs = (cs + [ComplexEnclosure.exact(0)] * (order + 1))[: order + 1]
        return cls(t0, tuple(cs))

    @classmethod
    def constant(cls, t0, value, order: int) -> "TaylorJet":
        return cls.of(t0, [value], order)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, j):
        return self.coeffs[j]

    def _check(self, other: "TaylorJet"):
        if other.order != self.order:
            raise ValueError("jets of different orders")

    def __add__(self, other):
        if not isinstance(other, TaylorJet):
            other = TaylorJet.constant(self.t0, other, self.order)
        self._check(other)
        return TaylorJet(self.t0, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, TaylorJet):
            other = TaylorJet.constant(self.t0, other, self.order)
        return self + other.scale(-1)

    def scale(self, c) -> "TaylorJet":
        return TaylorJet(self.t0, tuple(a * c for a in self.coeffs))

    def __mul__(self, other):
        if not isinstance(other, TaylorJet):
            return self.scale(other)
        self._check(other)
        J = self.order
        out = []
        for j in range(J + 1):
            s = ComplexEnclosure.exact(0)
            for i in range(j + 1):
                s = s + self.coeffs[i] * other.coeffs[j - i]
            out.append(s)
        return TaylorJet(self.t0, tuple(out))

    __rmul__ = __mul__

    def truncate(self, order: int) -> "TaylorJet":
        return TaylorJet(self.t0, self.coeffs[: order + 1])

    def compose_into(self, outer: Sequence) -> "TaylorJet":
        """sum_n outer[n] (self - self[0])^n, truncated (Horner)."""
        J = self.order
        delta = TaylorJet(self.t0, (ComplexEnclosure.exact(0),) + self.coeffs[1:])
        outer = [ComplexEnclosure.of(c) for c in outer[: J + 1]]
        acc = TaylorJet.constant(self.t0, outer[-1], J)
        for c in reversed(outer[:-1]):
            acc = acc * delta + c
        return acc


@dataclass(frozen=True)
class PolynomialCurve:
    """gamma(t) with exact rational polynomial components (constant term first)."""

    components: tuple

    @classmethod
    def from_json(cls, data) -> "PolynomialCurve":
        if isinstance(data, str):
            data = json.loads(data)
        comps = data["components"]
        if not comps:
            raise ValueError("curve needs at least one component")
        return cls(tuple(tuple(to_fraction(c) for c in comp) for comp in comps))

    def to_json(self) -> dict:
        return {"components": [[str(c) for c in comp] for comp in self.components]}

    @property
    def p(self) -> int:
        return len(self.components)

    def value(self, t) -> tuple:
        t = to_fraction(t)
        return tuple(sum(c * t**i for i, c in enumerate(comp)) for comp in self.components)

    def shifted(self, t0) -> tuple:
        """Coefficients of gamma_i(t0 + s) in powers of s."""
        t0 = to_fraction(t0)
        out = []
        for comp in self.components:
            d = len(comp)
            coeffs = [Fraction(0)] * d
            for i, c in enumerate(comp):
                for r in range(i + 1):
                    coeffs[r] += c * math.comb(i, r) * t0 ** (i - r)
            out.append(tuple(coeffs))
        return tuple(out)

    def jets(self, t0, J: int) -> list[TaylorJet]:
        return [TaylorJet.of(t0, list(c), J) for c in self.shifted(t0)]


def load_curve(path) -> PolynomialCurve:
    return PolynomialCurve.from_json(json.loads(Path(path).read_text()))


def _poly_mul_abs(a: list, b: list, J: int) -> list:
    out = [arb(0)] * (J + 1)
    for i, x in enumerate(a):
        if i > J:
            break
        for k, y in enumerate(b):
            if i + k > J:
                break
            out[i + k] += x * y
    return out


def _tail_series(shifted, a, J: int) -> list:
    """Coefficient majorants of sum_{n<=J} D(s)^n, with D majorizing u_k(t0+s) - u_k(t0)."""
    D = [arb(0)] * (J + 1)
    for comp, ai in zip(shifted, a):
        dg = [arb(0)] + [to_arb(abs(c)) for c in comp[1:]]
        base = to_arb(abs(comp[0])) + ai.abs_upper()
        sq = _poly_mul_abs(dg, dg, J)
        for j in range(J + 1):
            extra = 2 * base * dg[j] if j < len(dg) else arb(0)
            D[j] += sq[j] + extra
    S = [arb(1)] + [arb(0)] * J
    P = [arb(1)] + [arb(0)] * J
    for _ in range(J):
        P = _poly_mul_abs(P, D, J)
        S = [s + q for s, q in zip(S, P)]
    return S


def compose_curve(assembly, gamma: PolynomialCurve, t0, J: int, tol=Fraction(1, 10**12), K: Optional[int] = None) -> TaylorJet:
    """Order-J jet of f o gamma at t0 for a radial assembly f.

    ``assembly`` provides ``p``, ``start_index``, ``witness(k)``, ``block(k)``
    and ``weight(k)``.  Blocks with index above K are bounded using
    |g_k^(n)/n!| <= 1 for n < k, which holds for every block at orders below
    its index; the resulting majorant is added to every coefficient.
    """
    from .poleseries import taylor_coeffs

    if J < 1:
        raise ValueError("J must be >= 1")
    if gamma.p != assembly.p:
        raise ValueError("curve dimension does not match the assembly")
    comps = gamma.jets(t0, J)
    n0 = assembly.start_index
    if K is None:
        # witnesses shrink with k, so a_{n0} gives a majorant valid for all K
        S0 = _tail_series(gamma.shifted(t0), assembly.witness(n0), J)
        K = n0 + J
        for j in range(J + 1):
            target = to_arb(tol) * assembly.M.M(j).arb()
            r = S0[j] / target
            if r > 1:
                K = max(K, int(math.ceil(float(log2_arb(r).upper()))))
    K = max(K, n0 + J)
    total = TaylorJet.constant(t0, 0, J)
    for k in range(n0, K + 1):
        a = assembly.witness(k)
        u = TaylorJet.constant(t0, 0, J)
        for comp, ai in zip(comps, a):
            d = comp - ai
            u = u + d * d
        u0 = u[0].re
        coeffs = [z for z, _ in taylor_coeffs(assembly.block(k), u0, J, tol=tol)]
        total = total + u.compose_into(coeffs).scale(assembly.weight(k))
    S = _tail_series(gamma.shifted(t0), assembly.witness(K + 1), J)
    tail_w = assembly.tail_weight(K)
    out = []
    for j, z in enumerate(total.coeffs):
        r = (tail_w * S[j]).upper()
        out.append(
            ComplexEnclosure(
                Enclosure(z.re.arb() + arb(0, r), ctx.prec),
                Enclosure(z.im.arb() + arb(0, r), ctx.prec),
            )
        )
    return TaylorJet(t0, tuple(out))
