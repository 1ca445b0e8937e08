"""Sums of shifted building blocks whose derivatives blow up along witness points.

One dimension: f = sum_k 2^-k h_k(x - a_k) with a_n = b_n^(-1/2), b_n = M_n^(1/n)
and h_k the block series over M^k.  Dimension p: f = sum_{k >= n0} 2^-k
g_k(|x - a_k|^2) with witnesses a_n = (sqrt(1/log b_n^(1/4)), b_n^(-1/4), 0, ...)
on the flat curve (t, exp(-1/t^2)).
"""

from __future__ import annotations

import json
import math
import os
import tempfile
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from flint import arb, ctx

from .multivar import MultiIndex, fdb_derivative, fdb_tuples
from .numerics import (
    amax,
    amin,
    ComplexEnclosure,
    Enclosure,
    NeedMorePrecision,
    ipow,
    log2_arb,
    to_arb,
    to_fraction,
)
from .poleseries import Certificate, PoleSeries, build_block, taylor_coeffs
from .weights import WeightSequence, mk_sequence, regularize_strict

__all__ = [
    "CCache",
    "Assembly1D",
    "AssemblyPD",
    "Region",
    "SDistanceReport",
    "build_thm2",
    "build_masterthm",
    "select_c",
    "assembly_coeff",
    "assembly_coeffs",
    "masterthm_derivative",
    "masterthm_derivatives",
    "region_contains",
    "s_distance_check",
]

DEFAULT_SLACK = 2
START_MARGIN = Fraction(1, 10**6)


# ---------------------------------------------------------------------------
# Persistent cache for the constants c_n
# ---------------------------------------------------------------------------


class CCache:
    """JSON map "<family>/<n>/<bits>" -> {"c": ..., "T_bound": ...}.

    Reads are lock-free on an in-memory copy; writes are serialized and land
    through an atomic rename.
    """

    def __init__(self, path=None):
        if path is None:
            path = os.environ.get("CARLEMAN_CACHE")
        self.path = Path(path) if path else None
        self._lock = threading.Lock()
        self._data: dict = {}
        if self.path is not None and self.path.exists():
            self._data = json.loads(self.path.read_text())

    @staticmethod
    def key(family: str, n: int, bits: int) -> str:
        return f"{family}/{n}/{bits}"

    def get(self, family: str, n: int, bits: int) -> Optional[dict]:
        return self._data.get(self.key(family, n, bits))

    def put(self, family: str, n: int, bits: int, c: int, T_bound: arb):
        entry = {"c": str(c), "T_bound": T_bound.str(20, radius=False)}
        with self._lock:
            self._data[self.key(family, n, bits)] = entry
            if self.path is not None:
                _atomic_write_json(self.path, self._data)


def _atomic_write_json(path: Path, data):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(data, fh, indent=1, sort_keys=True)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _ceil_int(x: arb) -> int:
    u = x.upper()
    if not u.is_finite():
        raise NeedMorePrecision("constant is not finite at this precision")
    f = int(u.floor().unique_fmpz())
    return f + 1


# ---------------------------------------------------------------------------
# Shared machinery
# ---------------------------------------------------------------------------


class _AssemblyBase:
    def __init__(self, M: WeightSequence, slack, cache: Optional[CCache]):
        self.M = M
        self.slack = to_fraction(slack)
        if self.slack < 1:
            raise ValueError("slack must be >= 1")
        self.cache = cache if cache is not None else CCache()
        self._c: dict = {}
        self._T: dict = {}
        self._blocks: dict = {}
        self._pts: dict = {}
        self._lock = threading.RLock()

    @property
    def family(self) -> str:
        raise NotImplementedError

    def growth_base(self, n: int) -> Enclosure:
        """b_n = M_n^(1/n)."""
        return self.M.M(n).root(Fraction(1, n))

    def c(self, n: int) -> int:
        if n not in self._c:
            select_c(self, n)
        return self._c[n]

    def T_bound(self, n: int) -> arb:
        self.c(n)
        return self._T[n]

    def guarantee(self, n: int) -> arb:
        """4^-n c_n M_n - T_n, to be compared with the witness target."""
        return arb(4) ** (-n) * self.c(n) * self.M.M(n).arb() - self.T_bound(n)

    def block(self, k: int) -> PoleSeries:
        with self._lock:
            s = self._blocks.get(k)
            if s is None:
                # the block is evaluated in ball arithmetic; exact c would
                # make every group coefficient a huge rational
                s = build_block(mk_sequence(self.M, k, arb(self.c(k))))
                self._blocks[k] = s
            return s

    def weight(self, k: int) -> Fraction:
        return Fraction(1, 2**k)

    def tail_weight(self, K: int) -> arb:
        """sum_{k > K} 2^-k."""
        return arb(2) ** (-K)


# ---------------------------------------------------------------------------
# One dimension
# ---------------------------------------------------------------------------


class Assembly1D(_AssemblyBase):
    start_index = 1
    p = 1

    def __init__(self, M: WeightSequence, slack=DEFAULT_SLACK, cache: Optional[CCache] = None):
        super().__init__(M, slack, cache)

    @property
    def family(self) -> str:
        return f"thm2:{self.M.spec()}:slack={self.slack}"

    def witness(self, n: int) -> Enclosure:
        key = (ctx.prec, n)
        v = self._pts.get(key)
        if v is None:
            v = self.M.M(n).root(Fraction(-1, 2 * n))
            self._pts[key] = v
        return v

    def interference(self, n: int, extra: int = 64) -> tuple[arb, int]:
        """T_n = sum_{k != n} 2^-k |a_n - a_k|^-(n+1), with certified tail."""
        an = self.witness(n).arb()
        K = n + extra
        s = arb(0)
        for k in range(1, K + 1):
            if k == n:
                continue
            gap = abs(an - self.witness(k).arb())
            if not (gap > 0):
                raise NeedMorePrecision(f"witness gap a_{n} - a_{k} not separated")
            s += arb(2) ** (-k) * gap ** (-(n + 1))
        gap = an - self.witness(K + 1).arb()
        if not (gap > 0):
            raise NeedMorePrecision("tail gap not separated")
        s += arb(2) ** (-K) * gap ** (-(n + 1))
        return s, K

    def target(self, n: int) -> arb:
        return arb(n) ** n * self.M.M(n).arb()

    def choose_K(self, j: int, tol) -> int:
        t = to_arb(tol) * self.M.M(j).arb()
        K = max(j + 1, int(math.ceil(-float(t.log().lower()) / math.log(2))) + 1)
        return K


def _select_c_value(assembly, n: int) -> tuple[int, arb]:
    M = assembly.M
    Mn = M.M(n).arb()
    T, _ = assembly.interference(n)
    need = arb(4) ** n * (assembly.target(n) + T) / Mn
    c = _ceil_int(to_arb(assembly.slack) * amax(need, Mn))
    return c, T


def select_c(assembly, n: int, slack=None) -> Enclosure:
    """Constant c_n making the witness lower bound hold; cached.

    Returns the integer c_n; ``assembly.T_bound(n)`` is the interference
    enclosure it was chosen against.
    """
    if slack is not None and to_fraction(slack) != assembly.slack:
        raise ValueError("slack is fixed per assembly")
    if n < assembly.start_index:
        raise ValueError(f"n must be >= {assembly.start_index}")
    with assembly._lock:
        if n in assembly._c:
            return Enclosure.exact(assembly._c[n])
        bits = ctx.prec
        hit = assembly.cache.get(assembly.family, n, bits)
        if hit is not None:
            c = int(hit["c"])
            T = arb(hit["T_bound"])
        else:
            c, T = _select_c_value(assembly, n)
            assembly.cache.put(assembly.family, n, bits, c, T)
        assembly._c[n] = c
        assembly._T[n] = T
        return Enclosure.exact(c)


def build_thm2(M: WeightSequence, slack=DEFAULT_SLACK, cache: Optional[CCache] = None) -> Assembly1D:
    return Assembly1D(regularize_strict(M), slack, cache)


def assembly_coeffs(
    assembly: Assembly1D, x, jmax: int, tol=Fraction(1, 10**12), K: Optional[int] = None
) -> list[tuple[ComplexEnclosure, Certificate]]:
    """Normalized coefficients 0..jmax of the one-dimensional assembly at x.

    Blocks k > K (K >= jmax) satisfy |coeff| <= M^k_j = 1 and contribute at
    most 2^-K in total.
    """
    if K is None:
        K = assembly.choose_K(jmax, tol)
    K = max(K, jmax)
    xa = to_arb(x) if not isinstance(x, Enclosure) else x.arb()
    acc = [ComplexEnclosure.exact(0)] * (jmax + 1)
    for k in range(1, K + 1):
        y = Enclosure(xa - assembly.witness(k).arb(), ctx.prec)
        vals = taylor_coeffs(assembly.block(k), y, jmax, tol=tol)
        w = assembly.weight(k)
        acc = [a + v * w for a, (v, _) in zip(acc, vals)]
    tail = assembly.tail_weight(K).upper()
    out = []
    for z in acc:
        d = arb(0, tail)
        zz = ComplexEnclosure(Enclosure(z.re.arb() + d, ctx.prec), Enclosure(z.im.arb() + d, ctx.prec))
        out.append((zz, Certificate(K, Enclosure(tail, ctx.prec), ctx.prec, False)))
    return out


def assembly_coeff(assembly: Assembly1D, x, j: int, tol=Fraction(1, 10**12), K: Optional[int] = None):
    return assembly_coeffs(assembly, x, j, tol, K)[j]


# ---------------------------------------------------------------------------
# Dimension p
# ---------------------------------------------------------------------------


class AssemblyPD(_AssemblyBase):
    def __init__(
        self,
        M: WeightSequence,
        p: int,
        slack=DEFAULT_SLACK,
        cache: Optional[CCache] = None,
        margin=START_MARGIN,
    ):
        if p < 2:
            raise ValueError("p must be >= 2")
        super().__init__(M, slack, cache)
        self.p = p
        self.margin = to_fraction(margin)
        n = 1
        while not self.growth_base(n).certainly_gt(1 + self.margin):
            n += 1
            if n > 10**4:
                raise ValueError("growth base never exceeds 1; analytic-like weights")
        self.start_index = n

    @property
    def family(self) -> str:
        return f"masterthm{self.p}:{self.M.spec()}:slack={self.slack}"

    def witness(self, n: int) -> tuple:
        if n < self.start_index:
            raise ValueError(f"witness a_{n} undefined below the start index {self.start_index}")
        key = (ctx.prec, n)
        v = self._pts.get(key)
        if v is None:
            q = self.growth_base(n).arb() ** (arb(1) / 4)
            first = (1 / q.log()).sqrt()
            v = (Enclosure(first, ctx.prec), Enclosure(1 / q, ctx.prec)) + tuple(
                Enclosure.exact(0) for _ in range(self.p - 2)
            )
            self._pts[key] = v
        return v

    def _norm(self, v) -> arb:
        s = arb(0)
        for c in v:
            s += _sq(c.arb())
        return s.sqrt()

    def _dist(self, n: int, k: int) -> arb:
        a, b = self.witness(n), self.witness(k)
        s = arb(0)
        for x, y in zip(a, b):
            s += _sq(x.arb() - y.arb())
        return s.sqrt()

    def lemma_constant(self) -> arb:
        """B(|K| + a) with B = 4 p e^p, |K| = |a_n0| + 1 and a = 1 + |a_n0|."""
        r = self._norm(self.witness(self.start_index))
        B = 4 * self.p * arb(self.p).exp()
        return B * (2 * r + 2)

    def interference(self, n: int, extra: int = 64) -> tuple[arb, int]:
        n0 = self.start_index
        K = n + extra
        L = self.lemma_constant() ** (2 * n)
        s = arb(0)
        for k in range(n0, K + 1):
            if k == n:
                continue
            d = self._dist(n, k)
            if not (d > 0):
                raise NeedMorePrecision(f"witness gap a_{n} - a_{k} not separated")
            s += arb(2) ** (-k) * (d ** (-2 * (2 * n + 1)) + 1)
        gap = self.witness(n)[0].arb() - self.witness(K + 1)[0].arb()
        if not (gap > 0):
            raise NeedMorePrecision("tail gap not separated")
        s += arb(2) ** (-K) * (gap ** (-2 * (2 * n + 1)) + 1)
        return L * s, K

    def target(self, n: int) -> arb:
        return arb(2 * n) ** (2 * n) * self.M.M(2 * n).arb()

    def choose_K(self, order: int, tol) -> int:
        t = to_arb(tol) * self.M.M(order).arb()
        return max(self.start_index + order + 1, int(math.ceil(-float(t.log().lower()) / math.log(2))) + 1)

    def block_jet(self, x: Sequence[Enclosure], k: int, order: int, tol) -> tuple:
        """(y, normalized coefficients of g_k at |y|^2) with y = x - a_k."""
        a = self.witness(k)
        y = [Enclosure(xi.arb() - ai.arb(), ctx.prec) for xi, ai in zip(x, a)]
        u = arb(0)
        for v in y:
            u += _sq(v.arb())
        vals = taylor_coeffs(self.block(k), Enclosure(u, ctx.prec), order, tol=tol)
        return y, [v for v, _ in vals]

    def tail_majorant(self, x: Sequence[Enclosure], alpha: MultiIndex, K: int, unweighted: bool = False) -> arb:
        """Bound on |D^alpha sum_{k > K} 2^-k g_k(|x - a_k|^2)| for K >= |alpha|.

        Uses |g_k^(n)/n!| <= M^k_n = 1 for n < k and |a_k,i| <= |a_{K+1},i|.
        """
        aK = self.witness(K + 1)
        bound = arb(0)
        for t in fdb_tuples(alpha):
            term = arb(math.factorial(t.n)) / t.denominator
            for xi, ai, (k1, _) in zip(x, aK, t.pairs):
                if k1:
                    term *= (2 * (xi.abs_upper() + ai.abs_upper())) ** k1
            bound += term
        bound = bound * alpha.factorial
        if not unweighted:
            bound = bound * self.tail_weight(K)
        return bound.upper()

    def tail_groups(self, x: Sequence[Enclosure], alphas: Sequence[MultiIndex], tol) -> int:
        """Smallest K (coarsely) with tail <= tol * |alpha|! M_|alpha| for every alpha."""
        order = max(a.order for a in alphas)
        K = self.start_index + order
        worst = arb(0)
        for a in alphas:
            # witnesses shrink with k, so a_{n0} bounds every later one
            m = self.tail_majorant(x, a, self.start_index - 1, unweighted=True)
            target = to_arb(tol) * math.factorial(a.order) * self.M.M(a.order).arb()
            worst = amax(worst, m / target)
        need = int(math.ceil(float(log2_arb(worst).upper()))) if worst > 1 else 0
        return max(K, need)


def build_masterthm(
    M: WeightSequence, p: int = 2, slack=DEFAULT_SLACK, cache: Optional[CCache] = None, margin=START_MARGIN
) -> AssemblyPD:
    return AssemblyPD(regularize_strict(M), p, slack, cache, margin)


def masterthm_derivatives(
    assembly: AssemblyPD, x, alphas: Sequence, tol=Fraction(1, 10**12), K: Optional[int] = None
) -> list[tuple[ComplexEnclosure, Certificate]]:
    """D^alpha f(x) (not normalized) for each alpha, sharing block jets."""
    alphas = [MultiIndex.of(a) for a in alphas]
    xs = [Enclosure.of(to_fraction(v) if isinstance(v, str) else v) for v in x]
    if any(a.p != assembly.p for a in alphas) or len(xs) != assembly.p:
        raise ValueError("dimension mismatch")
    order = max(a.order for a in alphas)
    if K is None:
        K = assembly.tail_groups(xs, alphas, tol)
    K = max(K, assembly.start_index + order)
    acc = [ComplexEnclosure.exact(0)] * len(alphas)
    for k in range(assembly.start_index, K + 1):
        y, coeffs = assembly.block_jet(xs, k, order, tol)
        w = assembly.weight(k)
        for i, a in enumerate(alphas):
            acc[i] = acc[i] + fdb_derivative(coeffs, y, a, normalized=True) * w
    out = []
    for z, a in zip(acc, alphas):
        r = assembly.tail_majorant(xs, a, K)
        d = arb(0, r)
        zz = ComplexEnclosure(Enclosure(z.re.arb() + d, ctx.prec), Enclosure(z.im.arb() + d, ctx.prec))
        out.append((zz, Certificate(K, Enclosure(r, ctx.prec), ctx.prec, False)))
    return out


def masterthm_derivative(assembly: AssemblyPD, x, alpha, tol=Fraction(1, 10**12), K: Optional[int] = None):
    return masterthm_derivatives(assembly, x, [alpha], tol, K)[0]


# ---------------------------------------------------------------------------
# Regions and the distance bound
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Region:
    kind: str  # "S", "Qcomplement", "punctured"
    p: int
    a: Optional[Fraction] = None
    m: Optional[int] = None

    @classmethod
    def S(cls, a, m: int, p: int = 2) -> "Region":
        a = to_fraction(a)
        if a <= 0 or m < 1:
            raise ValueError("S needs a > 0 and an integer m >= 1")
        return cls("S", p, a, m)

    @classmethod
    def Qcomplement(cls, p: int = 2) -> "Region":
        return cls("Qcomplement", p)

    @classmethod
    def punctured(cls, p: int = 2) -> "Region":
        return cls("punctured", p)


def _cmp(x: Enclosure, y) -> int:
    """1 if x > y, -1 if x < y, 0 if equal, None if undecided."""
    if x.certainly_gt(y):
        return 1
    if x.certainly_lt(y):
        return -1
    if x.certainly_eq(y):
        return 0
    return None


def region_contains(region: Region, x) -> str:
    xs = [Enclosure.of(to_fraction(v) if isinstance(v, str) else v) for v in x]
    if len(xs) != region.p:
        raise ValueError("point dimension differs from the region")
    if region.kind == "S":
        c1 = _cmp(xs[0], 0)
        rhs = Enclosure.exact(region.a) * xs[0] ** region.m
        c2 = _cmp(xs[1] - rhs, 0)
        if c1 == -1 or c2 == -1:
            return "no"
        if c1 is not None and c2 is not None:
            return "yes"
        return "boundary-indeterminate"
    if region.kind == "Qcomplement":
        c1, c2 = _cmp(xs[0], 0), _cmp(xs[1], 0)
        if c1 in (-1, 0) or c2 in (-1, 0):
            return "yes"
        if c1 == 1 and c2 == 1:
            return "no"
        return "boundary-indeterminate"
    if region.kind == "punctured":
        if all(v.is_exact for v in xs):
            return "no" if all(v.value == 0 for v in xs) else "yes"
        if any(v.certainly_gt(0) or v.certainly_lt(0) for v in xs):
            return "yes"
        return "boundary-indeterminate"
    raise ValueError(f"unknown region kind {region.kind!r}")


@dataclass(frozen=True)
class SDistanceReport:
    t: Enclosure
    distance_lower: arb
    distance_estimate: float
    bound: arb
    status: str  # pass-certified | fail-certified | indeterminate | out-of-scope

    @property
    def ok(self) -> bool:
        return self.status == "pass-certified"


def s_distance_check(t, a=1, m: int = 1, p: int = 2, max_depth: int = 60) -> SDistanceReport:
    """Certified lower bound on dist((t, e^(-1/t^2), 0, ...), S_{a,m}^p).

    Outside S the nearest point lies either on the ray {x_1 = 0, x_2 >= 0}
    (distance t) or on the curve x_2 = a x_1^m, x_1 in [0, 2t]; the curve part
    is bounded below by interval branch and bound.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    t = Enclosure.of(to_fraction(t) if isinstance(t, str) else t)
    if not t.certainly_gt(0):
        raise ValueError("t must be positive")
    ta = t.arb()
    aa = to_arb(a)
    y = (-1 / ta**2).exp()
    bound = y
    target = bound**2
    if not (y < aa * ta**m):
        return SDistanceReport(t, arb(0), 0.0, bound, "out-of-scope")

    def h(s: arb) -> arb:
        return _sq(s - ta) + _sq(aa * ipow(s, m) - y)

    best = float("inf")
    lower = (ta**2).lower()
    status = "pass-certified"
    stack = [(arb(0), 2 * ta, 0)]
    while stack:
        lo, hi, depth = stack.pop()
        mid = (lo + hi) / 2
        val_mid = h(mid)
        best = min(best, float(val_mid.mid()))
        if val_mid < target:
            status = "fail-certified"
            lower = arb(0)
            break
        box = h(_span(lo, hi))
        if box.lower() >= target:
            lower = amin(lower, box.lower())
            continue
        if depth >= max_depth:
            status = "indeterminate"
            lower = amin(lower, box.lower())
            continue
        stack.append((lo, mid, depth + 1))
        stack.append((mid, hi, depth + 1))
    best = min(best, float(ta.mid()) ** 2)
    dist_lo = lower.sqrt().lower() if lower > 0 else arb(0)
    if status == "pass-certified" and not (dist_lo >= bound):
        status = "indeterminate"
    return SDistanceReport(t, dist_lo, math.sqrt(best), bound, status)


def _sq(x: arb) -> arb:
    return x * x


def _span(lo: arb, hi: arb) -> arb:
    return lo.union(hi)
