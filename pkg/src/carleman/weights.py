"""Weight sequences M = (M_n) and the quantities built from them.

Families: ``gevrey(s)`` with M_n = (n!)^s, the quasianalytic ``qfamily`` with
ratios log(n + e), finite tables, the strict regularization of a sequence and
the shifted-constant sequences M^k used by the assemblies.

All values are :class:`~carleman.numerics.Enclosure` objects; integer Gevrey
orders and tables stay exact.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from flint import arb, ctx

from .numerics import (
    amin,
    Enclosure,
    IndeterminateAtPrecision,
    log2_arb,
    parse_rational,
    to_arb,
    to_fraction,
)

__all__ = [
    "OutOfTable",
    "InvalidConstant",
    "ScanExhausted",
    "AnalyticLikeOrScanTooShort",
    "WeightSequence",
    "Gevrey",
    "QFamily",
    "Table",
    "Regularized",
    "MkSequence",
    "gevrey",
    "qfamily",
    "table",
    "load_table",
    "parse_sequence",
    "weight",
    "ratio",
    "check_log_convex",
    "LogConvexReport",
    "phi",
    "PhiResult",
    "phi_identity_check",
    "PhiIdentityReport",
    "regularize_strict",
    "quasianalytic_diagnostic",
    "ClassVerdict",
    "inclusion_diagnostic",
    "InclusionReport",
    "b_sequence",
    "mk_sequence",
    "DEFAULT_SCAN_LIMIT",
]

DEFAULT_SCAN_LIMIT = 10**5


class OutOfTable(IndexError):
    pass


class InvalidConstant(ValueError):
    pass


class ScanExhausted(RuntimeError):
    pass


class AnalyticLikeOrScanTooShort(RuntimeError):
    """m_l never exceeded alpha within the scan limit (phi may be infinite)."""


# ---------------------------------------------------------------------------
# Sequence families
# ---------------------------------------------------------------------------


class WeightSequence:
    """Base class.  Subclasses implement ``_value(n)`` or ``_ratio(n)``.

    Values are memoized per working precision; exact values are shared by all
    precisions.  Extension of the memo is serialized by a lock.
    """

    family = "abstract"
    exact = False
    #: closed-form knowledge used by the diagnostics
    known_quasianalytic: Optional[bool] = None
    known_strictly_log_convex = False

    def __init__(self):
        self._lock = threading.RLock()
        self._memo: dict[int, list[Enclosure]] = {}
        self._ratio_memo: dict[tuple[int, int], Enclosure] = {}
        self.aux: dict = {}

    def _key(self) -> int:
        return -1 if self.exact else ctx.prec

    def M(self, n: int) -> Enclosure:
        if n < 0:
            raise ValueError("n must be non-negative")
        direct = self._value(n)
        if direct is not None:
            return direct
        with self._lock:
            memo = self._memo.setdefault(self._key(), [Enclosure.exact(1)])
            while len(memo) <= n:
                k = len(memo) - 1
                memo.append(memo[k] * self.ratio(k))
            return memo[n]

    def ratio(self, n: int) -> Enclosure:
        key = (self._key(), n)
        r = self._ratio_memo.get(key)
        if r is None:
            r = self._ratio(n)
            self._ratio_memo[key] = r
        return r

    def _value(self, n: int) -> Optional[Enclosure]:
        return None

    def _ratio(self, n: int) -> Enclosure:
        return self.M(n + 1) / self.M(n)

    def max_ratio_index(self) -> Optional[int]:
        """Largest n for which m_n is available (None when unbounded)."""
        return None

    def log2_M(self, n: int) -> arb:
        """Enclosure of log2 M_n."""
        return log2_arb(self.M(n).arb())

    def spec(self) -> str:
        return self.family

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.spec()}>"


class Gevrey(WeightSequence):
    known_quasianalytic = False
    known_strictly_log_convex = True

    def __init__(self, s):
        super().__init__()
        self.s = to_fraction(s)
        if self.s <= 0:
            raise ValueError("gevrey order must be positive")
        self.exact = self.s.denominator == 1
        self.family = f"gevrey:{self.s}"

    def _value(self, n):
        if self.exact:
            f = 1
            memo = self.aux.setdefault("fact", [1])
            with self._lock:
                while len(memo) <= n:
                    memo.append(memo[-1] * len(memo))
                f = memo[n]
            return Enclosure.exact(Fraction(f) ** int(self.s))
        return Enclosure(arb.fac_ui(n) ** to_arb(self.s), ctx.prec)

    def _ratio(self, n):
        return Enclosure.exact(n + 1).root(self.s)

    def log2_M(self, n):
        return to_arb(self.s) * arb(n + 1).lgamma() / arb(2).log()


class QFamily(WeightSequence):
    """m_n = log(n + e): strictly log-convex, non-analytic and quasianalytic."""

    family = "qfamily"
    known_quasianalytic = True
    known_strictly_log_convex = True

    def _ratio(self, n):
        return Enclosure((arb(n) + arb.const_e()).log(), ctx.prec)


class Table(WeightSequence):
    def __init__(self, values, path: str | None = None, validate: bool = True):
        super().__init__()
        self.values = [to_fraction(v) for v in values]
        self.exact = True
        self.path = path
        self.family = f"table:{path}" if path else "table"
        if validate:
            self.validate()

    def validate(self):
        if not self.values or self.values[0] != 1:
            raise ValueError("table must start with M_0 = 1")
        if any(v <= 0 for v in self.values):
            raise ValueError("table values must be positive")
        if any(b < a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("table must be non-decreasing")
        if len(self.values) >= 3:
            rep = check_log_convex(self, len(self.values) - 2, strict=False)
            if not rep.ok:
                raise ValueError(
                    f"table is not log-convex (first violation at n={rep.first_violation_index})"
                )

    def __len__(self):
        return len(self.values)

    def max_ratio_index(self):
        return len(self.values) - 2

    def _value(self, n):
        if n >= len(self.values):
            raise OutOfTable(f"M_{n} is beyond the table (length {len(self.values)})")
        return Enclosure.exact(self.values[n])

    def _ratio(self, n):
        return self.M(n + 1) / self.M(n)


class Regularized(WeightSequence):
    """Strictly log-convex regularization: M~_n = M_n * prod_{k<n} a_k."""

    def __init__(self, inner: WeightSequence, scan_limit: int = DEFAULT_SCAN_LIMIT):
        super().__init__()
        self.inner = inner
        self.scan_limit = scan_limit
        self.family = f"regularized({inner.spec()})"
        self.known_quasianalytic = inner.known_quasianalytic
        self.known_strictly_log_convex = True
        self._starts: list[int] = [0]  # n_k, extended lazily

    def _same_ratio(self, n: int) -> bool:
        """Decide m_{n+1} == m_n for the inner sequence."""
        a, b = self.inner.ratio(n), self.inner.ratio(n + 1)
        if a.is_exact and b.is_exact:
            if b.value < a.value:
                raise ValueError(f"inner sequence is not log-convex at n={n}")
            return a.value == b.value
        if a.certainly_lt(b):
            return False
        if a.certainly_eq(b):
            return True
        raise IndeterminateAtPrecision(f"cannot decide m_{n} == m_{n+1}", n)

    def _interval_of(self, n: int) -> tuple[int, int]:
        """Return (n_k, l_k) for the constancy interval containing n."""
        with self._lock:
            while True:
                start = self._starts[-1]
                if n < start:
                    idx = max(i for i, s in enumerate(self._starts) if s <= n)
                    return self._starts[idx], self._starts[idx + 1] - self._starts[idx]
                # extend: find the end of the interval beginning at `start`
                end = start
                while True:
                    if end - start > self.scan_limit:
                        raise ScanExhausted(
                            f"constancy interval starting at {start} not closed "
                            f"within {self.scan_limit} terms"
                        )
                    try:
                        same = self._same_ratio(end)
                    except IndexError as exc:
                        raise ScanExhausted(
                            f"constancy interval starting at {start} runs off the table"
                        ) from exc
                    if not same:
                        break
                    end += 1
                self._starts.append(end + 1)

    def a(self, n: int) -> Enclosure:
        nk, lk = self._interval_of(n)
        i = n - nk
        if i == 0:
            return Enclosure.exact(1)
        nxt = nk + lk
        jump = self.inner.ratio(nxt) / self.inner.ratio(nxt - 1)
        if jump.certainly_le(2):
            A = jump
        elif jump.certainly_ge(2):
            A = Enclosure.exact(2)
        else:
            A = Enclosure(amin(jump.arb(), arb(2)), ctx.prec)
        return A.root(Fraction(i, lk))

    def _ratio(self, n):
        return self.inner.ratio(n) * self.a(n)

    def _key(self):
        return ctx.prec


class MkSequence(WeightSequence):
    """M^k_n = 1 for k > n and c^(2n-2k+1) M_n for k <= n."""

    def __init__(self, inner: WeightSequence, k: int, c):
        super().__init__()
        if k < 1:
            raise ValueError("k must be >= 1")
        self.inner = inner
        self.k = k
        self.c = Enclosure.of(c)
        if not self.c.certainly_ge(inner.M(k)):
            raise InvalidConstant(f"c_{k} must certainly satisfy c_k >= M_k")
        self.exact = inner.exact and self.c.is_exact
        self.family = f"mk({inner.spec()},k={k})"
        self.known_quasianalytic = inner.known_quasianalytic

    def _value(self, n):
        if n < self.k:
            return Enclosure.exact(1)
        key = (self._key(), n)
        v = self._ratio_memo.get(("M",) + key)
        if v is None:
            v = self._cpow(2 * n - 2 * self.k + 1) * self.inner.M(n)
            self._ratio_memo[("M",) + key] = v
        return v

    def _cpow(self, e: int) -> Enclosure:
        return self.c**e

    def _ratio(self, n):
        if n < self.k - 1:
            return Enclosure.exact(1)
        if n == self.k - 1:
            return self.c * self.inner.M(self.k)
        return self.c * self.c * self.inner.ratio(n)

    def log2_M(self, n):
        if n < self.k:
            return arb(0)
        return (2 * n - 2 * self.k + 1) * log2_arb(self.c.arb()) + self.inner.log2_M(n)


def gevrey(s=1) -> Gevrey:
    return Gevrey(s)


def qfamily() -> QFamily:
    return QFamily()


def table(values, validate: bool = True) -> Table:
    return Table(values, validate=validate)


def load_table(path: str | Path, validate: bool = True) -> Table:
    """Load ``{"M": ["1", "1", "2", ...]}`` with exact decimal/rational strings."""
    data = json.loads(Path(path).read_text())
    values = [parse_rational(str(v)) for v in data["M"]]
    return Table(values, path=str(path), validate=validate)


def parse_sequence(text: str) -> WeightSequence:
    """Parse ``gevrey:<s>``, ``qfamily`` or ``table:<path>``."""
    text = text.strip()
    if text == "qfamily":
        return QFamily()
    kind, _, arg = text.partition(":")
    if kind == "gevrey" and arg:
        return Gevrey(parse_rational(arg))
    if kind == "table" and arg:
        return load_table(arg)
    raise ValueError(f"unrecognised sequence spec {text!r}")


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def weight(M: WeightSequence, n: int) -> Enclosure:
    return M.M(n)


def ratio(M: WeightSequence, n: int) -> Enclosure:
    return M.ratio(n)


@dataclass(frozen=True)
class LogConvexReport:
    ok: bool
    first_violation_index: Optional[int]
    depth: int
    strict: bool


def check_log_convex(M: WeightSequence, depth: int, strict: bool = False) -> LogConvexReport:
    """Certify m_{n+1} >= m_n (or > when strict) for all n < depth."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    for n in range(depth):
        a, b = M.ratio(n), M.ratio(n + 1)
        good = b.certainly_gt(a) if strict else b.certainly_ge(a)
        if good:
            continue
        bad = b.certainly_le(a) if strict else b.certainly_lt(a)
        if bad:
            return LogConvexReport(False, n, depth, strict)
        raise IndeterminateAtPrecision(f"log-convexity undecided at n={n}", n)
    return LogConvexReport(True, None, depth, strict)


@dataclass(frozen=True)
class PhiResult:
    value: Enclosure
    argmax_index: int
    is_tie: bool


def _term(M: WeightSequence, alpha: Enclosure, l: int) -> Enclosure:
    return alpha ** (l + 1) / M.M(l)


def _first_index(M, pred, limit: int) -> Optional[int]:
    """Smallest l <= limit with pred(l) true, assuming pred is monotone."""
    hi = 1
    while not pred(hi):
        if hi >= limit:
            return None
        hi = min(2 * hi, limit)
    if pred(0):
        return 0
    lo = 0  # pred(lo) false, pred(hi) true
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def phi(M: WeightSequence, alpha, scan_limit: int = DEFAULT_SCAN_LIMIT) -> PhiResult:
    """phi(alpha) = sup_l alpha^(l+1) / M_l.

    The terms increase while m_l <= alpha and decrease once m_l > alpha, so
    the supremum is attained on the (usually one or two element) window of
    indices where m_l is not certainly below alpha but not yet certainly
    above it.
    """
    alpha = Enclosure.of(alpha)
    if not alpha.certainly_gt(0):
        raise ValueError("alpha must be positive")
    cap = M.max_ratio_index()
    if cap is not None:
        scan_limit = min(scan_limit, cap)
    try:
        l1 = _first_index(M, lambda l: not M.ratio(l).certainly_lt(alpha), scan_limit)
        l2 = _first_index(M, lambda l: M.ratio(l).certainly_gt(alpha), scan_limit)
    except IndexError as exc:
        raise AnalyticLikeOrScanTooShort(str(exc)) from exc
    if l1 is None or l2 is None:
        raise AnalyticLikeOrScanTooShort(
            f"m_l does not exceed alpha within scan_limit={scan_limit}"
        )
    l2 = max(l2, l1)
    terms = [_term(M, alpha, l) for l in range(l1, l2 + 1)]
    value = terms[0]
    for t in terms[1:]:
        value = value.max(t)
    best = next(
        i for i, t in enumerate(terms) if not t.certainly_lt(value)
    )
    idx = l1 + best
    try:
        nxt = _term(M, alpha, idx + 1)
    except IndexError:
        return PhiResult(value, idx, False)
    if terms[best].is_exact and nxt.is_exact:
        tie = nxt.value == terms[best].value
    else:
        tie = terms[best].overlaps(nxt)
    return PhiResult(value, idx, tie)


@dataclass(frozen=True)
class PhiIdentityReport:
    n: int
    ok: bool
    lhs: Enclosure  # M_n * phi(m_n)
    rhs: Enclosure  # m_n^(n+1)
    exact: bool
    width: arb  # radius of lhs - rhs (0 on the exact path)


def phi_identity_check(M: WeightSequence, n: int, scan_limit: int = DEFAULT_SCAN_LIMIT) -> PhiIdentityReport:
    """Certify M_n * phi(m_n) = m_n^(n+1)."""
    m = M.ratio(n)
    p = phi(M, m, scan_limit)
    lhs = M.M(n) * p.value
    rhs = m ** (n + 1)
    if lhs.is_exact and rhs.is_exact:
        return PhiIdentityReport(n, lhs.value == rhs.value, lhs, rhs, True, arb(0))
    diff = (lhs - rhs).arb()
    return PhiIdentityReport(n, lhs.overlaps(rhs), lhs, rhs, False, diff.rad())


def regularize_strict(M: WeightSequence, scan_limit: int = DEFAULT_SCAN_LIMIT) -> WeightSequence:
    """Return a strictly log-convex sequence defining the same class.

    Sequences already known to be strictly log-convex are returned unchanged.
    """
    if M.known_strictly_log_convex:
        return M
    return Regularized(M, scan_limit)


@dataclass(frozen=True)
class ClassVerdict:
    status: str  # quasianalytic-known | non-quasianalytic-known | unknown
    partial_sum: Enclosure
    depth: int


def quasianalytic_diagnostic(M: WeightSequence, depth: int) -> ClassVerdict:
    """Partial sum of M_n / ((n+1) M_{n+1}) plus closed-form verdicts."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    s = Enclosure.exact(0)
    for n in range(depth + 1):
        s = s + 1 / (M.ratio(n) * (n + 1))
    if M.known_quasianalytic is True:
        status = "quasianalytic-known"
    elif M.known_quasianalytic is False:
        status = "non-quasianalytic-known"
    else:
        status = "unknown"
    return ClassVerdict(status, s, depth)


@dataclass(frozen=True)
class InclusionReport:
    sup_so_far: Enclosure
    trend: str  # increasing | decreasing | constant | mixed
    values: list = field(default_factory=list)


def inclusion_diagnostic(M: WeightSequence, N: WeightSequence, depth: int) -> InclusionReport:
    """sup_{1<=n<=depth} (M_n/N_n)^(1/n); diagnostic only."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    vals = []
    for n in range(1, depth + 1):
        q = M.M(n) / N.M(n)
        vals.append(q.root(Fraction(1, n)))
    sup = vals[0]
    for v in vals[1:]:
        sup = sup.max(v)
    ups = downs = 0
    for a, b in zip(vals, vals[1:]):
        if b.certainly_gt(a):
            ups += 1
        elif b.certainly_lt(a):
            downs += 1
    if ups and not downs:
        trend = "increasing"
    elif downs and not ups:
        trend = "decreasing"
    elif not ups and not downs:
        trend = "constant"
    else:
        trend = "mixed"
    return InclusionReport(sup, trend, vals)


def b_sequence(M: WeightSequence, n: int) -> int:
    """b_1 = 1 and b_{n+1} = 2 b_n when 2 b_n <= m_{n+1}, else b_n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    memo = M.aux.setdefault(("b", M._key()), [None, 1])
    with M._lock:
        while len(memo) <= n:
            k = len(memo) - 1
            b = memo[k]
            m = M.ratio(k + 1)
            if m.certainly_ge(2 * b):
                memo.append(2 * b)
            elif m.certainly_lt(2 * b):
                memo.append(b)
            else:
                raise IndeterminateAtPrecision(f"cannot decide 2*b_{k} <= m_{k + 1}", k + 1)
    return memo[n]


def mk_sequence(M: WeightSequence, k: int, c) -> MkSequence:
    return MkSequence(M, k, c)
