"""Certified bound checks, growth classification and report writers."""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional, Sequence

from flint import arb, ctx

from .numerics import (
    amax,
    ComplexEnclosure,
    Enclosure,
    IndeterminateAtPrecision,
    LogMag,
    NeedMorePrecision,
    Ordering,
    log2_arb,
    log_compare,
    precision,
    to_arb,
)
from .poleseries import cj_enclosure
from .weights import WeightSequence

__all__ = [
    "BoundSpec",
    "Cell",
    "BoundReport",
    "check_bound",
    "search_threshold",
    "GrowthReport",
    "growth_classifier",
    "DominationReport",
    "domination_check",
    "ShapeFit",
    "fit_shape",
    "CjReport",
    "cj_check",
    "CSV_FIELDS",
    "report_csv",
    "report_json",
]

CSV_FIELDS = ["point", "order", "kind", "lhs_log2_lo", "lhs_log2_hi", "rhs_log2", "status", "margin_log2"]

PASS = "pass-certified"
FAIL = "fail-certified"
INDET = "indeterminate"

FORMULAS = {
    "AB^jM_j",
    "c3^-jM_j",
    "|x|^-(j+1)",
    "2^-jM_j",
    "2e^jM_j",
    "j^jM_j",
    "lemma",
    "custom",
}
ALIASES = {"n^nM_n": "j^jM_j", "(2n)^2nM_2n": "j^jM_j"}


@dataclass(frozen=True)
class BoundSpec:
    """Right-hand side of a bound on a normalized coefficient of order j.

    ``j^jM_j`` covers both witness shapes: evaluated at order 2n it is
    (2n)^(2n) M_(2n).  ``lemma`` is (4 p e^p (|x| + 1))^j M_j.
    """

    kind: str
    formula: str
    M: WeightSequence
    A: Fraction = Fraction(1)
    B: Fraction = Fraction(1)
    c: Fraction = Fraction(1)
    p: int = 2
    exception_threshold: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("upper", "lower"):
            raise ValueError("kind must be 'upper' or 'lower'")
        f = ALIASES.get(self.formula, self.formula)
        if f not in FORMULAS:
            raise ValueError(f"unknown bound formula {self.formula!r}")
        object.__setattr__(self, "formula", f)
        if min(self.A, self.B, self.c) <= 0 or self.p < 1:
            raise ValueError("bound parameters must be positive")

    def rhs(self, j: int, x=None) -> arb:
        f = self.formula
        Mj = self.M.M(j).arb()
        if f in ("AB^jM_j", "custom"):
            return to_arb(self.A) * to_arb(self.B) ** j * Mj
        if f == "c3^-jM_j":
            return to_arb(self.c) * arb(3) ** (-j) * Mj
        if f == "|x|^-(j+1)":
            return _norm(x) ** (-(j + 1))
        if f == "2^-jM_j":
            return arb(2) ** (-j) * Mj
        if f == "2e^jM_j":
            return 2 * arb(j).exp() * Mj
        if f == "j^jM_j":
            return arb(j) ** j * Mj
        if f == "lemma":
            B = 4 * self.p * arb(self.p).exp()
            return (B * (_norm(x) + 1)) ** j * Mj
        raise AssertionError(f)


def _norm(x) -> arb:
    if x is None:
        raise ValueError("this bound needs the evaluation point")
    if isinstance(x, (list, tuple)):
        s = arb(0)
        for v in x:
            a = to_arb(v)
            s += a * a
        return s.sqrt()
    return abs(to_arb(x))


@dataclass(frozen=True)
class Cell:
    point: str
    order: int
    kind: str
    lhs: LogMag
    rhs_log2: arb
    status: str
    margin_log2: Optional[float]
    certificate: Optional[object] = None

    def row(self) -> dict:
        return {
            "point": self.point,
            "order": self.order,
            "kind": self.kind,
            "lhs_log2_lo": _fmt(self.lhs.lo),
            "lhs_log2_hi": _fmt(self.lhs.hi),
            "rhs_log2": _fmt(self.rhs_log2),
            "status": self.status,
            "margin_log2": "" if self.margin_log2 is None else f"{self.margin_log2:.6g}",
        }


def _fmt(v) -> str:
    if v is None:
        return "-inf"
    return f"{float(v):.9g}"


@dataclass
class BoundReport:
    spec: BoundSpec
    cells: list = field(default_factory=list)
    excluded: list = field(default_factory=list)
    found_j0: Optional[int] = None

    @property
    def ok(self) -> bool:
        return all(c.status == PASS for c in self.cells)

    @property
    def statuses(self) -> dict:
        out: dict = {}
        for c in self.cells:
            out[c.status] = out.get(c.status, 0) + 1
        return out

    def failing(self) -> list:
        return [c for c in self.cells if c.status != PASS]


def _point_label(x) -> str:
    if isinstance(x, (list, tuple)):
        return ";".join(_point_label(v) for v in x)
    if isinstance(x, Enclosure):
        return str(x.value) if x.is_exact else x.value.mid().str(12, radius=False)
    return str(x)


def _compare(spec: BoundSpec, val, rhs: arb) -> tuple[LogMag, arb, str, Optional[float]]:
    lhs = LogMag.of(val) if not isinstance(val, LogMag) else val
    r = log2_arb(rhs)
    rl = LogMag(r, 1)
    order = log_compare(lhs, rl)
    if spec.kind == "upper":
        if lhs.hi is None:
            return lhs, r, PASS, None
        status = PASS if order is Ordering.LESS else FAIL if order is Ordering.GREATER else INDET
        margin = float(r.lower() - lhs.hi)
    else:
        if lhs.hi is None:
            return lhs, r, FAIL, None
        status = PASS if order is Ordering.GREATER else FAIL if order is Ordering.LESS else INDET
        margin = None if lhs.lo is None else float(lhs.lo - r.upper())
    return lhs, r, status, margin


Evaluator = Callable[[object, int], object]


def _eval(evaluator: Evaluator, x, j: int):
    out = evaluator(x, j)
    if isinstance(out, tuple) and len(out) == 2:
        return out
    return out, None


def check_bound(
    evaluator: Evaluator,
    points: Sequence,
    orders: Sequence[int],
    spec: BoundSpec,
) -> BoundReport:
    """Compare |evaluator(x, j)| against spec.rhs(j, x) on every cell.

    Orders below ``spec.exception_threshold`` are listed as excluded and not
    tested.  Indeterminate cells are re-evaluated once at doubled precision.
    """
    rep = BoundReport(spec)
    j0 = spec.exception_threshold
    for x in points:
        for j in orders:
            if j0 is not None and j < j0:
                rep.excluded.append((_point_label(x), j))
                continue
            rep.cells.append(_cell(evaluator, x, j, spec))
    return rep


def _cell(evaluator, x, j, spec) -> Cell:
    try:
        val, cert = _eval(evaluator, x, j)
        lhs, r, status, margin = _compare(spec, val, spec.rhs(j, x))
    except (NeedMorePrecision, IndeterminateAtPrecision):
        status = INDET
    if status == INDET:
        try:
            with precision(2 * ctx.prec):
                val, cert = _eval(evaluator, x, j)
                lhs, r, status, margin = _compare(spec, val, spec.rhs(j, x))
        except (NeedMorePrecision, IndeterminateAtPrecision):
            return Cell(_point_label(x), j, spec.kind, LogMag(None, 0), arb(0), INDET, None)
    return Cell(_point_label(x), j, spec.kind, lhs, r, status, margin, cert)


def search_threshold(
    evaluator: Evaluator, x, orders: Sequence[int], spec: BoundSpec, cap: int = 20
) -> BoundReport:
    """Find the smallest j0 <= cap such that every order >= j0 passes.

    The report keeps all cells (including those below j0) and records j0 in
    ``found_j0`` (None when no admissible j0 exists).  Orders below j0 are
    listed in ``excluded``.
    """
    rep = BoundReport(spec)
    cells = [_cell(evaluator, x, j, spec) for j in orders]
    j0 = None
    for i in range(len(cells) - 1, -1, -1):
        if cells[i].status != PASS:
            break
        j0 = cells[i].order
    if j0 is not None and j0 > cap:
        j0 = None
    rep.found_j0 = j0
    if j0 is None:
        rep.cells = cells
    else:
        rep.cells = [c for c in cells if c.order >= j0]
        rep.excluded = [(c.point, c.order) for c in cells if c.order < j0]
    return rep


# ---------------------------------------------------------------------------
# Growth and domination
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GrowthReport:
    orders: tuple
    rho: tuple  # float midpoints
    rho_upper: tuple
    sup_rho: float
    slope: float
    trend: str


def growth_classifier(
    coeffs: Mapping[int, object], M: WeightSequence, min_points: int = 5, linear_points: int = 8
) -> GrowthReport:
    """rho_j = (|c_j| / M_j)^(1/j), classified by the least-squares slope in j."""
    orders = sorted(j for j in coeffs if j >= 1)
    if len(orders) < min_points:
        raise ValueError(f"need at least {min_points} orders")
    rho, rho_up = [], []
    for j in orders:
        v = coeffs[j]
        lm = LogMag.of(v)
        if lm.hi is None:
            rho.append(0.0)
            rho_up.append(0.0)
            continue
        lM = M.log2_M(j)
        hi = (lm.hi - lM) / j
        mid = (lm.log2_value - lM) / j if lm.lo is not None else hi
        rho.append(2.0 ** float(mid.mid()))
        rho_up.append(2.0 ** float(hi.upper()))
    if any(r > 0 for r in rho):
        slope = statistics.linear_regression(orders, rho).slope
    else:
        slope = 0.0
    if slope >= 0.5 and len(orders) >= linear_points:
        trend = "linear-growth"
    elif slope < 0.1:
        trend = "bounded"
    else:
        trend = "other"
    return GrowthReport(tuple(orders), tuple(rho), tuple(rho_up), max(rho_up), slope, trend)


@dataclass(frozen=True)
class DominationReport:
    orders: tuple
    status: tuple
    dominant: tuple  # "re", "im" or None per order
    found_j0: Optional[int]
    parity_dominant: dict  # parity -> "re" | "im" | "mixed"
    cells: tuple = ()

    @property
    def ok(self) -> bool:
        return self.found_j0 is not None and all(v != "mixed" for v in self.parity_dominant.values())


def _dominance(z: ComplexEnclosure, ratio: Fraction) -> tuple[str, Optional[str]]:
    re_lo, re_hi = z.re.abs_lower(), z.re.abs_upper()
    im_lo, im_hi = z.im.abs_lower(), z.im.abs_upper()
    r = to_arb(ratio)
    if re_hi <= r * im_lo:
        return PASS, "im"
    if im_hi <= r * re_lo:
        return PASS, "re"
    if re_lo > r * im_hi and im_lo > r * re_hi:
        return FAIL, None
    return INDET, None


def domination_check(
    coeffs: Mapping[int, object],
    window: Optional[Sequence[int]] = None,
    ratio=Fraction(1, 3),
    cap: Optional[int] = None,
    point="",
) -> DominationReport:
    """Certify min(|Re|, |Im|) <= ratio * max(|Re|, |Im|) order by order.

    The threshold j0 is the smallest order from which every order in the
    window passes; the dominant component is then checked for constancy within
    each parity class.
    """
    orders = list(window) if window is not None else sorted(coeffs)
    status, dom, cells = [], [], []
    for j in orders:
        z = ComplexEnclosure.of(coeffs[j])
        s, d = _dominance(z, Fraction(ratio))
        status.append(s)
        dom.append(d)
        cells.append(_domination_cell(point, j, z, ratio, s))
    j0 = None
    for i in range(len(orders) - 1, -1, -1):
        if status[i] != PASS:
            break
        j0 = orders[i]
    if cap is not None and j0 is not None and j0 > cap:
        j0 = None
    parity: dict = {}
    if j0 is not None:
        for j, d in zip(orders, dom):
            if j < j0:
                continue
            prev = parity.get(j % 2)
            parity[j % 2] = d if prev in (None, d) else "mixed"
    return DominationReport(tuple(orders), tuple(status), tuple(dom), j0, parity, tuple(cells))


def _domination_cell(point, j: int, z: ComplexEnclosure, ratio, status: str) -> Cell:
    # lhs: the smaller component; rhs: ratio times the larger one
    re, im = z.re.abs_upper(), z.im.abs_upper()
    small, big = (z.re, z.im) if re <= im else (z.im, z.re)
    lhs = LogMag.of(small)
    big_lo = big.abs_lower()
    rhs = log2_arb(to_arb(ratio) * big_lo) if big_lo > 0 else arb("-inf")
    margin = None
    if lhs.hi is not None and rhs.is_finite():
        margin = float(rhs.lower() - lhs.hi)
    return Cell(_point_label(point), j, "domination", lhs, rhs, status, margin)


@dataclass(frozen=True)
class ShapeFit:
    A: Fraction
    B: Fraction
    per_order: dict  # order -> upper bound of max |value| / M_order

    def within(self, B_max) -> bool:
        return to_arb(self.B) <= to_arb(B_max)


def fit_shape(values: Iterable[tuple], M: WeightSequence) -> ShapeFit:
    """Constants with |v| <= A B^j M_j for every (j, v) given.

    ``v`` are normalized values (already divided by j!).  A and B are rounded
    up to rationals so the bound holds exactly for the enclosures.
    """
    r: dict = {}
    for j, v in values:
        hi = LogMag.of(v).hi
        if hi is None:
            continue
        q = hi - M.log2_M(j)
        r[j] = q if j not in r else amax(r[j], q)
    log_A = amax(arb(0), r.get(0, arb(0)).upper())
    log_B = arb(0)
    for j, q in r.items():
        if j >= 1:
            log_B = amax(log_B, ((q - log_A) / j).upper())
    A = _round_up(arb(2) ** log_A)
    B = _round_up(arb(2) ** log_B)
    return ShapeFit(A, B, {j: float(v) for j, v in sorted(r.items())})


def _round_up(x: arb) -> Fraction:
    u = x.upper()
    num = int((u * 2**40).ceil().unique_fmpz()) + 1
    return Fraction(num, 2**40)


# ---------------------------------------------------------------------------
# C_j
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CjReport:
    values: dict
    decreasing: bool
    c20_below_eighth: bool
    first_non_decrease: Optional[int]

    @property
    def ok(self) -> bool:
        return self.decreasing and self.c20_below_eighth


def cj_check(j_max: int) -> CjReport:
    """Certified C_1..C_jmax; monotone decrease on [3, j_max] and C_20 < 1/8."""
    if j_max < 2:
        raise ValueError("j_max must be >= 2")
    vals = {j: cj_enclosure(j) for j in range(1, max(j_max, 20) + 1)}
    first_bad = None
    for j in range(3, j_max):
        if not vals[j + 1].certainly_lt(vals[j]):
            first_bad = j
            break
    return CjReport(
        {j: v for j, v in vals.items() if j <= j_max},
        first_bad is None,
        vals[20].certainly_lt(Fraction(1, 8)),
        first_bad,
    )


# ---------------------------------------------------------------------------
# Writers
# ---------------------------------------------------------------------------


def report_csv(reports: Iterable[BoundReport]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for rep in reports:
        for c in rep.cells:
            w.writerow(c.row())
    return buf.getvalue()


def report_json(reports: Iterable[BoundReport]) -> str:
    out = []
    for rep in reports:
        cells = []
        for c in rep.cells:
            row = c.row()
            cert = c.certificate
            if cert is not None and hasattr(cert, "to_json"):
                row.update(cert.to_json())
            cells.append(row)
        out.append(
            {
                "kind": rep.spec.kind,
                "formula": rep.spec.formula,
                "exception_threshold": rep.spec.exception_threshold,
                "found_j0": rep.found_j0,
                "excluded": [list(e) for e in rep.excluded],
                "cells": cells,
            }
        )
    return json.dumps(out, indent=1, sort_keys=True)
