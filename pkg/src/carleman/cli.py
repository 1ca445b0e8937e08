"""Command-line front end.

    carleman weights gevrey:1 --depth 5
    carleman coeff --construction thm1 --x 1/2 --j 0
    carleman verify --suite prop31 --jmax 40 --out report.csv
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from flint import arb, ctx

from .numerics import (
    DEFAULT_PREC,
    IndeterminateAtPrecision,
    LogMag,
    NeedMorePrecision,
    parse_rational,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_PARSE = 2
EXIT_INDETERMINATE = 3
EXIT_IO = 4

SUITES = ("prop31", "prop41", "divergence", "masterthm", "sdistance", "cj")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    family: str = "gevrey:1"
    construction: str = "thm1"
    p: int = 2
    precision_bits: int = DEFAULT_PREC
    tolerance: str = "1e-12"
    terms: Optional[int] = None
    points: list = field(default_factory=list)
    orders: list = field(default_factory=list)
    alphas: list = field(default_factory=list)
    out: Optional[str] = None
    fmt: str = "csv"
    cache: Optional[str] = None
    workers: int = 1

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        data = json.loads(text)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def tol(self) -> Fraction:
        return parse_rational(self.tolerance)


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def atomic_write(path: str | Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix="." + path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(cfg: RunConfig, text: str):
    if cfg.out:
        atomic_write(cfg.out, text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _num(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    return x.str(15, radius=False) if isinstance(x, arb) else str(x)


def _enc(e) -> str:
    return str(e.value) if e.is_exact else _num(e.arb())


def _point(text: str):
    text = text.strip()
    if "," in text:
        return [parse_rational(t) for t in text.split(",")]
    return parse_rational(text)


def _range_spec(text: str) -> list[Fraction]:
    """a:b:n -> n evenly spaced rationals from a to b."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"expected a:b:n, got {text!r}")
    a, b, n = parse_rational(parts[0]), parse_rational(parts[1]), int(parts[2])
    if n < 1:
        raise UsageError("range needs n >= 1")
    if n == 1:
        return [a]
    return [a + (b - a) * i / (n - 1) for i in range(n)]


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _sequence(spec: str):
    from .weights import parse_sequence

    try:
        return parse_sequence(spec)
    except (ValueError, OSError) as e:
        raise UsageError(str(e)) from e


def cmd_weights(cfg: RunConfig, depth: int) -> int:
    from .weights import b_sequence, check_log_convex

    M = _sequence(cfg.family)
    lc = check_log_convex(M, depth)
    rows = []
    for n in range(depth + 1):
        row = {"n": n, "M": _enc(M.M(n)), "m": _enc(M.ratio(n))}
        row["b"] = b_sequence(M, n) if n >= 1 else ""
        rows.append(row)
    status = "log-convex" if lc.ok else f"violation at {lc.first_violation_index}"
    if cfg.fmt == "json":
        _emit(cfg, json.dumps({"family": cfg.family, "rows": rows, "log_convex": status}, indent=1))
    else:
        lines = ["n,M,m,b"] + [f"{r['n']},{r['M']},{r['m']},{r['b']}" for r in rows]
        lines.append(f"# {status}")
        _emit(cfg, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_phi(cfg: RunConfig, alpha: str) -> int:
    from .weights import phi

    M = _sequence(cfg.family)
    r = phi(M, parse_rational(alpha))
    out = {
        "alpha": alpha,
        "phi": _enc(r.value),
        "argmax": r.argmax_index,
        "tie": r.is_tie,
    }
    _emit(cfg, json.dumps(out))
    return EXIT_OK


def _enclosure_json(z, cert) -> dict:
    out = {}
    for part in ("re", "im"):
        e = getattr(z, part)
        a = e.arb()
        out[part] = {"mid": a.mid().str(20, radius=False), "rad": a.rad().str(3, radius=False)}
    if cert is not None:
        out.update(cert.to_json())
    return out


def cmd_coeff(cfg: RunConfig, x: str, j: Optional[int], alpha: Optional[str]) -> int:
    from .assemblies import assembly_coeff, build_masterthm, build_thm2, masterthm_derivative, CCache
    from .poleseries import build_block, build_thm1, taylor_coeff

    M = _sequence(cfg.family)
    tol = cfg.tol()
    c = cfg.construction
    if c in ("thm1", "block"):
        if j is None:
            raise UsageError("--j is required")
        series = build_thm1(M) if c == "thm1" else build_block(M)
        kw = {"K": cfg.terms} if cfg.terms else {"tol": tol}
        z, cert = taylor_coeff(series, _point(x), j, **kw)
    elif c == "thm2":
        if j is None:
            raise UsageError("--j is required")
        A = build_thm2(M, cache=CCache(cfg.cache))
        z, cert = assembly_coeff(A, _point(x), j, tol, cfg.terms)
    elif c == "masterthm":
        if alpha is None:
            raise UsageError("--alpha is required for masterthm")
        A = build_masterthm(M, cfg.p, cache=CCache(cfg.cache))
        pt = _point(x)
        if not isinstance(pt, list):
            raise UsageError("masterthm needs a point x1,...,xp")
        z, cert = masterthm_derivative(A, pt, alpha, tol, cfg.terms)
    else:
        raise UsageError(f"unknown construction {c!r}")
    out = {"construction": c, "x": x, "j": j, "alpha": alpha}
    out.update(_enclosure_json(z, cert))
    _emit(cfg, json.dumps(out))
    return EXIT_OK


# -- verification suites ------------------------------------------------------


def _prop31_upper_point(args):
    """Worker: thm1 coefficients at one point, as enclosing decimal strings."""
    family, prec, tol, x, jmax = args
    from .poleseries import build_thm1, taylor_coeffs

    ctx.prec = prec
    vals = taylor_coeffs(build_thm1(_sequence(family)), x, jmax, tol=tol)
    return [(z.re.arb().str(90), z.im.arb().str(90), c.groups_used, c.tail_bound.arb().str(20)) for z, c in vals]


def _unpack(rows):
    from .numerics import ComplexEnclosure, Enclosure
    from .poleseries import Certificate

    out = []
    for re, im, K, tail in rows:
        z = ComplexEnclosure(Enclosure(arb(re), ctx.prec), Enclosure(arb(im), ctx.prec))
        out.append((z, Certificate(K, Enclosure(arb(tail), ctx.prec), ctx.prec)))
    return out


def _map(cfg: RunConfig, fn, items):
    if cfg.workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


def suite_prop31(cfg: RunConfig, jmax: int, cap: int = 20):
    from .poleseries import build_thm1, taylor_coeffs
    from .verify import BoundSpec, check_bound, domination_check, search_threshold

    M = _sequence(cfg.family)
    grid = cfg.points or [Fraction(-19, 20) + Fraction(19, 10) * i / 20 for i in range(21)]
    rows = _map(cfg, _prop31_upper_point, [(cfg.family, ctx.prec, cfg.tol(), x, jmax) for x in grid])
    upper = {x: _unpack(r) for x, r in zip(grid, rows)}
    spec = BoundSpec("upper", "AB^jM_j", M, A=Fraction(9, 2))
    reports = [check_bound(lambda x, j: upper[x][j], grid, range(jmax + 1), spec)]
    notes = []
    series = build_thm1(M)
    for t in [Fraction(0), Fraction(1, 2), Fraction(-3, 4)]:
        vals = taylor_coeffs(series, t, jmax, tol=min(cfg.tol(), Fraction(1, 3 ** (jmax + 4))))
        spec = BoundSpec("lower", "c3^-jM_j", M, c=Fraction(1, 2))
        rep = search_threshold(lambda _x, j: vals[j], t, range(jmax + 1), spec, cap)
        reports.append(rep)
        dom = domination_check({j: v for j, (v, _) in enumerate(vals)}, range(jmax + 1), cap=cap, point=t)
        notes.append(
            {"t": str(t), "lower_j0": rep.found_j0, "domination_j0": dom.found_j0, "dominant": dom.parity_dominant}
        )
        if rep.found_j0 is None:
            notes[-1]["failed"] = "no lower-bound threshold within the cap"
        if not dom.ok:
            notes[-1]["failed"] = "domination"
        else:
            reports.append(_dom_report(M, dom))
    return reports, notes


def _dom_report(M, dom):
    from .verify import BoundReport, BoundSpec

    rep = BoundReport(BoundSpec("upper", "custom", M))
    rep.cells = [c for c in dom.cells if c.order >= dom.found_j0]
    return rep


def suite_prop41(cfg: RunConfig, jmax: int):
    from .poleseries import build_block, taylor_coeffs
    from .verify import BoundSpec, check_bound

    M = _sequence(cfg.family)
    s = build_block(M)
    pts = cfg.points or [Fraction(v) for v in ("0", "1/10", "-1/10", "1", "-1", "10", "-10")]
    cache = {x: taylor_coeffs(s, x, jmax, tol=cfg.tol()) for x in pts}
    if 0 in pts:
        # the lower bound 2^-j M_j needs absolute error well below 2^-j M_j
        cache[Fraction(0)] = taylor_coeffs(s, Fraction(0), jmax, tol=cfg.tol() / 2 ** (jmax + 1))
    ev = lambda x, j: cache[x][j]
    reports = [check_bound(ev, pts, range(jmax + 1), BoundSpec("upper", "AB^jM_j", M))]
    nz = [x for x in pts if x != 0]
    reports.append(check_bound(ev, nz, range(jmax + 1), BoundSpec("upper", "|x|^-(j+1)", M)))
    if 0 in pts:
        reports.append(check_bound(ev, [Fraction(0)], range(1, jmax + 1), BoundSpec("lower", "2^-jM_j", M)))
    return reports, []


def suite_divergence(cfg: RunConfig, nmax: int, jmax: int = 25):
    from .assemblies import CCache, assembly_coeffs, build_thm2
    from .verify import BoundSpec, check_bound, growth_classifier

    M = _sequence(cfg.family)
    A = build_thm2(M, cache=CCache(cfg.cache))
    tol = cfg.tol()
    wit = {n: assembly_coeffs(A, A.witness(n), n, tol)[n] for n in range(1, nmax + 1)}
    reports = [check_bound(lambda n, j: wit[n], range(1, nmax + 1), [0], _WitnessSpec(M))]
    at0 = assembly_coeffs(A, Fraction(0), jmax, tol)
    reports.append(check_bound(lambda x, j: at0[j], [Fraction(0)], range(jmax + 1), BoundSpec("upper", "2e^jM_j", A.M)))
    g = growth_classifier({n: wit[n][0] for n in wit}, A.M)
    notes = [{"growth_trend": g.trend, "slope": g.slope, "rho": list(g.rho)}]
    if g.trend != "linear-growth":
        notes[0]["failed"] = "growth classifier"
    return reports, notes


class _WitnessSpec:
    """n^n M_n lower bound where the cell's point is the witness index n."""

    kind = "lower"
    formula = "j^jM_j"
    exception_threshold = None

    def __init__(self, M, double: bool = False):
        self.M = M
        self.double = double

    def rhs(self, j, n):
        k = 2 * n if self.double else n
        return arb(k) ** k * self.M.M(k).arb()


def suite_masterthm(cfg: RunConfig, nmax: int, order: int = 10):
    from .assemblies import CCache, build_masterthm, masterthm_derivatives
    from .numerics import Enclosure
    from .verify import BoundReport, BoundSpec, check_bound, fit_shape

    M = _sequence(cfg.family)
    A = build_masterthm(M, cfg.p, cache=CCache(cfg.cache))
    tol = cfg.tol()
    n0 = A.start_index
    wit = {}
    for n in range(n0, nmax + 1):
        alpha = (2 * n,) + (0,) * (cfg.p - 1)
        z, cert = masterthm_derivatives(A, A.witness(n), [alpha], tol)[0]
        f = math.factorial(2 * n)
        wit[n] = (_scale(z, f), cert)
    reports = [check_bound(lambda n, j: wit[n], range(n0, nmax + 1), [0], _WitnessSpec(A.M, double=True))]
    notes = []
    for label, pts in _masterthm_samples(cfg.p).items():
        alphas = _alphas(cfg.p, order)
        vals = []
        for x in pts:
            res = masterthm_derivatives(A, x, alphas, tol)
            for a, (z, _) in zip(alphas, res):
                vals.append((sum(a), _scale(z, math.factorial(sum(a)))))
        fit = fit_shape(vals, A.M)
        normK = max(math.sqrt(sum(float(c) ** 2 for c in x)) for x in pts)
        r0 = float(A._norm(A.witness(n0)).mid())
        bmax = 4 * cfg.p * math.exp(cfg.p) * (normK + 1 + r0)
        ok = fit.B <= Fraction(bmax)
        notes.append({"region": label, "A": float(fit.A), "B": float(fit.B), "B_max": bmax, "ok": ok})
        if not ok:
            notes[-1]["failed"] = "fitted B exceeds the derivative constant"
        spec = BoundSpec("upper", "AB^jM_j", A.M, A=fit.A, B=fit.B)
        reports.append(check_bound(lambda _x, j, v=vals: v[j][1], [label], range(len(vals)), _IndexedSpec(spec, vals)))
    return reports, notes


class _IndexedSpec:
    """Wraps a spec whose order is looked up from a flat list of (order, value)."""

    def __init__(self, spec, vals):
        self.spec, self.vals = spec, vals
        self.kind, self.formula, self.exception_threshold = spec.kind, spec.formula, None

    def rhs(self, i, x):
        return self.spec.rhs(self.vals[i][0], x)


def _scale(z, f: int):
    from .numerics import ComplexEnclosure, Enclosure

    return ComplexEnclosure(Enclosure(z.re.arb() / f, ctx.prec), Enclosure(z.im.arb() / f, ctx.prec))


def _alphas(p: int, order: int) -> list:
    from itertools import product

    out = []
    for total in range(order + 1):
        for a in product(range(total + 1), repeat=p):
            if sum(a) == total:
                out.append(a)
    return out


def _masterthm_samples(p: int) -> dict:
    """Ten points of S_{1,1} and ten with x_1 <= 0 (extra coordinates zero)."""
    pad = [Fraction(0)] * (p - 2)
    s = []
    for i in range(10):
        x1 = Fraction(i, 20)
        s.append([x1, x1 + Fraction(1 + i % 3, 10)] + pad)
    q = []
    for i in range(10):
        q.append([Fraction(-i, 10), Fraction(i - 5, 10)] + pad)
    return {"S11": s, "x1<=0": q}


def suite_sdistance(cfg: RunConfig, t_range: str, a: str = "1", m: int = 1):
    from .assemblies import s_distance_check
    from .verify import BoundReport, BoundSpec, Cell
    from .numerics import log2_arb

    M = _sequence(cfg.family)
    rep = BoundReport(BoundSpec("lower", "custom", M))
    notes = []
    for t in _range_spec(t_range):
        r = s_distance_check(t, parse_rational(a), m, cfg.p)
        status = {"pass-certified": "pass-certified", "out-of-scope": "indeterminate"}.get(r.status, r.status)
        lhs = LogMag.from_bounds(r.distance_lower, r.distance_lower) if r.distance_lower > 0 else LogMag(None, 0)
        margin = float(log2_arb(r.distance_lower).lower() - log2_arb(r.bound).upper()) if r.distance_lower > 0 else None
        rep.cells.append(Cell(str(t), 0, "lower", lhs, log2_arb(r.bound), status, margin))
        notes.append({"t": str(t), "status": r.status, "distance": r.distance_estimate})
    return [rep], notes


def suite_cj(cfg: RunConfig, jmax: int):
    from .verify import cj_check

    r = cj_check(jmax)
    notes = [
        {
            "C1": r.values[1].arb().str(8),
            "decreasing_from_3": r.decreasing,
            "C20_below_1/8": r.c20_below_eighth,
        }
    ]
    if not r.ok:
        notes[0]["failed"] = "C_j check"
    return [], notes


def run_suite(cfg: RunConfig, suite: str, args) -> tuple[list, list]:
    if suite == "prop31":
        return suite_prop31(cfg, args.jmax or 40)
    if suite == "prop41":
        return suite_prop41(cfg, args.jmax or 60)
    if suite == "divergence":
        return suite_divergence(cfg, args.nmax or 8)
    if suite == "masterthm":
        return suite_masterthm(cfg, args.nmax or 5)
    if suite == "sdistance":
        return suite_sdistance(cfg, args.t or "1/20:2/5:8")
    if suite == "cj":
        return suite_cj(cfg, args.jmax or 40)
    raise UsageError(f"unknown suite {suite!r}")


def _exit_code(reports, notes) -> int:
    statuses = [c.status for r in reports for c in r.cells]
    failed = any(s == "fail-certified" for s in statuses) or any("failed" in n for n in notes)
    if failed:
        return EXIT_FAIL
    if any(s != "pass-certified" for s in statuses):
        return EXIT_INDETERMINATE
    return EXIT_OK


def _render(cfg: RunConfig, reports, notes) -> str:
    from .verify import report_csv, report_json

    if cfg.fmt == "json":
        body = json.loads(report_json(reports))
        return json.dumps({"reports": body, "notes": notes}, indent=1, sort_keys=True, default=str)
    return report_csv(reports)


def cmd_verify(cfg: RunConfig, args) -> int:
    reports, notes = run_suite(cfg, args.suite, args)
    _emit(cfg, _render(cfg, reports, notes))
    for n in notes:
        print(json.dumps(n, default=str), file=sys.stderr)
    return _exit_code(reports, notes)


def cmd_probe_curve(cfg: RunConfig, curve: str, t0: str, order: int) -> int:
    from .assemblies import CCache, build_masterthm
    from .multivar import compose_curve, load_curve
    from .verify import growth_classifier

    M = _sequence(cfg.family)
    try:
        gamma = load_curve(curve)
    except (OSError, KeyError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read curve: {e}") from e
    A = build_masterthm(M, gamma.p, cache=CCache(cfg.cache))
    jet = compose_curve(A, gamma, parse_rational(t0), order, cfg.tol())
    g = growth_classifier({j: jet[j] for j in range(1, order + 1)}, A.M)
    rows = ["order,coeff_abs_upper,rho"]
    for j, r in zip(g.orders, g.rho):
        rows.append(f"{j},{_num(jet[j].abs_upper())},{r:.9g}")
    if cfg.fmt == "json":
        _emit(cfg, json.dumps({"trend": g.trend, "slope": g.slope, "rho": list(g.rho), "sup_rho": g.sup_rho}))
    else:
        _emit(cfg, "\n".join(rows) + f"\n# trend {g.trend} slope {g.slope:.4g}\n")
    return EXIT_OK


def cmd_report(cfg: RunConfig, args) -> int:
    """Run several suites; one file per suite in the --out directory."""
    out_dir = Path(cfg.out or "reports")
    suites = args.suites.split(",") if args.suites else ["prop41", "sdistance", "cj"]
    summary = {}
    code = EXIT_OK
    for s in suites:
        reports, notes = run_suite(cfg, s, args)
        ext = "json" if cfg.fmt == "json" else "csv"
        atomic_write(out_dir / f"{s}.{ext}", _render(cfg, reports, notes))
        c = _exit_code(reports, notes)
        summary[s] = {"exit": c, "notes": notes}
        if c == EXIT_FAIL or code == EXIT_FAIL:
            code = EXIT_FAIL
        else:
            code = max(code, c)
    atomic_write(out_dir / "summary.json", json.dumps(summary, indent=1, sort_keys=True, default=str))
    return code


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS, allow_abbrev=False)
    p.add_argument("--family", help="weight sequence: gevrey:<s>, qfamily or table:<path>")
    p.add_argument("--prec", type=int, help="working precision in bits")
    p.add_argument("--tol", help="relative truncation tolerance")
    p.add_argument("--terms", type=int, help="explicit number of groups K")
    p.add_argument("--cache", help="c_n cache file (CARLEMAN_CACHE overrides)")
    p.add_argument("--out", help="output path")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json")
    fmt.add_argument("--csv", dest="fmt", action="store_const", const="csv")
    p.add_argument("--workers", type=int, help="worker processes")
    p.add_argument("--config", help="RunConfig JSON file")
    p.add_argument("--p", type=int, help="dimension for masterthm")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="carleman", parents=[common], allow_abbrev=False, description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    w = sub.add_parser("weights", parents=[common], allow_abbrev=False, help="tabulate a weight sequence")
    w.add_argument("spec", nargs="?")
    w.add_argument("--depth", type=int, default=10)

    ph = sub.add_parser("phi", parents=[common], allow_abbrev=False, help="associated function phi(alpha)")
    ph.add_argument("--alpha", required=True)

    c = sub.add_parser("coeff", parents=[common], allow_abbrev=False, help="one certified coefficient")
    c.add_argument("--construction", choices=["thm1", "block", "thm2", "masterthm"], default=None)
    c.add_argument("--x", required=True)
    c.add_argument("--j", type=int, default=None)
    c.add_argument("--alpha", default=None)

    v = sub.add_parser("verify", parents=[common], allow_abbrev=False, help="run a verification suite")
    v.add_argument("--suite", choices=SUITES, required=True)
    v.add_argument("--jmax", type=int, default=None)
    v.add_argument("--nmax", type=int, default=None)
    v.add_argument("--t", default=None, help="a:b:n range of t values")

    pc = sub.add_parser("probe-curve", parents=[common], allow_abbrev=False, help="jet of f along a polynomial curve")
    pc.add_argument("--curve", required=True)
    pc.add_argument("--t0", default="0")
    pc.add_argument("--order", type=int, default=20)

    r = sub.add_parser("report", parents=[common], allow_abbrev=False, help="run several suites into a directory")
    r.add_argument("--suites", default=None, help=f"comma list from {','.join(SUITES)}")
    r.add_argument("--jmax", type=int, default=None)
    r.add_argument("--nmax", type=int, default=None)
    r.add_argument("--t", default=None)
    return parser


def config_from_args(args) -> RunConfig:
    cfg = RunConfig()
    config = getattr(args, "config", None)
    if config:
        cfg = RunConfig.from_json(Path(config).read_text())
    if getattr(args, "spec", None):
        cfg.family = args.spec
    for name, attr in [
        ("family", "family"),
        ("prec", "precision_bits"),
        ("tol", "tolerance"),
        ("terms", "terms"),
        ("out", "out"),
        ("fmt", "fmt"),
        ("workers", "workers"),
        ("p", "p"),
        ("construction", "construction"),
    ]:
        v = getattr(args, name, None)
        if v is not None:
            setattr(cfg, attr, v)
    cfg.cache = os.environ.get("CARLEMAN_CACHE") or getattr(args, "cache", None) or cfg.cache
    if getattr(args, "workers", None) is None and not config:
        cfg.workers = os.cpu_count() or 1
    parse_rational(cfg.tolerance)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        cfg = config_from_args(args)
        ctx.prec = cfg.precision_bits
        if args.command == "weights":
            return cmd_weights(cfg, args.depth)
        if args.command == "phi":
            return cmd_phi(cfg, args.alpha)
        if args.command == "coeff":
            return cmd_coeff(cfg, args.x, args.j, args.alpha)
        if args.command == "verify":
            return cmd_verify(cfg, args)
        if args.command == "probe-curve":
            return cmd_probe_curve(cfg, args.curve, args.t0, args.order)
        if args.command == "report":
            return cmd_report(cfg, args)
    except (UsageError, ValueError, ZeroDivisionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (NeedMorePrecision, IndeterminateAtPrecision) as e:
        print(f"indeterminate: {e}", file=sys.stderr)
        return EXIT_INDETERMINATE
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO
    return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
