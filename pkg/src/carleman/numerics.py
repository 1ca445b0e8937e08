"""Number backends: exact rationals and Arb balls behind one small contract.

An :class:`Enclosure` wraps either a :class:`fractions.Fraction` (exact) or a
``flint.arb`` ball.  Binary operations stay exact while both operands are
exact and fall back to ball arithmetic otherwise, so the exact route can be
used as an independent check of the ball route.

Bound comparisons on factorial-scale quantities go through :class:`LogMag`
(base-2 logarithm of a magnitude) and :func:`log_compare`.
"""

from __future__ import annotations

import enum
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, TypeVar, Union

from flint import acb, arb, ctx, fmpq, fmpz

__all__ = [
    "DEFAULT_PREC",
    "MAX_PREC",
    "NeedMorePrecision",
    "IndeterminateAtPrecision",
    "Enclosure",
    "ComplexEnclosure",
    "LogMag",
    "Ordering",
    "log_compare",
    "enclose_pow_int",
    "precision",
    "with_precision_retry",
    "to_arb",
    "to_fraction",
    "parse_rational",
    "complex_inv_pow_exact",
    "log2_arb",
    "ipow",
    "amax",
    "amin",
]

DEFAULT_PREC = 256
MAX_PREC = 4096

_prec_lock = threading.RLock()


class NeedMorePrecision(ArithmeticError):
    """Raised when a ball computation lost too much accuracy."""


class IndeterminateAtPrecision(ArithmeticError):
    """A certified decision could not be made at the working precision."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


@contextmanager
def precision(bits: int) -> Iterator[int]:
    """Temporarily set the Arb working precision."""
    with _prec_lock:
        old = ctx.prec
        ctx.prec = int(bits)
        try:
            yield int(bits)
        finally:
            ctx.prec = old


T = TypeVar("T")


def with_precision_retry(
    fn: Callable[[], T], start_bits: int = DEFAULT_PREC, max_bits: int = MAX_PREC
) -> T:
    """Call ``fn`` at ``start_bits``, doubling on NeedMorePrecision up to ``max_bits``."""
    bits = start_bits
    while True:
        try:
            with precision(bits):
                return fn()
        except (NeedMorePrecision, IndeterminateAtPrecision):
            if bits * 2 > max_bits:
                raise
            bits *= 2


Number = Union[int, Fraction, fmpq, fmpz, arb, "Enclosure", str]


def parse_rational(text: str) -> Fraction:
    """Parse ``"p/q"``, integers and finite decimals exactly."""
    text = text.strip()
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not an exact rational: {text!r}") from exc


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, fmpz):
        return Fraction(int(x))
    if isinstance(x, fmpq):
        return Fraction(int(x.p), int(x.q))
    if isinstance(x, str):
        return parse_rational(x)
    if isinstance(x, Enclosure) and x.is_exact:
        return x.value
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def to_arb(x) -> arb:
    """Convert any supported scalar to an Arb ball at the current precision."""
    if isinstance(x, arb):
        return x
    if isinstance(x, Enclosure):
        return x.arb()
    if isinstance(x, bool):
        return arb(int(x))
    if isinstance(x, int):
        return arb(x)
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return arb(x.numerator)
        return arb(fmpq(x.numerator, x.denominator))
    if isinstance(x, (fmpz, fmpq)):
        return arb(x)
    if isinstance(x, float):
        return arb(x)
    if isinstance(x, str):
        return to_arb(parse_rational(x))
    raise TypeError(f"cannot convert {type(x).__name__} to arb")


def ipow(x: arb, n: int) -> arb:
    """x**n for integer n >= 0 by repeated squaring.

    Works around python-flint returning nan for ``arb(0, r) ** n``.
    """
    if n < 0:
        return 1 / ipow(x, -n)
    result = arb(1)
    base = x
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result


def amax(a: arb, b: arb) -> arb:
    """Tight enclosure of max(a, b); python-flint's arb.max loses most bits."""
    a, b = to_arb(a), to_arb(b)
    lo = a.lower() if a.lower() >= b.lower() else b.lower()
    hi = a.upper() if a.upper() >= b.upper() else b.upper()
    return _interval(lo, hi)


def amin(a: arb, b: arb) -> arb:
    a, b = to_arb(a), to_arb(b)
    lo = a.lower() if a.lower() <= b.lower() else b.lower()
    hi = a.upper() if a.upper() <= b.upper() else b.upper()
    return _interval(lo, hi)


def log2_arb(x: arb) -> arb:
    return x.log() / arb(2).log()


def _is_exact_scalar(x) -> bool:
    return isinstance(x, (int, Fraction, fmpz, fmpq)) or (
        isinstance(x, Enclosure) and x.is_exact
    )


@dataclass(frozen=True, eq=False)
class Enclosure:
    """A certified real value: exact rational or Arb ball."""

    value: Union[Fraction, arb]
    precision_bits: int = DEFAULT_PREC

    # -- construction ------------------------------------------------------
    @classmethod
    def exact(cls, q) -> "Enclosure":
        return cls(to_fraction(q), ctx.prec)

    @classmethod
    def ball(cls, mid, rad=0) -> "Enclosure":
        m = to_arb(mid)
        if rad:
            m = m + arb(0, to_arb(rad).abs_upper())
        return cls(m, ctx.prec)

    @classmethod
    def of(cls, x) -> "Enclosure":
        if isinstance(x, Enclosure):
            return x
        if _is_exact_scalar(x) or isinstance(x, str):
            return cls.exact(x)
        return cls(to_arb(x), ctx.prec)

    # -- inspection --------------------------------------------------------
    @property
    def is_exact(self) -> bool:
        return isinstance(self.value, Fraction)

    @property
    def kind(self) -> str:
        return "exact-rational" if self.is_exact else "ball"

    def arb(self) -> arb:
        return to_arb(self.value)

    @property
    def midpoint(self):
        return self.value if self.is_exact else self.value.mid()

    @property
    def radius(self) -> arb:
        return arb(0) if self.is_exact else self.value.rad()

    def lower(self) -> arb:
        return self.arb().lower()

    def upper(self) -> arb:
        return self.arb().upper()

    def abs_upper(self) -> arb:
        return self.arb().abs_upper()

    def abs_lower(self) -> arb:
        return self.arb().abs_lower()

    def __float__(self) -> float:
        return float(self.value) if self.is_exact else float(self.value.mid())

    def log2mag(self) -> "LogMag":
        return LogMag.of(self)

    # -- certified predicates ---------------------------------------------
    def contains(self, x) -> bool:
        if self.is_exact:
            return _is_exact_scalar(x) and to_fraction(x) == self.value
        if _is_exact_scalar(x):
            # arb.contains rounds the rational to a ball at working precision
            q = to_fraction(x)
            with precision(4 * ctx.prec + 64):
                point = arb(fmpq(q.numerator, q.denominator))
            return self.value.contains(point)
        return self.value.contains(to_arb(x))

    def overlaps(self, x) -> bool:
        if self.is_exact and _is_exact_scalar(x):
            return self.value == to_fraction(x)
        return self.arb().overlaps(to_arb(x))

    def certainly_lt(self, x) -> bool:
        if self.is_exact and _is_exact_scalar(x):
            return self.value < to_fraction(x)
        return bool(self.arb() < to_arb(x))

    def certainly_le(self, x) -> bool:
        if self.is_exact and _is_exact_scalar(x):
            return self.value <= to_fraction(x)
        return bool(self.arb() <= to_arb(x))

    def certainly_gt(self, x) -> bool:
        if self.is_exact and _is_exact_scalar(x):
            return self.value > to_fraction(x)
        return bool(self.arb() > to_arb(x))

    def certainly_ge(self, x) -> bool:
        if self.is_exact and _is_exact_scalar(x):
            return self.value >= to_fraction(x)
        return bool(self.arb() >= to_arb(x))

    def certainly_eq(self, x) -> bool:
        if self.is_exact and _is_exact_scalar(x):
            return self.value == to_fraction(x)
        a, b = self.arb(), to_arb(x)
        return a.is_exact() and b.is_exact() and bool(a == b)

    # -- arithmetic --------------------------------------------------------
    def _binop(self, other, exact_op, ball_op, reflected=False) -> "Enclosure":
        if isinstance(other, (acb, ComplexEnclosure)):
            return NotImplemented
        if self.is_exact and _is_exact_scalar(other):
            a, b = self.value, to_fraction(other)
            return Enclosure(exact_op(b, a) if reflected else exact_op(a, b), ctx.prec)
        a, b = self.arb(), to_arb(other)
        return Enclosure(ball_op(b, a) if reflected else ball_op(a, b), ctx.prec)

    def __add__(self, o):
        return self._binop(o, lambda a, b: a + b, lambda a, b: a + b)

    def __radd__(self, o):
        return self._binop(o, lambda a, b: a + b, lambda a, b: a + b, True)

    def __sub__(self, o):
        return self._binop(o, lambda a, b: a - b, lambda a, b: a - b)

    def __rsub__(self, o):
        return self._binop(o, lambda a, b: a - b, lambda a, b: a - b, True)

    def __mul__(self, o):
        return self._binop(o, lambda a, b: a * b, lambda a, b: a * b)

    def __rmul__(self, o):
        return self._binop(o, lambda a, b: a * b, lambda a, b: a * b, True)

    def __truediv__(self, o):
        return self._binop(o, lambda a, b: a / b, lambda a, b: a / b)

    def __rtruediv__(self, o):
        return self._binop(o, lambda a, b: a / b, lambda a, b: a / b, True)

    def __neg__(self):
        return Enclosure(-self.value, ctx.prec)

    def __abs__(self):
        if self.is_exact:
            return Enclosure(abs(self.value), ctx.prec)
        lo, hi = self.abs_lower(), self.abs_upper()
        return Enclosure(_interval(lo, hi), ctx.prec)

    def __pow__(self, n: int) -> "Enclosure":
        if not isinstance(n, int):
            raise TypeError("Enclosure powers take integer exponents; use root()")
        if self.is_exact:
            return Enclosure(self.value**n, ctx.prec)
        return Enclosure(ipow(self.value, n), ctx.prec)

    def root(self, q) -> "Enclosure":
        """Real power ``self ** q`` for rational ``q``; exact when it is."""
        q = to_fraction(q)
        if q.denominator == 1:
            return self ** int(q)
        if self.is_exact and self.value >= 0:
            r = _exact_rational_root(self.value, q)
            if r is not None:
                return Enclosure(r, ctx.prec)
        return Enclosure(self.arb() ** to_arb(q), ctx.prec)

    def sqrt(self) -> "Enclosure":
        return self.root(Fraction(1, 2))

    def log(self) -> "Enclosure":
        return Enclosure(self.arb().log(), ctx.prec)

    def exp(self) -> "Enclosure":
        return Enclosure(self.arb().exp(), ctx.prec)

    def max(self, other) -> "Enclosure":
        if self.is_exact and _is_exact_scalar(other):
            return Enclosure(max(self.value, to_fraction(other)), ctx.prec)
        return Enclosure(amax(self.arb(), to_arb(other)), ctx.prec)

    def to_ball(self) -> "Enclosure":
        return Enclosure(self.arb(), ctx.prec)

    def __repr__(self) -> str:
        if self.is_exact:
            return f"Enclosure.exact({self.value})"
        return f"Enclosure.ball({self.value.str(10, radius=True)})"

    def to_json(self) -> dict:
        if self.is_exact:
            return {"kind": "exact-rational", "value": str(self.value)}
        return {
            "kind": "ball",
            "mid": self.value.mid().str(30, radius=False),
            "rad": self.value.rad().str(5, radius=False),
            "precision_bits": self.precision_bits,
        }


def _interval(lo: arb, hi: arb) -> arb:
    """Ball containing the closed interval [lo, hi]."""
    return lo.union(hi)


def _exact_rational_root(x: Fraction, q: Fraction) -> Fraction | None:
    num = _int_root(x.numerator, q.denominator)
    den = _int_root(x.denominator, q.denominator)
    if num is None or den is None:
        return None
    return Fraction(num, den) ** q.numerator


def _int_root(n: int, k: int) -> int | None:
    if n < 0:
        return None
    r = int(round(n ** (1.0 / k))) if n < 2**1000 else None
    if r is None:
        # integer Newton iteration for large inputs
        r = 1 << (n.bit_length() // k + 1)
        while True:
            s = ((k - 1) * r + n // r ** (k - 1)) // k
            if s >= r:
                break
            r = s
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand**k == n:
            return cand
    return None


# ---------------------------------------------------------------------------
# Complex values
# ---------------------------------------------------------------------------


def _gauss_pow(a: int, b: int, n: int) -> tuple[int, int]:
    ra, rb = 1, 0
    while n:
        if n & 1:
            ra, rb = ra * a - rb * b, ra * b + rb * a
        a, b = a * a - b * b, 2 * a * b
        n >>= 1
    return ra, rb


def complex_inv_pow_exact(u: Fraction, v: Fraction, n: int) -> tuple[Fraction, Fraction]:
    """Exact real and imaginary parts of ``(u + i v) ** (-n)``."""
    d = u.denominator * v.denominator
    U = u.numerator * v.denominator
    V = v.numerator * u.denominator
    norm = U * U + V * V
    if norm == 0:
        raise ZeroDivisionError("inverse power of zero")
    re, im = _gauss_pow(U, -V, n)
    scale = d**n
    den = norm**n
    return Fraction(re * scale, den), Fraction(im * scale, den)


def complex_pow_exact(u: Fraction, v: Fraction, n: int) -> tuple[Fraction, Fraction]:
    d = u.denominator * v.denominator
    U = u.numerator * v.denominator
    V = v.numerator * u.denominator
    re, im = _gauss_pow(U, V, n)
    den = d**n
    return Fraction(re, den), Fraction(im, den)


@dataclass(frozen=True, eq=False)
class ComplexEnclosure:
    re: Enclosure
    im: Enclosure

    @classmethod
    def exact(cls, re, im=0) -> "ComplexEnclosure":
        return cls(Enclosure.exact(re), Enclosure.exact(im))

    @classmethod
    def from_acb(cls, z: acb) -> "ComplexEnclosure":
        return cls(Enclosure(z.real, ctx.prec), Enclosure(z.imag, ctx.prec))

    @classmethod
    def of(cls, z) -> "ComplexEnclosure":
        if isinstance(z, ComplexEnclosure):
            return z
        if isinstance(z, acb):
            return cls.from_acb(z)
        if isinstance(z, complex):
            return cls(Enclosure.ball(z.real), Enclosure.ball(z.imag))
        return cls(Enclosure.of(z), Enclosure.exact(0))

    @property
    def is_exact(self) -> bool:
        return self.re.is_exact and self.im.is_exact

    def acb(self) -> acb:
        return acb(self.re.arb(), self.im.arb())

    def abs_upper(self) -> arb:
        if self.is_exact:
            return self._exact_abs().upper()
        return self.acb().abs_upper()

    def abs_lower(self) -> arb:
        if self.is_exact:
            return self._exact_abs().lower()
        return self.acb().abs_lower()

    def _exact_abs(self) -> arb:
        return to_arb(self.re.value**2 + self.im.value**2).sqrt()

    def contains(self, other: "ComplexEnclosure") -> bool:
        return self.re.contains(other.re.value) and self.im.contains(other.im.value)

    def real_plus_imag(self) -> Enclosure:
        return self.re + self.im

    def log2mag(self) -> "LogMag":
        if self.is_exact:
            if self.re.value == 0 and self.im.value == 0:
                return LogMag(None, 0)
            return LogMag(log2_arb(self._exact_abs()), 1)
        return LogMag.from_bounds(self.abs_lower(), self.abs_upper())

    def _lift(self, other):
        if isinstance(other, ComplexEnclosure):
            return other
        return ComplexEnclosure.of(other)

    def __add__(self, o):
        o = self._lift(o)
        return ComplexEnclosure(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, o):
        o = self._lift(o)
        return ComplexEnclosure(self.re - o.re, self.im - o.im)

    def __neg__(self):
        return ComplexEnclosure(-self.re, -self.im)

    def __mul__(self, o):
        o = self._lift(o)
        if self.is_exact and o.is_exact:
            a, b, c, d = self.re.value, self.im.value, o.re.value, o.im.value
            return ComplexEnclosure.exact(a * c - b * d, a * d + b * c)
        return ComplexEnclosure.from_acb(self.acb() * o.acb())

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "ComplexEnclosure":
        return enclose_pow_int(self, n)

    def __repr__(self) -> str:
        return f"ComplexEnclosure({self.re!r}, {self.im!r})"

    def to_json(self) -> dict:
        return {"re": self.re.to_json(), "im": self.im.to_json()}


def enclose_pow_int(
    z: ComplexEnclosure, n: int, max_rel_radius: float = 1.0
) -> ComplexEnclosure:
    """Enclosure of ``z**n``; exact for exact input.

    Raises NeedMorePrecision when the ball result is not finite or its radius
    exceeds ``max_rel_radius`` times its magnitude while the input was tighter.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    z = ComplexEnclosure.of(z)
    if z.is_exact:
        re, im = complex_pow_exact(z.re.value, z.im.value, n)
        return ComplexEnclosure.exact(re, im)
    w = z.acb() ** n
    if not w.is_finite():
        raise NeedMorePrecision(f"power {n} overflowed the ball")
    zin = z.acb()
    if _rel_radius(w) > max_rel_radius and _rel_radius(zin) <= max_rel_radius:
        raise NeedMorePrecision(f"power {n} blew up the radius")
    return ComplexEnclosure.from_acb(w)


def _rel_radius(w: acb) -> float:
    mag = w.abs_upper()
    if mag.is_zero():
        return 0.0
    rad = abs(w).rad() if not w.is_exact() else arb(0)
    return float((rad / mag).upper())


# ---------------------------------------------------------------------------
# Log-magnitudes
# ---------------------------------------------------------------------------


class Ordering(enum.Enum):
    LESS = "certainly-less"
    GREATER = "certainly-greater"
    INDETERMINATE = "indeterminate-at-this-precision"


@dataclass(frozen=True, eq=False)
class LogMag:
    """Base-2 logarithm of a magnitude, with the sign of the underlying value.

    ``sign == 0`` means the underlying enclosure may contain zero; then only
    ``log2_value.upper()`` is meaningful (``None`` for an exact zero).
    """

    log2_value: arb | None
    sign: int

    @classmethod
    def from_log2(cls, log2_value, sign: int = 1) -> "LogMag":
        return cls(to_arb(log2_value), sign)

    @classmethod
    def from_bounds(cls, lo: arb, hi: arb, sign: int = 1) -> "LogMag":
        """Magnitude known to lie in [lo, hi] with 0 <= lo <= hi."""
        if hi.is_zero():
            return cls(None, 0)
        if not (lo > 0):
            return cls(log2_arb(hi).upper(), 0)
        return cls(_interval(log2_arb(lo).lower(), log2_arb(hi).upper()), sign)

    @classmethod
    def of(cls, x) -> "LogMag":
        if isinstance(x, ComplexEnclosure):
            return x.log2mag()
        e = Enclosure.of(x)
        if e.is_exact:
            if e.value == 0:
                return cls(None, 0)
            return cls(log2_arb(to_arb(abs(e.value))), 1 if e.value > 0 else -1)
        a = e.arb()
        sign = 1 if a > 0 else (-1 if a < 0 else 0)
        return cls.from_bounds(a.abs_lower(), a.abs_upper(), sign)

    @property
    def hi(self) -> arb | None:
        return None if self.log2_value is None else self.log2_value.upper()

    @property
    def lo(self) -> arb | None:
        if self.sign == 0 or self.log2_value is None:
            return None
        return self.log2_value.lower()

    def __add__(self, other: "LogMag") -> "LogMag":
        """Log of the product of magnitudes."""
        if self.log2_value is None or other.log2_value is None:
            return LogMag(None, 0)
        sign = self.sign * other.sign
        if self.sign == 0 or other.sign == 0:
            return LogMag(self.hi + other.hi, 0)
        return LogMag(self.log2_value + other.log2_value, sign)

    def __float__(self) -> float:
        if self.log2_value is None:
            return float("-inf")
        return float(self.log2_value.mid())


def log_compare(a: LogMag, b: LogMag) -> Ordering:
    """Certified ordering of two magnitudes given in log2 space."""
    if a.hi is None and b.hi is None:
        return Ordering.INDETERMINATE
    if a.hi is None:
        return Ordering.LESS if b.lo is not None else Ordering.INDETERMINATE
    if b.hi is None:
        return Ordering.GREATER if a.lo is not None else Ordering.INDETERMINATE
    if b.lo is not None and a.hi < b.lo:
        return Ordering.LESS
    if a.lo is not None and a.lo > b.hi:
        return Ordering.GREATER
    return Ordering.INDETERMINATE
