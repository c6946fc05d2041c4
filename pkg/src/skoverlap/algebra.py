"""Exact rational functions of beta with integer coefficients.

Polynomials are dense coefficient tuples in ascending powers of beta.  The
``_dup_*`` helpers work on tuples of ints or Fractions and never mutate
their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import gcd, lcm
from typing import Iterable, Sequence, Union

from .errors import PoleError

Rational = Union[int, Fraction]


def _dup_strip(f: Sequence) -> tuple:
    n = len(f)
    while n and f[n - 1] == 0:
        n -= 1
    return tuple(f[:n])


def _dup_add(f: Sequence, g: Sequence) -> tuple:
    if len(f) < len(g):
        f, g = g, f
    out = list(f)
    for i, c in enumerate(g):
        out[i] += c
    return _dup_strip(out)


def _dup_mul_ground(f: Sequence, c: Rational) -> tuple:
    if c == 0:
        return ()
    return tuple(a * c for a in f)


def _dup_mul(f: Sequence, g: Sequence) -> tuple:
    if not f or not g:
        return ()
    out = [0] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if a == 0:
            continue
        for j, b in enumerate(g):
            out[i + j] += a * b
    return tuple(out)


def _dup_divmod(f: Sequence, g: Sequence) -> tuple[tuple, tuple]:
    """Division with remainder over the rationals."""
    if not g:
        raise ZeroDivisionError("polynomial division by zero")
    rem = [Fraction(c) for c in f]
    dg = len(g) - 1
    lc = Fraction(g[-1])
    if len(rem) <= dg:
        return (), _dup_strip(rem)
    quo = [Fraction(0)] * (len(rem) - dg)
    for k in range(len(rem) - 1, dg - 1, -1):
        c = rem[k] / lc
        if c == 0:
            continue
        quo[k - dg] = c
        for j, b in enumerate(g):
            rem[k - dg + j] -= c * b
    return _dup_strip(quo), _dup_strip(rem[:dg])


def _dup_exquo(f: Sequence, g: Sequence) -> tuple:
    q, r = _dup_divmod(f, g)
    if r:
        raise ArithmeticError("polynomial division is not exact")
    return q


def _dup_monic(f: Sequence) -> tuple:
    lc = Fraction(f[-1])
    return tuple(Fraction(c) / lc for c in f)


def _dup_gcd(f: Sequence, g: Sequence) -> tuple:
    """Monic gcd over the rationals (Euclid)."""
    f, g = _dup_strip(f), _dup_strip(g)
    if not f:
        return _dup_monic(g) if g else ()
    while g:
        f, g = g, _dup_divmod(f, g)[1]
        if g:
            g = _dup_monic(g)
    return _dup_monic(f)


def _dup_primitive(f: Sequence) -> tuple[Fraction, tuple[int, ...]]:
    """Split ``f`` into ``content * primitive`` with a positive leading coefficient."""
    fr = [Fraction(c) for c in f]
    den = reduce(lcm, (c.denominator for c in fr), 1)
    ints = [int(c * den) for c in fr]
    g = reduce(gcd, ints, 0)
    if ints[-1] < 0:
        g = -g
    return Fraction(g, den), tuple(i // g for i in ints)


def _dup_eval(f: Sequence, x: Rational) -> Fraction:
    acc = Fraction(0)
    for c in reversed(f):
        acc = acc * x + c
    return acc


@dataclass(frozen=True)
class BetaPoly:
    """Integer polynomial in beta; ``coeffs`` ascending, no trailing zeros."""

    coeffs: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _dup_strip(tuple(int(c) for c in self.coeffs)))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __call__(self, x: Rational) -> Fraction:
        return _dup_eval(self.coeffs, x)


@dataclass(frozen=True, order=True)
class QuarterOrder:
    """An order bound measured in quarter-units: ``value == units / 4``."""

    units: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.units, 4)

    def __str__(self) -> str:
        return str(self.value)


class BetaRational:
    """Reduced rational function ``scale * num(beta) / den(beta)``.

    ``num`` and ``den`` are primitive integer polynomials with positive
    leading coefficients and no common factor; ``scale`` holds the sign and
    rational content.  Zero is ``scale == 0`` with ``num == ()`` and
    ``den == (1,)``.  Instances are immutable and compare structurally.
    """

    __slots__ = ("num", "den", "scale", "_hash")

    def __init__(self, num: tuple[int, ...], den: tuple[int, ...], scale: Fraction):
        # Trusted constructor: callers must pass canonical parts.
        self.num = num
        self.den = den
        self.scale = scale
        self._hash = None

    @classmethod
    def from_parts(cls, num: Iterable[Rational], den: Iterable[Rational] = (1,)) -> "BetaRational":
        """Build a canonical value from arbitrary rational numerator/denominator."""
        n = _dup_strip(tuple(num))
        d = _dup_strip(tuple(den))
        if not d:
            raise ZeroDivisionError("zero denominator")
        if not n:
            return ZERO
        if len(d) > 1:
            g = _dup_gcd(n, d)
            if len(g) > 1:
                n = _dup_exquo(n, g)
                d = _dup_exquo(d, g)
        cn, pn = _dup_primitive(n)
        cd, pd = _dup_primitive(d)
        return cls(pn, pd, cn / cd)

    @classmethod
    def const(cls, c: Rational) -> "BetaRational":
        c = Fraction(c)
        if c == 0:
            return ZERO
        return cls((1,), (1,), c)

    @classmethod
    def beta_power(cls, k: int, c: Rational = 1) -> "BetaRational":
        """``c * beta**k``."""
        c = Fraction(c)
        if c == 0:
            return ZERO
        return cls((0,) * k + (1,), (1,), c)

    # -- arithmetic -----------------------------------------------------

    def is_zero(self) -> bool:
        return self.scale == 0

    def is_polynomial(self) -> bool:
        return self.den == (1,)

    def __neg__(self) -> "BetaRational":
        if self.scale == 0:
            return self
        return BetaRational(self.num, self.den, -self.scale)

    def __add__(self, other) -> "BetaRational":
        if not isinstance(other, BetaRational):
            other = BetaRational.const(other)
        if self.scale == 0:
            return other
        if other.scale == 0:
            return self
        if self.den == other.den:
            n = _dup_add(_dup_mul_ground(self.num, self.scale), _dup_mul_ground(other.num, other.scale))
            if not n:
                return ZERO
            if self.den == (1,):
                cn, pn = _dup_primitive(n)
                return BetaRational(pn, (1,), cn)
            return BetaRational.from_parts(n, self.den)
        g = _dup_gcd(self.den, other.den)
        d1 = _dup_exquo(self.den, g) if len(g) > 1 else self.den
        d2 = _dup_exquo(other.den, g) if len(g) > 1 else other.den
        n = _dup_add(
            _dup_mul_ground(_dup_mul(self.num, d2), self.scale),
            _dup_mul_ground(_dup_mul(other.num, d1), other.scale),
        )
        return BetaRational.from_parts(n, _dup_mul(self.den, d2))

    __radd__ = __add__

    def __sub__(self, other) -> "BetaRational":
        if not isinstance(other, BetaRational):
            other = BetaRational.const(other)
        return self + (-other)

    def __rsub__(self, other) -> "BetaRational":
        return (-self) + other

    def __mul__(self, other) -> "BetaRational":
        if not isinstance(other, BetaRational):
            c = Fraction(other)
            if c == 0 or self.scale == 0:
                return ZERO
            return BetaRational(self.num, self.den, self.scale * c)
        if self.scale == 0 or other.scale == 0:
            return ZERO
        scale = self.scale * other.scale
        if self.den == (1,) and other.den == (1,):
            return BetaRational(_dup_mul(self.num, other.num), (1,), scale)
        # cross-cancel; each operand is already reduced
        n1, d2 = _cancel(self.num, other.den)
        n2, d1 = _cancel(other.num, self.den)
        n = _dup_mul(n1, n2)
        d = _dup_mul(d1, d2)
        cn, pn = _dup_primitive(n)
        cd, pd = _dup_primitive(d)
        return BetaRational(pn, pd, scale * cn / cd)

    __rmul__ = __mul__

    def reciprocal(self) -> "BetaRational":
        if self.scale == 0:
            raise ZeroDivisionError("reciprocal of zero")
        return BetaRational(self.den, self.num, 1 / self.scale)

    def __truediv__(self, other) -> "BetaRational":
        if not isinstance(other, BetaRational):
            return self * (1 / Fraction(other))
        return self * other.reciprocal()

    def __rtruediv__(self, other) -> "BetaRational":
        return self.reciprocal() * other

    def __pow__(self, k: int) -> "BetaRational":
        if k < 0:
            return self.reciprocal() ** (-k)
        out = ONE
        for _ in range(k):
            out = out * self
        return out

    # -- comparison -----------------------------------------------------

    def _key(self):
        return (self.num, self.den, self.scale)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = BetaRational.const(other)
        if not isinstance(other, BetaRational):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self._key())
        return self._hash

    # -- evaluation and inspection -------------------------------------

    def evaluate(self, beta: Rational) -> Fraction:
        """Exact value at a rational ``beta``; raises PoleError on a pole."""
        beta = Fraction(beta)
        d = _dup_eval(self.den, beta)
        if d == 0:
            raise PoleError(f"denominator vanishes at beta={beta}")
        if self.scale == 0:
            return Fraction(0)
        return self.scale * _dup_eval(self.num, beta) / d

    def is_even(self) -> bool:
        """True if only even powers of beta occur."""
        return all(c == 0 for c in self.num[1::2]) and all(c == 0 for c in self.den[1::2])

    def numerator_poly(self) -> tuple[Fraction, ...]:
        """``scale * num`` as rational coefficients."""
        return _dup_mul_ground(self.num, self.scale)

    def to_json(self) -> dict:
        return {
            "num": list(self.num),
            "den": list(self.den),
            "scale": [self.scale.numerator, self.scale.denominator],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BetaRational":
        p, q = obj["scale"]
        return cls.from_parts(_dup_mul_ground(tuple(obj["num"]), Fraction(p, q)), tuple(obj["den"]))

    def __repr__(self) -> str:
        return f"BetaRational({format_plain(self)})"

    def __str__(self) -> str:
        return format_plain(self)


def _cancel(f: tuple, g: tuple) -> tuple[tuple, tuple]:
    if len(g) == 1 or len(f) == 1:
        return f, g
    h = _dup_gcd(f, g)
    if len(h) == 1:
        return f, g
    return _dup_exquo(f, h), _dup_exquo(g, h)


ZERO = BetaRational((), (1,), Fraction(0))
ONE = BetaRational((1,), (1,), Fraction(1))
ONE_MINUS_BETA2 = BetaRational.from_parts((1, 0, -1))


# -- rendering ----------------------------------------------------------

def one_minus_beta2_power(den: tuple[int, ...]) -> tuple[int, int] | None:
    """If ``den == sign * (1 - beta^2)**k`` return ``(k, sign)``."""
    if len(den) % 2 == 0:
        return None
    k = (len(den) - 1) // 2
    target = (1,)
    for _ in range(k):
        target = _dup_mul(target, (1, 0, -1))
    if den == target:
        return k, 1
    if den == tuple(-c for c in target):
        return k, -1
    return None


def _poly_str(coeffs: Sequence[int], var: str, power_fmt: str) -> str:
    parts = []
    for i, c in enumerate(coeffs):
        if c == 0:
            continue
        mag = abs(c)
        if i == 0:
            body = str(mag)
        elif mag == 1:
            body = var if i == 1 else power_fmt.format(var=var, k=i)
        else:
            body = f"{mag}*" + (var if i == 1 else power_fmt.format(var=var, k=i))
        sign = "-" if c < 0 else "+"
        parts.append((sign, body))
    if not parts:
        return "0"
    first_sign, first = parts[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in parts[1:]:
        out += sign + body
    return out


def _split_for_display(r: BetaRational):
    """Return (sign, numerator ints, denominator constant, (1-b^2) power or None, den ints)."""
    sign = 1 if r.scale > 0 else -1
    p, q = abs(r.scale.numerator), r.scale.denominator
    num = tuple(c * p for c in r.num)
    # show the lowest-degree numerator coefficient as positive
    if next(c for c in num if c) < 0:
        num = tuple(-c for c in num)
        sign = -sign
    fact = one_minus_beta2_power(r.den)
    if fact is not None:
        k, s = fact
        sign *= s
    return sign, num, q, fact, r.den


def format_plain(r: BetaRational) -> str:
    """Render as e.g. ``-(beta^2+beta^4)/(1-beta^2)^4``."""
    if r.is_zero():
        return "0"
    sign, num, q, fact, den = _split_for_display(r)
    nstr = _poly_str(num, "beta", "{var}^{k}")
    multi = sum(1 for c in num if c) > 1
    if fact is not None and fact[0] == 0:
        dstr = "" if q == 1 else str(q)
    elif fact is not None:
        k = fact[0]
        dpow = "(1-beta^2)" if k == 1 else f"(1-beta^2)^{k}"
        dstr = dpow if q == 1 else f"({q}*{dpow})"
    else:
        dpoly = _poly_str(den, "beta", "{var}^{k}")
        dstr = f"({dpoly})" if q == 1 else f"({q}*({dpoly}))"
    if not dstr:
        body = nstr
        if sign < 0 and multi:
            body = f"({nstr})"
        return ("-" if sign < 0 else "") + body
    body = f"({nstr})" if multi else nstr
    return ("-" if sign < 0 else "") + f"{body}/{dstr}"


def format_latex(r: BetaRational) -> str:
    """LaTeX form; denominators that are powers of (1-beta^2) are shown factored."""
    if r.is_zero():
        return "0"
    sign, num, q, fact, den = _split_for_display(r)
    nstr = _poly_str(num, r"\beta", "{var}^{{{k}}}").replace("*", "")
    if fact is not None and fact[0] == 0:
        dstr = "" if q == 1 else str(q)
    elif fact is not None:
        k = fact[0]
        dpow = r"(1-\beta^{2})" if k == 1 else rf"(1-\beta^{{2}})^{{{k}}}"
        dstr = dpow if q == 1 else f"{q}{dpow}"
    else:
        dpoly = _poly_str(den, r"\beta", "{var}^{{{k}}}").replace("*", "")
        dstr = dpoly if q == 1 else f"{q}({dpoly})"
    lead = "-" if sign < 0 else ""
    if not dstr:
        multi = sum(1 for c in num if c) > 1
        return lead + (f"({nstr})" if sign < 0 and multi else nstr)
    return lead + rf"\frac{{{nstr}}}{{{dstr}}}"
