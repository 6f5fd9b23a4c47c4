"""Exact arithmetic in Q(i, sqrt2) plus the float fallback.

Every amplitude and decoherence-functional entry of the shipped models lives in
the field generated by the rationals, ``i`` and ``sqrt2``.  Elements are stored
as four rationals ``a + b*sqrt2 + c*i + d*i*sqrt2`` so zero tests are exact.
"""
from __future__ import annotations

import enum
import math
from fractions import Fraction
from numbers import Complex, Rational
from typing import Union

from .errors import AmplitudeParseError

SQRT2_FLOAT = math.sqrt(2.0)


class Sign(enum.IntEnum):
    NEGATIVE = -1
    ZERO = 0
    POSITIVE = 1


def _sign_q_sqrt2(a: Fraction, b: Fraction) -> Sign:
    """Exact sign of ``a + b*sqrt2`` for rational a, b."""
    if b == 0:
        return Sign((a > 0) - (a < 0))
    if a == 0:
        return Sign((b > 0) - (b < 0))
    if (a > 0) == (b > 0):
        return Sign.POSITIVE if a > 0 else Sign.NEGATIVE
    # opposite signs: compare a^2 with 2 b^2
    if a > 0:
        return Sign.POSITIVE if a * a > 2 * b * b else Sign.NEGATIVE
    return Sign.POSITIVE if 2 * b * b > a * a else Sign.NEGATIVE


_QZERO = (Fraction(0), Fraction(0))


def _qmul(x, y):
    """Product in Q(sqrt2) of pairs (a, b) meaning a + b sqrt2."""
    a1, b1 = x
    a2, b2 = y
    if not (a1 or b1) or not (a2 or b2):
        return _QZERO
    if not b1:
        return (a1 * a2, a1 * b2) if b2 else (a1 * a2, b2)
    if not b2:
        return (a1 * a2, b1 * a2)
    return (a1 * a2 + 2 * b1 * b2, a1 * b2 + b1 * a2)


def _qadd(x, y):
    return (x[0] + y[0], x[1] + y[1])


def _qsub(x, y):
    return (x[0] - y[0], x[1] - y[1])


class ExactScalar:
    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a=0, b=0, c=0, d=0) -> None:
        setattr_ = object.__setattr__
        setattr_(self, "a", a if type(a) is Fraction else Fraction(a))
        setattr_(self, "b", b if type(b) is Fraction else Fraction(b))
        setattr_(self, "c", c if type(c) is Fraction else Fraction(c))
        setattr_(self, "d", d if type(d) is Fraction else Fraction(d))

    def __setattr__(self, name, value):
        raise AttributeError("ExactScalar is immutable")

    def __reduce__(self):
        return (ExactScalar, (self.a, self.b, self.c, self.d))

    @classmethod
    def coerce(cls, x) -> "ExactScalar":
        if isinstance(x, ExactScalar):
            return x
        if isinstance(x, (int, Fraction)) or isinstance(x, Rational):
            return cls(x)
        raise TypeError(f"cannot convert {type(x).__name__} to ExactScalar exactly")

    @property
    def coefficients(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return (self.a, self.b, self.c, self.d)

    def is_zero(self) -> bool:
        return not (self.a or self.b or self.c or self.d)

    def is_real(self) -> bool:
        return not (self.c or self.d)

    @property
    def real(self) -> "ExactScalar":
        return ExactScalar(self.a, self.b)

    @property
    def imag(self) -> "ExactScalar":
        return ExactScalar(self.c, self.d)

    def conjugate(self) -> "ExactScalar":
        return ExactScalar(self.a, self.b, -self.c, -self.d)

    def sqrt2_conjugate(self) -> "ExactScalar":
        """Image under the automorphism sqrt2 -> -sqrt2."""
        return ExactScalar(self.a, -self.b, self.c, -self.d)

    def abs2(self) -> "ExactScalar":
        return self.conjugate() * self

    def __complex__(self) -> complex:
        return complex(
            float(self.a) + float(self.b) * SQRT2_FLOAT,
            float(self.c) + float(self.d) * SQRT2_FLOAT,
        )

    def __float__(self) -> float:
        if not self.is_real():
            raise TypeError("cannot convert non-real ExactScalar to float")
        return float(self.a) + float(self.b) * SQRT2_FLOAT

    def __bool__(self) -> bool:
        return not self.is_zero()

    def __eq__(self, other) -> bool:
        if isinstance(other, ExactScalar):
            return self.coefficients == other.coefficients
        if isinstance(other, (int, Fraction)):
            return self.a == other and not (self.b or self.c or self.d)
        return NotImplemented

    def __hash__(self) -> int:
        if not (self.b or self.c or self.d):
            return hash(self.a)
        return hash(self.coefficients)

    def __neg__(self) -> "ExactScalar":
        return ExactScalar(-self.a, -self.b, -self.c, -self.d)

    def __pos__(self) -> "ExactScalar":
        return self

    def __add__(self, other) -> "ExactScalar":
        try:
            o = ExactScalar.coerce(other)
        except TypeError:
            return NotImplemented
        return ExactScalar(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)

    __radd__ = __add__

    def __sub__(self, other) -> "ExactScalar":
        try:
            o = ExactScalar.coerce(other)
        except TypeError:
            return NotImplemented
        return ExactScalar(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)

    def __rsub__(self, other) -> "ExactScalar":
        return (-self) + other

    def __mul__(self, other) -> "ExactScalar":
        try:
            o = ExactScalar.coerce(other)
        except TypeError:
            return NotImplemented
        if not (o.b or o.c or o.d):
            k = o.a
            return ExactScalar(self.a * k, self.b * k, self.c * k, self.d * k)
        if not (self.b or self.c or self.d):
            k = self.a
            return ExactScalar(o.a * k, o.b * k, o.c * k, o.d * k)
        # x = u + i v with u, v in Q(sqrt2): xy = (u1 u2 - v1 v2) + i (u1 v2 + v1 u2)
        u1, v1 = (self.a, self.b), (self.c, self.d)
        u2, v2 = (o.a, o.b), (o.c, o.d)
        re = _qsub(_qmul(u1, u2), _qmul(v1, v2))
        im = _qadd(_qmul(u1, v2), _qmul(v1, u2))
        return ExactScalar(re[0], re[1], im[0], im[1])

    __rmul__ = __mul__

    def inverse(self) -> "ExactScalar":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        # 1/x = conj(x) / |x|^2 with |x|^2 = p + q sqrt2; 1/(p + q sqrt2) = (p - q sqrt2)/(p^2 - 2q^2)
        m = self.abs2()
        p, q = m.a, m.b
        norm = p * p - 2 * q * q
        inv_m = ExactScalar(p / norm, -q / norm)
        return self.conjugate() * inv_m

    def __truediv__(self, other) -> "ExactScalar":
        try:
            o = ExactScalar.coerce(other)
        except TypeError:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other) -> "ExactScalar":
        return ExactScalar.coerce(other) * self.inverse()

    def __pow__(self, k: int) -> "ExactScalar":
        if not isinstance(k, int):
            return NotImplemented
        base = self if k >= 0 else self.inverse()
        out = ONE
        for _ in range(abs(k)):
            out = out * base
        return out

    def _cmp(self, other) -> Sign:
        diff = self - other
        return real_sign(diff)

    def __lt__(self, other) -> bool:
        return self._cmp(other) is Sign.NEGATIVE

    def __le__(self, other) -> bool:
        return self._cmp(other) is not Sign.POSITIVE

    def __gt__(self, other) -> bool:
        return self._cmp(other) is Sign.POSITIVE

    def __ge__(self, other) -> bool:
        return self._cmp(other) is not Sign.NEGATIVE

    def __repr__(self) -> str:
        return f"ExactScalar({render(self)!r})"

    def __str__(self) -> str:
        return render(self)


ZERO = ExactScalar(0)
ONE = ExactScalar(1)
I = ExactScalar(0, 0, 1, 0)
SQRT2 = ExactScalar(0, 1, 0, 0)

Scalar = Union[ExactScalar, complex]


def conj_mul(x: Scalar, y: Scalar) -> Scalar:
    """Return ``conjugate(x) * y``, the Gram-entry primitive."""
    return x.conjugate() * y


def real_sign(x: ExactScalar) -> Sign:
    if not isinstance(x, ExactScalar):
        x = ExactScalar.coerce(x)
    if not x.is_real():
        raise ValueError(f"real_sign needs a real element, got {render(x)}")
    return _sign_q_sqrt2(x.a, x.b)


def is_exact(x) -> bool:
    return isinstance(x, (ExactScalar, int, Fraction))


# -- rendering ---------------------------------------------------------------

_BASIS = ("", "sqrt2", "i", "i*sqrt2")


def _render_term(coef: Fraction, basis: str) -> str:
    mag = abs(coef)
    if not basis:
        return str(mag)
    if mag == 1:
        return basis
    return f"{mag}*{basis}"


def render(x: ExactScalar) -> str:
    """Render in the literal grammar, e.g. ``1/3 - 7/24*i*sqrt2``."""
    parts: list[str] = []
    for coef, basis in zip(x.coefficients, _BASIS):
        if not coef:
            continue
        term = _render_term(coef, basis)
        if not parts:
            parts.append(term if coef > 0 else "-" + term)
        else:
            parts.append(("+ " if coef > 0 else "- ") + term)
    return " ".join(parts) if parts else "0"


def render_float(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return f"{z.real:.11e}"
    return f"{z.real:.11e}{z.imag:+.11e}i"


def render_scalar(x: Scalar) -> str:
    if isinstance(x, ExactScalar):
        return render(x)
    return render_float(x)


# -- parsing -----------------------------------------------------------------

class _Parser:
    """Recursive descent over ``expr := term (('+'|'-') term)*`` and friends."""

    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0

    def error(self, message: str, pos: int | None = None):
        raise AmplitudeParseError(message, self.text, self.pos if pos is None else pos)

    def skip(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def accept(self, token: str) -> bool:
        self.skip()
        if self.text.startswith(token, self.pos):
            self.pos += len(token)
            return True
        return False

    def parse(self) -> ExactScalar:
        if not self.text.strip():
            self.error("empty amplitude literal")
        value = self.expr()
        self.skip()
        if self.pos != len(self.text):
            self.error(f"unexpected {self.text[self.pos]!r}")
        return value

    def expr(self) -> ExactScalar:
        value = self.term()
        while True:
            if self.accept("+"):
                value = value + self.term()
            elif self.accept("-"):
                value = value - self.term()
            else:
                return value

    def term(self) -> ExactScalar:
        value = self.unary()
        while True:
            if self.accept("*"):
                value = value * self.unary()
            elif self.peek() == "/":
                self.pos += 1
                self.skip()
                at = self.pos
                divisor = self.unary()
                if divisor.is_zero():
                    self.error("division by zero", at)
                value = value / divisor
            else:
                return value

    def unary(self) -> ExactScalar:
        if self.accept("-"):
            return -self.unary()
        if self.accept("+"):
            return self.unary()
        return self.atom()

    def atom(self) -> ExactScalar:
        ch = self.peek()
        if ch == "(":
            self.pos += 1
            value = self.expr()
            if not self.accept(")"):
                self.error("expected ')'")
            return value
        if self.accept("sqrt(2)") or self.accept("sqrt2") or self.accept("√2"):
            return SQRT2
        if ch == "i":
            self.pos += 1
            return I
        if ch.isdigit():
            start = self.pos
            while self.pos < len(self.text) and (self.text[self.pos].isdigit() or self.text[self.pos] == "."):
                self.pos += 1
            token = self.text[start:self.pos]
            if token.count(".") > 1 or token.endswith("."):
                self.error(f"malformed number {token!r}", start)
            return ExactScalar(Fraction(token))
        if not ch:
            self.error("unexpected end of literal")
        self.error(f"unexpected {ch!r}")


def parse_amplitude(text: str) -> ExactScalar:
    """Parse an exact amplitude literal such as ``1/(2*sqrt2)`` or ``-7/24*i``."""
    return _Parser(text).parse()
