"""Exact scalars of Q(i)."""

from fractions import Fraction
from typing import Tuple, Union

from lp_graph_algebras.errors import ParseError

Number = Union[int, Fraction, "GaussianRational"]


def parse_rational(text: str) -> Fraction:
    """Parse "p/q", an integer or a finite decimal into a Fraction."""
    cleaned = text.strip()
    try:
        return Fraction(cleaned)
    except (ValueError, ZeroDivisionError) as e:
        raise ParseError(f"Invalid rational number: {text!r}", text=text) from e


def format_rational(value: Fraction) -> str:
    """Render a Fraction as "p" or "p/q"."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


class GaussianRational:
    """a + bi with a, b rational, kept in lowest terms by Fraction."""

    __slots__ = ("re", "im")

    def __init__(self, re: Union[int, Fraction, str] = 0, im: Union[int, Fraction, str] = 0) -> None:
        self.re = parse_rational(re) if isinstance(re, str) else Fraction(re)
        self.im = parse_rational(im) if isinstance(im, str) else Fraction(im)

    @classmethod
    def coerce(cls, value: Number) -> "GaussianRational":
        if isinstance(value, GaussianRational):
            return value
        return cls(value)

    @classmethod
    def i(cls) -> "GaussianRational":
        return cls(0, 1)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def norm_squared(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def __add__(self, other: Number) -> "GaussianRational":
        o = GaussianRational.coerce(other)
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self) -> "GaussianRational":
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, other: Number) -> "GaussianRational":
        return self + (-GaussianRational.coerce(other))

    def __rsub__(self, other: Number) -> "GaussianRational":
        return GaussianRational.coerce(other) - self

    def __mul__(self, other: Number) -> "GaussianRational":
        o = GaussianRational.coerce(other)
        return GaussianRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other: Number) -> "GaussianRational":
        o = GaussianRational.coerce(other)
        denom = o.norm_squared()
        if denom == 0:
            raise ZeroDivisionError("division by zero in Q(i)")
        num = self * o.conjugate()
        return GaussianRational(num.re / denom, num.im / denom)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = GaussianRational(other)
        if not isinstance(other, GaussianRational):
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self) -> int:
        return hash((self.re, self.im))

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def to_pair(self) -> Tuple[str, str]:
        """(re, im) as "p/q" strings for serialization."""
        return format_rational(self.re), format_rational(self.im)

    def __str__(self) -> str:
        if self.im == 0:
            return format_rational(self.re)
        if self.re == 0:
            return "i" if self.im == 1 else f"{format_rational(self.im)}i"
        sign = "+" if self.im > 0 else "-"
        return f"({format_rational(self.re)}{sign}{format_rational(abs(self.im))}i)"

    def __repr__(self) -> str:
        return f"GaussianRational({self!s})"


ZERO = GaussianRational(0)
ONE = GaussianRational(1)
IMAG_UNIT = GaussianRational(0, 1)
