"""Exact rational arithmetic for everything that touches a state path.

Every cardinal, radix, carry, conversion coefficient, and transformant is a
`fractions.Fraction`: arbitrary precision, always canonical (gcd of numerator
and denominator 1, denominator >= 1, zero as 0/1), compared exactly by
cross-multiplication. Addition, subtraction, multiplication, division, and
`min` are the native operators; this module adds the text form shared by the
definition language and traces, floor-to-integer, and a construction guard
that refuses floats.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction

Rational = Fraction

_RATIONAL_RE = re.compile(r"-?[0-9]+(?:/[0-9]+)?")


def normalize(numerator: int, denominator: int = 1) -> Fraction:
    """Canonical rational equal to numerator/denominator, sign on the numerator.

    A zero denominator raises ZeroDivisionError.
    """
    return Fraction(numerator, denominator)


def as_rational(value: int | str | Fraction) -> Fraction:
    """Coerce an int, Fraction, or `num[/den]` string to an exact rational.

    Floats are rejected outright: they would smuggle binary rounding onto a
    state path.
    """
    if isinstance(value, float):
        raise TypeError(f"refusing float {value!r}: state values must stay exact")
    if isinstance(value, str):
        return parse_rational(value)
    return Fraction(value)


def floor_to_integer(a: Fraction) -> Fraction:
    """Greatest integer <= a (toward minus infinity), as a denominator-1 rational."""
    return Fraction(math.floor(a))


def parse_rational(text: str) -> Fraction:
    """Parse `digits` or `digits/digits` with an optional leading minus sign.

    Anything else, including decimal points and a zero denominator, raises
    ValueError.
    """
    if _RATIONAL_RE.fullmatch(text) is None:
        raise ValueError(f"not a rational literal: {text!r}")
    num, _, den = text.partition("/")
    if den == "":
        return Fraction(int(num))
    if int(den) == 0:
        raise ValueError(f"zero denominator in {text!r}")
    return Fraction(int(num), int(den))


def format_rational(a: Fraction) -> str:
    """Canonical text: `num` for integers, `num/den` otherwise. Never decimal."""
    return str(a)
