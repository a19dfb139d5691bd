"""Exact rational and integer-root helpers shared by the counting modules."""
from __future__ import annotations

import math
from decimal import Decimal
from fractions import Fraction
from numbers import Rational
from typing import Union

RationalLike = Union[int, Fraction, str, float, Decimal]


def as_fraction(value: RationalLike) -> Fraction:
    """Coerce ``value`` to an exact :class:`Fraction`.

    Strings accept ``"7/20"`` and decimal notation; floats are read through
    their shortest decimal repr, so ``0.35`` becomes ``7/20`` rather than the
    nearest binary fraction.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r}")
        return Fraction(repr(value))
    if isinstance(value, Decimal):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational")


def iroot(n: int, k: int) -> int:
    """Largest integer r with r**k <= n."""
    if n < 0:
        raise ValueError("iroot of a negative number")
    if k < 1:
        raise ValueError("root degree must be positive")
    if n < 2 or k == 1:
        return n
    if k == 2:
        return math.isqrt(n)
    x = 1 << -(-n.bit_length() // k)
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            return x
        x = y


def floor_scaled_power(c: RationalLike, x: int, e: RationalLike) -> int:
    """``floor(c * x**e)`` computed exactly for ``c > 0``, ``x >= 1``, ``e >= 0``."""
    c = as_fraction(c)
    e = as_fraction(e)
    if c <= 0 or x < 1 or e < 0:
        raise ValueError("floor_scaled_power needs c > 0, x >= 1, e >= 0")
    u, v = e.numerator, e.denominator
    root = iroot(c.numerator ** v * x ** u, v)
    # (y * c_den)^v <= c_num^v * x^u  <=>  y * c_den <= root
    return root // c.denominator


def floor_power(x: int, e: RationalLike) -> int:
    return floor_scaled_power(1, x, e)


def dyadic_bounds(x: int, e: RationalLike) -> tuple[int, int]:
    """Integer bounds ``(lo, hi)`` with ``X < n <= 2X  <=>  lo < n <= hi`` for ``X = x**e``."""
    return floor_power(x, e), floor_scaled_power(2, x, e)


def power_le(n: int, x: int, e: RationalLike) -> bool:
    """Exact test of ``n <= x**e`` for nonnegative integers and ``e >= 0``."""
    e = as_fraction(e)
    return n ** e.denominator <= x ** e.numerator


def frac_str(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"
