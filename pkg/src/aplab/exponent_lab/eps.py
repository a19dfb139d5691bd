"""Numbers of the form ``c + d*eps`` for a positive infinitesimal ``eps``."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering

from .._exact import as_fraction
from ..errors import AplabError


@total_ordering
@dataclass(frozen=True)
class EpsRational:
    """``const_part + eps_coeff * eps``, ordered lexicographically."""

    const_part: Fraction = Fraction(0)
    eps_coeff: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "const_part", as_fraction(self.const_part))
        object.__setattr__(self, "eps_coeff", as_fraction(self.eps_coeff))

    @classmethod
    def coerce(cls, value) -> "EpsRational":
        if isinstance(value, EpsRational):
            return value
        if isinstance(value, str):
            from .system import parse_linear

            coeffs, const = parse_linear(value)
            if coeffs:
                raise AplabError(f"{value!r} is not a constant")
            return const
        return cls(as_fraction(value))

    def _key(self) -> tuple[Fraction, Fraction]:
        return (self.const_part, self.eps_coeff)

    def __eq__(self, other) -> bool:
        try:
            return self._key() == EpsRational.coerce(other)._key()
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self) -> int:
        return hash(self._key())

    def __lt__(self, other) -> bool:
        return self._key() < EpsRational.coerce(other)._key()

    def __add__(self, other) -> "EpsRational":
        o = EpsRational.coerce(other)
        return EpsRational(self.const_part + o.const_part, self.eps_coeff + o.eps_coeff)

    __radd__ = __add__

    def __neg__(self) -> "EpsRational":
        return EpsRational(-self.const_part, -self.eps_coeff)

    def __sub__(self, other) -> "EpsRational":
        return self + (-EpsRational.coerce(other))

    def __rsub__(self, other) -> "EpsRational":
        return EpsRational.coerce(other) - self

    def __mul__(self, other) -> "EpsRational":
        if isinstance(other, EpsRational):
            if other.eps_coeff and self.eps_coeff:
                raise AplabError("product of two eps-dependent values is not linear")
            if other.eps_coeff:
                return other * self.const_part
            other = other.const_part
        k = as_fraction(other)
        return EpsRational(self.const_part * k, self.eps_coeff * k)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "EpsRational":
        if isinstance(other, EpsRational):
            if other.eps_coeff:
                raise AplabError("division by an eps-dependent value")
            other = other.const_part
        k = as_fraction(other)
        if k == 0:
            raise ZeroDivisionError("division by zero")
        return EpsRational(self.const_part / k, self.eps_coeff / k)

    def sign(self) -> int:
        if self.const_part:
            return 1 if self.const_part > 0 else -1
        if self.eps_coeff:
            return 1 if self.eps_coeff > 0 else -1
        return 0

    def at(self, eps) -> Fraction:
        """Numeric value for a concrete ``eps``."""
        return self.const_part + self.eps_coeff * as_fraction(eps)

    def as_json(self) -> dict:
        return {"const": str(self.const_part), "eps": str(self.eps_coeff), "text": str(self)}

    def __str__(self) -> str:
        c, d = self.const_part, self.eps_coeff
        if not d:
            return str(c)
        mag = "" if abs(d) == 1 else f"{abs(d)}"
        eps = f"{mag}e" if "/" not in mag else f"({mag})e"
        if not c:
            return eps if d > 0 else f"-{eps}"
        return f"{c} {'+' if d > 0 else '-'} {eps}"

    def __repr__(self) -> str:
        return f"EpsRational({self})"


def eps_compare(u, v) -> int:
    """-1, 0 or 1 as ``u`` is below, equal to or above ``v``."""
    u, v = EpsRational.coerce(u), EpsRational.coerce(v)
    return (u > v) - (u < v)


ZERO = EpsRational()
EPS = EpsRational(0, 1)
