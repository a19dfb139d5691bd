"""Named exponents: exact rationals and high-precision reals."""
from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_DOWN, Decimal, localcontext
from fractions import Fraction

_PREC = 60


@dataclass(frozen=True)
class NamedConstant:
    name: str
    value: Decimal
    exact: Fraction | None
    formula: str
    digits: int

    def rendered(self, digits: int | None = None) -> str:
        """Terminating rationals print in full; everything else is truncated."""
        if self.exact is not None and _terminates(self.exact):
            return _decimal_str(self.exact)
        d = self.digits if digits is None else digits
        return str(self.value.quantize(Decimal(1).scaleb(-d), rounding=ROUND_DOWN))

    def as_json(self) -> dict:
        return {
            "name": self.name,
            "formula": self.formula,
            "exact": str(self.exact) if self.exact is not None else None,
            "decimal": str(+self.value),
            "rendered": self.rendered(),
        }


def _terminates(f: Fraction) -> bool:
    d = f.denominator
    for p in (2, 5):
        while d % p == 0:
            d //= p
    return d == 1


def _decimal_str(f: Fraction) -> str:
    with localcontext() as ctx:
        ctx.prec = _PREC
        return str(Decimal(f.numerator) / Decimal(f.denominator))


def constants(digits: int = 4) -> list[NamedConstant]:
    with localcontext() as ctx:
        ctx.prec = _PREC
        beta = Decimal(15) / (Decimal(32) * Decimal(1).exp().sqrt())
        one_minus = 1 - beta
        carmichael = Decimal("0.4736") * one_minus
        out = [
            NamedConstant("beta_threshold", beta, None, "15/(32*sqrt(e))", digits),
            NamedConstant("one_minus", one_minus, None, "1 - 15/(32*sqrt(e))", digits),
            NamedConstant("carmichael", carmichael, None, "0.4736*(1 - 15/(32*sqrt(e)))", digits),
        ]
        for name, f in (
            ("quadrilinear", Fraction(17, 32)),
            ("maynard", Fraction(11, 21)),
            ("bfi", Fraction(29, 56)),
            ("type_ii_basic", Fraction(127, 224)),
        ):
            out.append(
                NamedConstant(name, Decimal(f.numerator) / Decimal(f.denominator), f, str(f), digits)
            )
    return out


def constant_table(digits: int = 4) -> dict[str, NamedConstant]:
    return {c.name: c for c in constants(digits)}
