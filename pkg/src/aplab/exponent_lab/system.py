"""Linear constraints over exponent symbols, their text syntax and substitutions.

Text syntax, one relation per line::

    7q + 12r + 10s < 4 - 18e
    2q3 < q2 < 1/32 - e        # chains expand into one constraint per link
    n + m = 1                  # equality becomes two non-strict constraints

``e`` (also ``eps``) is the infinitesimal; coefficients may be integers,
fractions or decimals written directly before a symbol (``8/7q2``) or with
``*``. Relations: ``<  <=  >  >=  =`` and the unicode forms ``≤ ≥``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from ..errors import AplabError
from .eps import ZERO, EpsRational

EPS_NAMES = frozenset({"e", "eps", "ε"})

_TERM = re.compile(
    r"\s*(?P<sign>[+-])?\s*"
    r"(?P<coef>\d+(?:\.\d+)?(?:\s*/\s*\d+(?:\.\d+)?)?)?\s*\*?\s*"
    r"(?P<sym>[A-Za-z_ε][A-Za-z0-9_]*)?\s*"
)
_REL = re.compile(r"(<=|>=|≤|≥|<|>|=)")


def _coef(text: str | None) -> Fraction:
    if not text:
        return Fraction(1)
    if "/" in text:
        num, den = text.split("/")
        return Fraction(num.strip()) / Fraction(den.strip())
    return Fraction(text)


def parse_linear(text: str) -> tuple[dict[str, Fraction], EpsRational]:
    """Parse ``2q + 5/2 r - 3e + 1/4`` into symbol coefficients and a constant."""
    coeffs: dict[str, Fraction] = {}
    const = ZERO
    pos, first = 0, True
    text = text.strip()
    if not text:
        raise AplabError("empty linear expression")
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or m.end() == pos or not (m["coef"] or m["sym"]):
            raise AplabError(f"cannot parse {text!r} at position {pos}")
        if not first and not m["sign"]:
            raise AplabError(f"missing operator in {text!r} at position {pos}")
        k = _coef(m["coef"]) * (-1 if m["sign"] == "-" else 1)
        sym = m["sym"]
        if sym is None:
            const = const + k
        elif sym in EPS_NAMES:
            const = const + EpsRational(0, k)
        else:
            coeffs[sym] = coeffs.get(sym, Fraction(0)) + k
        pos, first = m.end(), False
    return {s: c for s, c in coeffs.items() if c}, const


@dataclass(frozen=True)
class LinearConstraint:
    """``sum coeffs[s] * s  <  bound`` (or ``<=`` when not strict).

    Rows derived during elimination may have no coefficients left; they then
    state a plain comparison between zero and the bound.
    """

    coeffs: Mapping[str, Fraction]
    bound: EpsRational
    strict: bool = True
    label: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        clean = {s: Fraction(c) for s, c in self.coeffs.items() if c}
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))
        object.__setattr__(self, "bound", EpsRational.coerce(self.bound))

    @property
    def symbols(self) -> frozenset[str]:
        return frozenset(self.coeffs)

    def lhs(self, point: Mapping[str, EpsRational]) -> EpsRational:
        total = ZERO
        for s, c in self.coeffs.items():
            if s not in point:
                raise AplabError(f"assignment is missing symbol {s!r}")
            total = total + EpsRational.coerce(point[s]) * c
        return total

    def holds(self, point: Mapping[str, EpsRational]) -> bool:
        v = self.lhs(point)
        return v < self.bound if self.strict else v <= self.bound

    def trivially_true(self) -> bool:
        assert not self.coeffs
        return ZERO < self.bound if self.strict else ZERO <= self.bound

    def negated(self) -> "LinearConstraint":
        """The complement: ``sum >= bound`` becomes ``-sum <= -bound`` and so on."""
        return LinearConstraint(
            {s: -c for s, c in self.coeffs.items()}, -self.bound, not self.strict, f"not({self})"
        )

    def __str__(self) -> str:
        parts = []
        for s, c in self.coeffs.items():
            mag = "" if abs(c) == 1 else str(abs(c))
            sign = "-" if c < 0 else "+"
            parts.append((sign, f"{mag}{s}"))
        if not parts:
            lhs = "0"
        else:
            lhs = ("-" if parts[0][0] == "-" else "") + parts[0][1]
            lhs += "".join(f" {sg} {t}" for sg, t in parts[1:])
        return f"{lhs} {'<' if self.strict else '<='} {self.bound}"

    def as_json(self) -> dict:
        return {
            "text": str(self),
            "coeffs": {s: str(c) for s, c in self.coeffs.items()},
            "bound": self.bound.as_json(),
            "strict": self.strict,
        }


def parse_constraints(text: str) -> list[LinearConstraint]:
    """Parse one relation (possibly chained) into normalized constraints."""
    pieces = _REL.split(text.split("#", 1)[0].strip())
    if len(pieces) < 3 or len(pieces) % 2 == 0:
        raise AplabError(f"expected a relation in {text!r}")
    sides = [parse_linear(p) for p in pieces[0::2]]
    ops = pieces[1::2]
    out: list[LinearConstraint] = []
    for (lc, lk), op, (rc, rk) in zip(sides, ops, sides[1:]):
        diff = dict(lc)
        for s, c in rc.items():
            diff[s] = diff.get(s, Fraction(0)) - c
        bound = rk - lk
        rows: list[tuple[dict, EpsRational, bool]] = []
        if op in ("<", "<=", "≤"):
            rows.append((diff, bound, op == "<"))
        elif op in (">", ">=", "≥"):
            rows.append(({s: -c for s, c in diff.items()}, -bound, op == ">"))
        else:
            rows.append((diff, bound, False))
            rows.append(({s: -c for s, c in diff.items()}, -bound, False))
        for coeffs, b, strict in rows:
            if not any(coeffs.values()):
                raise AplabError(f"constraint without symbols in {text!r}")
            out.append(LinearConstraint(coeffs, b, strict, text.strip()))
    return out


@dataclass(frozen=True)
class ConstraintSystem:
    name: str
    symbols: tuple[str, ...]
    constraints: tuple[LinearConstraint, ...]
    implicit_nonneg: bool = True
    description: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "symbols", tuple(self.symbols))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        known = set(self.symbols)
        for c in self.constraints:
            extra = c.symbols - known
            if extra:
                raise AplabError(f"constraint {c} uses undeclared symbols {sorted(extra)}")

    @classmethod
    def from_text(
        cls,
        name: str,
        lines: str | Sequence[str],
        *,
        symbols: Sequence[str] | None = None,
        implicit_nonneg: bool = True,
        description: str = "",
    ) -> "ConstraintSystem":
        if isinstance(lines, str):
            lines = lines.splitlines()
        rows: list[LinearConstraint] = []
        seen: list[str] = []
        for line in lines:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            for c in parse_constraints(line):
                rows.append(c)
                seen.extend(s for s in c.coeffs if s not in seen)
        if symbols is None:
            symbols = seen
        return cls(name, tuple(symbols), tuple(rows), implicit_nonneg, description)

    def nonneg_rows(self) -> list[LinearConstraint]:
        if not self.implicit_nonneg:
            return []
        return [LinearConstraint({s: Fraction(-1)}, ZERO, False, f"{s} >= 0") for s in self.symbols]

    def all_constraints(self) -> list[LinearConstraint]:
        return list(self.constraints) + self.nonneg_rows()

    def with_constraints(self, extra: Iterable[LinearConstraint], name: str | None = None) -> "ConstraintSystem":
        extra = list(extra)
        symbols = list(self.symbols)
        for c in extra:
            symbols.extend(s for s in c.coeffs if s not in symbols)
        return ConstraintSystem(
            name or self.name, tuple(symbols), self.constraints + tuple(extra), self.implicit_nonneg, self.description
        )

    def check_point(self, point: Mapping[str, object]) -> tuple[bool, LinearConstraint | None]:
        """Whether ``point`` satisfies every constraint, and the first one it breaks."""
        missing = [s for s in self.symbols if s not in point]
        if missing:
            raise AplabError(f"assignment is missing symbols {missing}")
        pt = {s: EpsRational.coerce(v) for s, v in point.items()}
        for c in self.all_constraints():
            if not c.holds(pt):
                return False, c
        return True, None

    def render(self) -> list[str]:
        return [str(c) for c in self.constraints]

    def as_json(self) -> dict:
        return {
            "name": self.name,
            "symbols": list(self.symbols),
            "implicit_nonneg": self.implicit_nonneg,
            "description": self.description,
            "constraints": [c.as_json() for c in self.constraints],
        }


@dataclass(frozen=True)
class Substitution:
    """Each target symbol becomes a linear form in source symbols.

    Targets that are not listed map to themselves.
    """

    forms: Mapping[str, tuple[Mapping[str, Fraction], EpsRational]]

    @classmethod
    def from_text(cls, mapping: Mapping[str, str] | None = None) -> "Substitution":
        return cls({t: parse_linear(expr) for t, expr in (mapping or {}).items()})

    @classmethod
    def identity(cls) -> "Substitution":
        return cls({})

    def apply(self, c: LinearConstraint) -> LinearConstraint:
        coeffs: dict[str, Fraction] = {}
        shift = ZERO
        for t, a in c.coeffs.items():
            form, const = self.forms.get(t, ({t: Fraction(1)}, ZERO))
            for s, k in form.items():
                coeffs[s] = coeffs.get(s, Fraction(0)) + a * k
            shift = shift + const * a
        return LinearConstraint(coeffs, c.bound - shift, c.strict, c.label)

    def as_json(self) -> dict:
        out = {}
        for t, (form, const) in self.forms.items():
            terms = " + ".join(f"{k}*{s}" for s, k in form.items())
            if const != ZERO:
                terms = f"{terms} + ({const})" if terms else str(const)
            out[t] = terms or "0"
        return out
