"""Fourier--Motzkin elimination over ``c + d*eps`` bounds.

Elimination is exact for systems mixing strict and non-strict inequalities:
combining two rows gives a strict row as soon as either input is strict.
Variable coefficients stay rational, so pivots never divide by ``eps``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from ..errors import AplabError
from .eps import ZERO, EpsRational
from .system import ConstraintSystem, LinearConstraint, Substitution, parse_linear

_OBJ = "__objective__"
MAX_ROWS = 20000


class Infeasible(AplabError):
    pass


class Unbounded(AplabError):
    pass


def _normalize(c: LinearConstraint) -> LinearConstraint:
    if not c.coeffs:
        return c
    scale = abs(next(iter(c.coeffs.values())))
    if scale == 1:
        return c
    return LinearConstraint({s: v / scale for s, v in c.coeffs.items()}, c.bound / scale, c.strict, c.label)


def _prune(rows: Sequence[LinearConstraint]) -> list[LinearConstraint]:
    """Drop duplicates and keep only the tightest row per direction."""
    best: dict[tuple, LinearConstraint] = {}
    order: list[tuple] = []
    for r in map(_normalize, rows):
        key = tuple(r.coeffs.items())
        cur = best.get(key)
        if cur is None:
            best[key] = r
            order.append(key)
        elif r.bound < cur.bound or (r.bound == cur.bound and r.strict and not cur.strict):
            best[key] = r
    return [best[k] for k in order]


def _eliminate_rows(rows: Sequence[LinearConstraint], sym: str) -> list[LinearConstraint]:
    pos, neg, keep = [], [], []
    for r in rows:
        a = r.coeffs.get(sym, 0)
        (pos if a > 0 else neg if a < 0 else keep).append(r)
    for p in pos:
        ap = p.coeffs[sym]
        for n in neg:
            an = -n.coeffs[sym]
            coeffs: dict[str, Fraction] = {}
            for s, v in p.coeffs.items():
                if s != sym:
                    coeffs[s] = coeffs.get(s, Fraction(0)) + v / ap
            for s, v in n.coeffs.items():
                if s != sym:
                    coeffs[s] = coeffs.get(s, Fraction(0)) + v / an
            keep.append(
                LinearConstraint(coeffs, p.bound / ap + n.bound / an, p.strict or n.strict)
            )
    out = _prune(keep)
    if len(out) > MAX_ROWS:
        raise AplabError(f"elimination produced {len(out)} rows; system too large")
    return out


def _contradiction(rows: Sequence[LinearConstraint]) -> LinearConstraint | None:
    for r in rows:
        if not r.coeffs and not r.trivially_true():
            return r
    return None


def _pick_order(rows: Sequence[LinearConstraint], symbols: Sequence[str]) -> str:
    """Next symbol to eliminate: the one creating the fewest combined rows."""
    def cost(s: str) -> tuple[int, int]:
        p = sum(1 for r in rows if r.coeffs.get(s, 0) > 0)
        n = sum(1 for r in rows if r.coeffs.get(s, 0) < 0)
        return (p * n - p - n, symbols.index(s))

    return min(symbols, key=cost)


def fm_eliminate(system: ConstraintSystem, symbol: str) -> ConstraintSystem:
    """Project ``system`` onto the remaining symbols.

    Rows left without symbols are dropped when they hold and kept when they
    fail, so an infeasible input stays visibly infeasible.
    """
    if symbol not in system.symbols:
        raise AplabError(f"unknown symbol {symbol!r}")
    rows = _eliminate_rows(system.all_constraints(), symbol)
    rows = [r for r in rows if r.coeffs or not r.trivially_true()]
    rest = tuple(s for s in system.symbols if s != symbol)
    # nonnegativity of the remaining symbols is already materialized in rows
    return ConstraintSystem(
        f"{system.name}/{symbol}", rest, tuple(rows), False, system.description
    )


def _parse_objective(objective) -> tuple[dict[str, Fraction], EpsRational]:
    if isinstance(objective, str):
        return parse_linear(objective)
    if isinstance(objective, tuple):
        return dict(objective[0]), EpsRational.coerce(objective[1])
    return {s: Fraction(v) for s, v in dict(objective).items()}, ZERO


@dataclass(frozen=True)
class Supremum:
    value: EpsRational
    attained: bool

    def __str__(self) -> str:
        return f"{self.value} ({'attained' if self.attained else 'not attained'})"

    def as_json(self) -> dict:
        return {"sup": self.value.as_json(), "attained": self.attained, "text": str(self)}


def maximize(system: ConstraintSystem, objective) -> Supremum:
    """Supremum of a linear objective over the (possibly open) feasible region."""
    coeffs, const = _parse_objective(objective)
    unknown = set(coeffs) - set(system.symbols)
    if unknown:
        raise AplabError(f"objective uses undeclared symbols {sorted(unknown)}")
    link = {s: -v for s, v in coeffs.items()}
    link[_OBJ] = Fraction(1)
    rows = system.all_constraints() + [LinearConstraint(link, const, False)]
    remaining = list(system.symbols)
    while remaining:
        sym = _pick_order(rows, remaining)
        rows = _eliminate_rows(rows, sym)
        remaining.remove(sym)
        bad = _contradiction(rows)
        if bad is not None:
            raise Infeasible(f"system {system.name!r} is infeasible ({bad})")
    uppers = [(r.bound / r.coeffs[_OBJ], r.strict) for r in rows if r.coeffs.get(_OBJ, 0) > 0]
    if not uppers:
        raise Unbounded(f"objective is unbounded on {system.name!r}")
    sup = min(b for b, _ in uppers)
    attained = not any(strict for b, strict in uppers if b == sup)
    return Supremum(sup, attained)


def _choose(lo, lo_strict, hi, hi_strict) -> EpsRational:
    if lo is None and hi is None:
        return ZERO
    if lo is None:
        return hi if not hi_strict else hi - 1
    if hi is None:
        return lo if not lo_strict else lo + 1
    if lo == hi:
        return lo
    return (lo + hi) / 2


def find_point(system: ConstraintSystem) -> dict[str, EpsRational] | None:
    """A feasible point (coordinates in ``c + d*eps``), or ``None`` if infeasible."""
    rows = system.all_constraints()
    stages: list[tuple[str, list[LinearConstraint]]] = []
    remaining = list(system.symbols)
    while remaining:
        sym = _pick_order(rows, remaining)
        stages.append((sym, rows))
        rows = _eliminate_rows(rows, sym)
        remaining.remove(sym)
        if _contradiction(rows) is not None:
            return None
    if _contradiction(rows) is not None:
        return None
    point: dict[str, EpsRational] = {}
    for sym, stage_rows in reversed(stages):
        lo = hi = None
        lo_strict = hi_strict = False
        for r in stage_rows:
            a = r.coeffs.get(sym, 0)
            if not a:
                continue
            rest = ZERO
            for s, v in r.coeffs.items():
                if s != sym:
                    rest = rest + point[s] * v
            b = (r.bound - rest) / a
            if a > 0:
                if hi is None or b < hi or (b == hi and r.strict):
                    hi_strict = r.strict if (hi is None or b < hi) else True
                    hi = b
            else:
                if lo is None or b > lo or (b == lo and r.strict):
                    lo_strict = r.strict if (lo is None or b > lo) else True
                    lo = b
        if lo is not None and hi is not None and (lo > hi or (lo == hi and (lo_strict or hi_strict))):
            raise AplabError("back-substitution failed; elimination is inconsistent")
        point[sym] = _choose(lo, lo_strict, hi, hi_strict)
    return {s: point[s] for s in system.symbols}


def check_point(system: ConstraintSystem, point: Mapping[str, object]):
    return system.check_point(point)


# ---------------------------------------------------------------------------
# entailment

@dataclass
class Verdict:
    """Outcome of one conclusion.

    ``status`` is ``entailed``, ``entailed_rescaled`` (holds once the eps in
    the premises is multiplied by ``rescale`` or more), ``refuted`` (with a
    premise point violating the conclusion) or ``unbounded``.
    """

    conclusion: str
    substituted: str
    status: str
    sup: EpsRational | None = None
    attained: bool | None = None
    bound: EpsRational | None = None
    margin: EpsRational | None = None
    rescale: Fraction | None = None
    witness: dict[str, EpsRational] | None = None
    note: str = ""

    @property
    def ok(self) -> bool:
        return self.status in ("entailed", "entailed_rescaled")

    def as_json(self) -> dict:
        return {
            "conclusion": self.conclusion,
            "substituted": self.substituted,
            "status": self.status,
            "sup": str(self.sup) if self.sup is not None else None,
            "attained": self.attained,
            "bound": str(self.bound) if self.bound is not None else None,
            "margin": str(self.margin) if self.margin is not None else None,
            "rescale": str(self.rescale) if self.rescale is not None else None,
            "witness": {s: str(v) for s, v in self.witness.items()} if self.witness else None,
            "note": self.note,
        }


def _premise_eps_scaled(premises: ConstraintSystem, k: Fraction) -> ConstraintSystem:
    rows = [
        LinearConstraint(c.coeffs, EpsRational(c.bound.const_part, c.bound.eps_coeff * k), c.strict, c.label)
        for c in premises.constraints
    ]
    return ConstraintSystem(premises.name, premises.symbols, rows, premises.implicit_nonneg, premises.description)


def entails(premises: ConstraintSystem, c: LinearConstraint, label: str = "") -> Verdict:
    """Decide whether every point of ``premises`` satisfies ``c`` (symbols already substituted)."""
    text = label or str(c)
    try:
        sup = maximize(premises, c.coeffs)
    except Unbounded:
        return Verdict(text, str(c), "unbounded", bound=c.bound, note="lhs unbounded on premises")
    b = c.bound
    holds = sup.value < b or (sup.value == b and (not c.strict or not sup.attained))
    if holds:
        return Verdict(text, str(c), "entailed", sup.value, sup.attained, b, b - sup.value)
    verdict = Verdict(text, str(c), "refuted", sup.value, sup.attained, b, b - sup.value)
    s, d = sup.value, b
    if s.const_part == d.const_part and s.eps_coeff < 0 and d.eps_coeff < s.eps_coeff:
        k = d.eps_coeff / s.eps_coeff
        scaled = maximize(_premise_eps_scaled(premises, k), c.coeffs)
        if scaled.value < b or (scaled.value == b and (not c.strict or not scaled.attained)):
            verdict.status = "entailed_rescaled"
            verdict.rescale = k
            verdict.note = f"holds when the premises use {k}*eps in place of eps"
            return verdict
    witness = find_point(premises.with_constraints([c.negated()]))
    if witness is None:
        raise AplabError("refuted conclusion without a witness; solver inconsistency")
    verdict.witness = witness
    return verdict


def implies(
    premises: ConstraintSystem,
    subst: Substitution,
    conclusions: ConstraintSystem | Sequence[LinearConstraint],
) -> list[Verdict]:
    """Verdict for each conclusion after rewriting it through ``subst``."""
    rows = conclusions.constraints if isinstance(conclusions, ConstraintSystem) else conclusions
    out = []
    for c in rows:
        sub = subst.apply(c)
        extra = sub.symbols - set(premises.symbols)
        if extra:
            raise AplabError(f"conclusion {c} leaves unmapped symbols {sorted(extra)}")
        out.append(entails(premises, sub, c.label or str(c)))
    return out
