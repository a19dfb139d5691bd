"""Built-in exponent systems, the deduction chains between them, and findings.

Symbols are log_x exponents: ``q`` stands for ``log Q / log x`` and so on.
Where a system involves a factorization ``NM ~ x`` the side relation is the
exact equality ``n + m = 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ..errors import AplabError
from .eps import EpsRational
from .solver import Verdict, entails, implies, maximize
from .system import ConstraintSystem, LinearConstraint, Substitution, parse_constraints

_TYPE_II_LITERAL = """
q1 + q2 < 1/2 + e
q1 + q3 < 1/2 - 2e
q3 < q2 < 1/32 - e
"""
_TYPE_II_SQUARED = """
q1 + q2 < 1/2 + e
q1 + 2q3 < 1/2 - 2e
2q3 < q2 < 1/32 - e
"""
_SMALL_TYPE_II = """
q1 + q2 < 1/2 + e
2q1 + q2 + q3 < 1 - 10e
q1 + 8/7q2 + 2q3 < 4/7 - 10e
2q1 + 2q2 + q3 < 29/28 - 10e
"""

# name -> (symbols, rows, description)
_SOURCES: dict[str, tuple[str, str, str]] = {
    "cons0": (
        "q r s t",
        """
        q + r < 1/2 + e
        q + 2s < 1/2 - 2e
        2s < r < 1/32 - e
        t = s
        """,
        "quadrilinear moduli ranges Q, R, S, T with the T-range tied to the S-range; "
        "three displayed relations plus t = s",
    ),
    "bfi": (
        "q r",
        """
        q < 1/3
        r < 1/5
        5q + 2r < 2
        q + r < 29/56
        """,
        "bilinear ranges of Bombieri, Friedlander and Iwaniec (1986); sup q+r = 29/56",
    ),
    "maynard_bilinear": (
        "q r",
        """
        q <= 10/21
        r <= 1/21 - e
        """,
        "Maynard's bilinear choice (Q, R) = (x^(10/21), x^(1/21-e)); q+r reaches 11/21 - e",
    ),
    "propQ5_1": ("q1 q2 q3", _TYPE_II_LITERAL, "type II proposition hypotheses as printed (single power of Q3)"),
    "propQ5_2": ("q1 q2 q3", _TYPE_II_SQUARED, "sieve asymptotics hypotheses (Q3 squared)"),
    "propQ5_3": ("q1 q2 q3", _TYPE_II_LITERAL, "four-prime-factor hypotheses (single power of Q3)"),
    "propQ5_4": (
        "q1 q2 q3",
        _TYPE_II_SQUARED,
        "three-prime-factor hypotheses (Q3 squared); the printed optimal tuple starts at "
        "15/35 + 2e, read here as 15/32 + 2e (typo flagged)",
    ),
    "zhang1": (
        "q r s n m",
        """
        7q + 12r + 10s < 4 - 18e
        q < n
        n + q + 2s < 1 - 5e
        n + m = 1
        """,
        "first Zhang-type exponential sum estimate",
    ),
    "zhang2": (
        "q r n m",
        """
        n + q < 1 - 4e
        n + 5/2q + 3r < 2 - 4e
        2n + q + r < 2 - 4e
        n + m = 1
        """,
        "second exponential sum estimate",
    ),
    "zhang_style": (
        "q1 q2 q3 n m",
        """
        7q1 + 12q2 + 10q3 < 4 - 20e
        q2 < q1 + 3q3
        q1 + e < n
        n + q1 + 2q3 < 1 - 6e
        n + m = 1
        """,
        "Zhang-style estimate with three moduli factors",
    ),
    "zhang_typeII_near": (
        "q r s",
        """
        r < q + 3s
        q + 2s < 1/2 - 20e
        2q + r + s < 1 - 20e
        7q + 12r + 10s < 4 - 20e
        """,
        "type II estimate near x^(1/2)",
    ),
    "basic_typeII": ("q r", "q + r <= 127/224 - e", "type II estimate away from x^(1/2)"),
    "fouvry": (
        "n m q r",
        """
        q + e < n
        6n + 4q + 8r < 5 - e
        q + 2r < 1 - e + n
        n + m = 1
        """,
        "Fouvry-style estimate (Iwaniec and Pomykala form)",
    ),
    "small_divisor": (
        "n m q r",
        """
        6n + 8q + 7r < 4 - 13e
        q + 2r < 1 - 7e + n
        n + m = 1
        """,
        "small divisor estimate",
    ),
    "small_typeII": ("q1 q2 q3", _SMALL_TYPE_II, "small factor type II estimate for convolutions"),
    "vbounds": (
        "q r s",
        _SMALL_TYPE_II.replace("q1", "q").replace("q2", "r").replace("q3", "s"),
        "consequence of the small factor type II estimate",
    ),
    "triple_divisor": (
        "q r",
        """
        3q + 2r < 11/7 - 30e
        11q + 12r < 6 - 30e
        q + r < 8/15 - 30e
        """,
        "triple divisor function estimate",
    ),
    "triple_rough": (
        "q k l m",
        """
        q < 7/10 - e
        q >= 1/2
        k > e
        l > e
        m > e
        k + l + m = 1
        q + e < k + l
        q + k < 1 - 2e
        k + l + 1/7q < 153/224 - 10e
        k + 4l + q < 57/32 - 10e
        """,
        "triple convolution estimate; the lower bound x^(1/2)(log x)^(-A) on Q is read as q >= 1/2",
    ),
    "krough": (
        "n1 n2 n3 m q1 q2",
        """
        n1 + n2 + n3 + m = 1
        n1 >= 2e
        n1 <= n2 <= n3
        m >= e
        q1 + q2 <= 1 - e
        m + 5/2q1 + 3q2 - n3 <= 1 - 15e
        n3 + 3q1 + 2q2 + m <= 2 - 15e
        """,
        "rough triple divisor ranges; the two-sided N3 range is written as two rows",
    ),
}


def catalog_names() -> list[str]:
    return list(_SOURCES)


def builtin_system(name: str) -> ConstraintSystem:
    try:
        symbols, rows, description = _SOURCES[name]
    except KeyError:
        raise AplabError(f"unknown system {name!r}; known: {', '.join(_SOURCES)}") from None
    return ConstraintSystem.from_text(
        name, rows.strip().splitlines(), symbols=symbols.split(), description=description
    )


def _rows(lines: str | Sequence[str]) -> list[LinearConstraint]:
    if isinstance(lines, str):
        lines = lines.strip().splitlines()
    out: list[LinearConstraint] = []
    for line in lines:
        line = line.strip()
        if line:
            out.extend(parse_constraints(line))
    return out


@dataclass(frozen=True)
class ChainGroup:
    """Premises, a change of variables, and conclusions the premises should imply."""

    name: str
    premises: str
    subst: Mapping[str, str]
    conclusions: tuple[str, ...]
    extra_premises: tuple[str, ...] = ()
    note: str = ""

    def premise_system(self) -> ConstraintSystem:
        base = builtin_system(self.premises)
        if not self.extra_premises:
            return base
        return base.with_constraints(_rows(self.extra_premises), name=f"{base.name}+extra")

    def run(self) -> list[Verdict]:
        return implies(self.premise_system(), Substitution.from_text(self.subst), _rows(self.conclusions))


_BV_BRANCH = ("q1 + q2 + 2q3 > 1/2",)

_TYPE_II_BASIC = ("q + r < 17/32", "q + r <= 127/224 - e")
_TYPE_II_ZHANG = (
    "q + 2s < 1/2 - 2e",
    "q + 2s < 1/2 - 20e",
    "2q + r + s < 1 - e",
    "2q + r + s < 1 - 20e",
    "r < q + 3s",
    "7q + 12r + 10s < 4 - 9e",
    "7q + 12r + 10s < 4 - 20e",
)


def chain_groups() -> list[ChainGroup]:
    groups = []
    for reading, premises in (("literal", "propQ5_1"), ("squared", "propQ5_2")):
        groups.append(
            ChainGroup(
                f"type_ii_basic/{reading}",
                premises,
                {"q": "q1 + 2q3", "r": "q2"},
                _TYPE_II_BASIC,
                note="(Q, R) = (Q1 Q3^2, Q2) into the type II estimate away from x^(1/2)",
            )
        )
        groups.append(
            ChainGroup(
                f"type_ii_zhang/{reading}",
                premises,
                {"q": "q1", "r": "q2 + q3", "s": "q3"},
                _TYPE_II_ZHANG,
                extra_premises=_BV_BRANCH,
                note="(Q, R, S) = (Q1, Q2 Q3, Q3) into the type II estimate near x^(1/2); "
                "assumes x^(1/2) < Q1 Q2 Q3^2 (otherwise Bombieri-Vinogradov applies)",
            )
        )
    groups += [
        ChainGroup(
            "power_chain",
            "propQ5_1",
            {},
            ("7q1 + 23q2 < 4 - 9e",),
            note="7(q1+q2) + 16 q2 against 7(1/2+e) + 16(1/32-e)",
        ),
        ChainGroup(
            "sieve_vbounds",
            "propQ5_2",
            {"q": "q1", "r": "q2", "s": "2q3"},
            (
                "q + r < 1/2 + e",
                "2q + r + s < 1 - e",
                "2q + r + s < 1 - 10e",
                "2q + 2r + s < 33/32",
                "2q + 2r + s < 29/28 - e",
                "2q + 2r + s < 29/28 - 10e",
                "q + 8/7r + 2s < 127/224",
                "q + 8/7r + 2s < 4/7 - e",
                "q + 8/7r + 2s < 4/7 - 10e",
            ),
            note="(Q, R, S) = (Q1, Q2, Q3^2) into the small factor bounds",
        ),
        ChainGroup(
            "three_primes",
            "propQ5_4",
            {"q": "q1", "r": "q2 + 2q3"},
            (
                "11q + 12r < 189/32 - 2e",
                "11q + 12r < 6 - 30e",
                "3q + 2r < 49/32 + 2e",
                "3q + 2r < 11/7 - 30e",
                "q + r < 17/32",
                "q + r < 8/15 - 30e",
            ),
            note="(Q, R) = (Q1, Q2 Q3^2) into the triple divisor bounds",
        ),
        ChainGroup(
            "zhang_style/first",
            "zhang_style",
            {"q": "q1", "r": "q2", "s": "q3"},
            ("7q + 12r + 10s < 4 - 18e", "q < n", "n + q + 2s < 1 - 5e"),
            extra_premises=("q1 + q2 + q3 >= 1/2 - e",),
        ),
        ChainGroup(
            "zhang_style/second",
            "zhang_style",
            {"q": "q1", "r": "q2 + q3"},
            ("n + q < 1 - 4e", "n + 5/2q + 3r < 2 - 4e", "2n + q + r < 2 - 4e"),
            extra_premises=("q1 + q2 + q3 >= 1/2 - e",),
        ),
    ]
    return groups


def run_chains() -> dict[str, list[Verdict]]:
    return {g.name: g.run() for g in chain_groups()}


# ---------------------------------------------------------------------------
# findings

@dataclass
class Finding:
    name: str
    status: str
    detail: str
    data: dict = field(default_factory=dict)

    def as_json(self) -> dict:
        return {"name": self.name, "status": self.status, "detail": self.detail, "data": self.data}


def _pt(**coords: str) -> dict[str, EpsRational]:
    return {k: EpsRational.coerce(v) for k, v in coords.items()}


def _tuple_finding(name: str, system: str, point: dict, expect_ok: bool, detail: str) -> Finding:
    sys_ = builtin_system(system)
    violated = [str(c) for c in sys_.all_constraints() if not c.holds(point)]
    ok = not violated
    return Finding(
        name,
        "holds" if ok else "violated",
        detail + ("" if ok else "; violated rows: " + ", ".join(violated)),
        {
            "system": system,
            "point": {k: str(v) for k, v in point.items()},
            "ok": ok,
            "expected_ok": expect_ok,
            "violated": violated,
        },
    )


def findings() -> list[Finding]:
    out: list[Finding] = []

    # reading of the Q S^2 step in the type II chain
    for reading, premises in (("literal", "propQ5_1"), ("squared", "propQ5_2")):
        sys_ = builtin_system(premises).with_constraints(_rows(_BV_BRANCH))
        v = entails(sys_, Substitution.from_text({"q": "q1", "s": "q3"}).apply(_rows("q + 2s < 1/2 - 2e")[0]))
        out.append(
            Finding(
                f"qs2_step/{reading}",
                v.status,
                "Q S^2 = Q1 Q3^2 < x^(1/2-2e) checked against the hypotheses "
                + ("with Q1 Q3 < x^(1/2-2e)" if reading == "literal" else "with Q1 Q3^2 < x^(1/2-2e)"),
                v.as_json(),
            )
        )

    out.append(
        _tuple_finding(
            "cons0_printed_tuple",
            "cons0",
            _pt(q="15/32 + 2e", r="1/32 - e", s="1/64 - 2e", t="1/64 - 2e"),
            False,
            "printed tuple (15/32+2e, 1/32-e, 1/64-2e) lands exactly on strict boundaries (q + r = 1/2 + e among them)",
        )
    )
    out.append(
        _tuple_finding(
            "cons0_shifted_tuple",
            "cons0",
            _pt(q="15/32", r="1/32 - 2e", s="1/64 - 2e", t="1/64 - 2e"),
            True,
            "nearby interior tuple (15/32, 1/32-2e, 1/64-2e)",
        )
    )
    for first in ("15/35", "15/32"):
        out.append(
            _tuple_finding(
                f"optimal_triple/{first}",
                "propQ5_4",
                _pt(q1=f"{first} + 2e", q2="1/32 - e", q3="1/64 - 2e"),
                False,
                f"printed optimal triple with first coordinate {first} + 2e",
            )
        )
    sup = maximize(builtin_system("propQ5_4"), "q1 + q2 + 2q3")
    out.append(
        Finding(
            "optimal_triple/sup",
            "info",
            f"sup of q1 + q2 + 2q3 on the three-prime hypotheses is {sup}; 15/35 + 2e would leave "
            "q1 + q2 + 2q3 far below 17/32, while 15/32 + 2e sits exactly on q1 + q2 < 1/2 + e",
            sup.as_json(),
        )
    )

    cons = maximize(builtin_system("cons0"), "q + r + 2s")
    out.append(
        Finding(
            "cons0_supremum",
            "info",
            f"sup q + r + 2s = {cons}; the rational part 17/32 = 0.53125 is printed as 0.5313 after rounding",
            cons.as_json(),
        )
    )

    for group, verdicts in run_chains().items():
        for v in verdicts:
            if v.status == "entailed_rescaled":
                out.append(
                    Finding(
                        f"rescale/{group}",
                        v.status,
                        f"{v.conclusion}: needs eps scaled by {v.rescale} in the hypotheses",
                        v.as_json(),
                    )
                )
            elif v.status != "entailed":
                out.append(Finding(f"{v.status}/{group}", v.status, v.conclusion, v.as_json()))
    return out
