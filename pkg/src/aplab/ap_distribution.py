"""Primes in progressions: discrepancies and weighted sums over factored moduli.

All sums are accumulated as :class:`fractions.Fraction`, so the reported
values do not depend on summation order or thread count.
"""
from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Literal, Mapping, Sequence

import numpy as np

from .errors import AplabError, BudgetExceeded
from .sieve_core import (
    arith,
    build_factor_table,
    prime_count,
    primes_between,
    progression_count,
)
from .shifted_primes import Ensemble, tuple_products

DEFAULT_TERM_BUDGET = 10**8

Number = int | Fraction


@lru_cache(maxsize=64)
def _pi(x: int) -> int:
    return prime_count(x)


def _pi_dyadic(x: int) -> int:
    return _pi(2 * x) - _pi(x)


def discrepancy(x: int, q: int, a: int) -> Fraction:
    """``pi(x; q, a) - pi(x) / phi(q)`` as an exact rational."""
    if q < 1:
        raise AplabError("modulus q must be positive")
    if math.gcd(a, q) != 1:
        raise AplabError(f"gcd(a, q) = {math.gcd(a, q)} > 1")
    return progression_count(0, x, q, a) - Fraction(_pi(x), arith(q).phi)


def residue_counts(x: int, q: int) -> np.ndarray:
    """``pi(x; q, r)`` for every residue ``r`` in ``0..q-1``."""
    if q < 1:
        raise AplabError("modulus q must be positive")
    return np.bincount(primes_between(2, x + 1) % q, minlength=q)


def s_weight(n: int, q: int, a: int) -> Fraction:
    """``1[n ≡ a (mod q)] - 1[(n, q) = 1] / phi(q)``."""
    if n < 1 or q < 1:
        raise AplabError("need n >= 1 and q >= 1")
    hit = 1 if (n - a) % q == 0 else 0
    unit = Fraction(1, arith(q).phi) if math.gcd(n, q) == 1 else Fraction(0)
    return hit - unit


def s_d_z(d: int, z: int, x: int, q: int, a: int) -> Fraction:
    """Sum of ``s_weight(d n, q, a)`` over ``x/d < n <= 2x/d`` with ``P-(n) > z``.

    ``n = 1`` is kept exactly when ``z <= 1``.
    """
    if d < 1 or z < 1 or q < 1 or x < 1:
        raise AplabError("need d, z, q, x >= 1")
    lo, hi = x // d, (2 * x) // d
    if hi <= lo:
        return Fraction(0)
    ns = np.arange(lo + 1, hi + 1, dtype=np.int64)
    keep = np.zeros(ns.size, dtype=bool)
    rest = ns >= 2
    if rest.any():
        first = int(ns[rest][0])
        spf = build_factor_table(first, hi + 1).spf
        keep[rest] = spf > z
    keep[ns == 1] = z <= 1
    dn = d * ns[keep]
    hits = int(np.count_nonzero((dn - a) % q == 0))
    units = int(np.count_nonzero(np.gcd(dn, q) == 1))
    return hits - Fraction(units, arith(q).phi)


# ---------------------------------------------------------------------------
# coefficient sequences and multilinear sums

def _exact(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


@dataclass(frozen=True)
class CoefficientSeq:
    """Weights on the moduli ``lo..hi``; unlisted moduli carry weight zero."""

    lo: int
    hi: int
    values: Mapping[int, Number] = field(default_factory=dict)
    bound_B0: int = 1
    shift: int | None = None

    def __post_init__(self) -> None:
        if not 1 <= self.lo <= self.hi:
            raise AplabError(f"bad range [{self.lo}, {self.hi}]")

    @classmethod
    def from_counts(cls, counts: Mapping[int, int], bound_B0: int, shift: int | None = None):
        keys = sorted(counts)
        if not keys:
            return cls(1, 1, {}, bound_B0, shift)
        return cls(keys[0], keys[-1], dict(sorted(counts.items())), bound_B0, shift)

    def items(self):
        return sorted(self.values.items())

    def violations(self) -> list[int]:
        """Moduli whose weight breaks ``|w| <= tau(q)**B0`` or the coprimality to the shift."""
        bad = []
        for q, w in self.items():
            if w == 0:
                continue
            if q < 1 or abs(_exact(w)) > arith(q).tau ** self.bound_B0:
                bad.append(q)
            elif self.shift is not None and math.gcd(q, self.shift) != 1:
                bad.append(q)
        return bad

    def validate(self) -> None:
        bad = self.violations()
        if bad:
            raise AplabError(f"coefficient bound violated at moduli {bad[:5]}")

    def total(self) -> Fraction:
        return sum((_exact(w) for _, w in self.items()), Fraction(0))

    def as_dict(self) -> dict:
        return {
            "lo": self.lo,
            "hi": self.hi,
            "bound_B0": self.bound_B0,
            "values": {str(k): str(v) for k, v in self.items()},
        }


@dataclass(frozen=True)
class MultilinearSpec:
    """A weighted sum over tuples of moduli.

    ``mode="sharp_le"`` lets each variable run over ``1..hi``;
    ``mode="dyadic"`` over ``lo < q <= 2 lo``. ``prime_range="le"`` counts
    primes ``p <= x``, ``"dyadic"`` counts ``x < p <= 2x``. With
    ``main_term=False`` the expected share ``pi/phi`` is not subtracted.
    """

    x: int
    a: int
    factors: Sequence[CoefficientSeq]
    mode: Literal["sharp_le", "dyadic"] = "sharp_le"
    main_term: bool = True
    prime_range: Literal["le", "dyadic"] = "le"
    budget: int = DEFAULT_TERM_BUDGET

    def __post_init__(self) -> None:
        if self.a == 0:
            raise AplabError("shift a must be nonzero")
        if not 1 <= len(self.factors) <= 4:
            raise AplabError("between one and four factors are supported")
        if self.mode not in ("sharp_le", "dyadic"):
            raise AplabError(f"unknown mode {self.mode!r}")
        if self.prime_range not in ("le", "dyadic"):
            raise AplabError(f"unknown prime range {self.prime_range!r}")
        if math.prod(self.upper(f) for f in self.factors) > self.x:
            raise AplabError("product of the factor ranges exceeds x")

    def window(self, f: CoefficientSeq) -> tuple[int, int]:
        return (1, f.hi) if self.mode == "sharp_le" else (f.lo + 1, 2 * f.lo)

    def upper(self, f: CoefficientSeq) -> int:
        return self.window(f)[1]

    def active(self, f: CoefficientSeq) -> list[tuple[int, Fraction]]:
        lo, hi = self.window(f)
        return [
            (q, _exact(w))
            for q, w in f.items()
            if lo <= q <= hi and w != 0 and math.gcd(q, self.a) == 1
        ]

    def digest(self) -> str:
        payload = {
            "x": self.x,
            "a": self.a,
            "mode": self.mode,
            "main_term": self.main_term,
            "prime_range": self.prime_range,
            "factors": [f.as_dict() for f in self.factors],
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class DiscrepancyReport:
    value: Fraction
    trivial_bound: Fraction
    term_count: int
    spec_digest: str = ""

    @property
    def normalized(self) -> float:
        return float(self.value / self.trivial_bound) if self.trivial_bound else 0.0

    def as_dict(self) -> dict:
        return {
            "spec_digest": self.spec_digest,
            "value": float(self.value),
            "value_exact": str(self.value),
            "trivial_bound": float(self.trivial_bound),
            "normalized": self.normalized,
            "term_count": self.term_count,
        }


def _grouped_weights(spec: MultilinearSpec) -> tuple[dict[int, list[Fraction]], int]:
    """Map each product modulus to (signed weight sum, absolute weight sum) over tuples."""
    groups: dict[int, list[Fraction]] = {1: [Fraction(1), Fraction(1)]}
    count = 1
    for f in spec.factors:
        act = spec.active(f)
        count *= len(act)
        nxt: dict[int, list[Fraction]] = {}
        for prod, (w_sum, w_abs) in groups.items():
            for q, w in act:
                slot = nxt.setdefault(prod * q, [Fraction(0), Fraction(0)])
                slot[0] += w_sum * w
                slot[1] += w_abs * abs(w)
        groups = nxt
    return groups, count


def estimate_terms(spec: MultilinearSpec) -> int:
    return math.prod(len(spec.active(f)) for f in spec.factors)


def multilinear_sum(spec: MultilinearSpec, *, threads: int = 1) -> DiscrepancyReport:
    """Sum of weight products times the prime discrepancy of the product modulus.

    Every tuple counts separately; tuples sharing a product modulus are only
    grouped to avoid recounting the same progression.
    """
    for f in spec.factors:
        f.validate()
    terms = estimate_terms(spec)
    if terms > spec.budget:
        raise BudgetExceeded(f"{terms} tuple terms exceed the budget of {spec.budget}")
    groups, count = _grouped_weights(spec)
    moduli = sorted(groups)
    if spec.prime_range == "le":
        lo, hi, total = 0, spec.x, _pi(spec.x)
    else:
        lo, hi, total = spec.x, 2 * spec.x, _pi_dyadic(spec.x)

    def count_one(q: int) -> int:
        return progression_count(lo, hi, q, spec.a)

    if threads > 1 and len(moduli) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            counts = list(pool.map(count_one, moduli))
    else:
        counts = [count_one(q) for q in moduli]

    value = Fraction(0)
    bound = Fraction(0)
    for q, c in zip(moduli, counts):
        w_sum, w_abs = groups[q]
        main = Fraction(total, arith(q).phi) if spec.main_term else Fraction(0)
        value += w_sum * (c - main)
        bound += w_abs * (c + main)
    return DiscrepancyReport(value, bound, count, spec.digest())


# ---------------------------------------------------------------------------
# coefficients of the |N1| decomposition

@dataclass(frozen=True)
class Section3Coefficients:
    lam: CoefficientSeq
    nu: CoefficientSeq
    eta: CoefficientSeq
    mu: CoefficientSeq

    def __iter__(self):
        return iter((self.lam, self.nu, self.eta, self.mu))


def section3_coefficients(ensemble: Ensemble) -> Section3Coefficients:
    """Counting weights that rewrite ``|N1|`` as a four-factor sum over moduli.

    The H-tuple ``l_1 ... l_H`` is cut into ``l_1 | l_2..l_{H/4} |
    l_{H/4+1}..l_{H/2} | l_{H/2+1}..l_H``. ``lam`` counts ``q = l_1 m p0`` with
    ``x**beta < p0 <= 2 x**(1-theta)`` prime and ``x**(1-theta)/p0 < m <=
    2 x**(1-theta)/p0``, ``(p0 m, a) = 1``; ``nu``, ``eta``, ``mu`` count
    ordered factorizations of ``r``, ``s``, ``t`` into elements of L.
    """
    cfg = ensemble.config
    if cfg.beta >= 1 - cfg.theta:
        raise AplabError("section-3 coefficients need beta < 1 - theta")
    H, a = cfg.H, cfg.a
    lo, hi = ensemble.mn_window
    lam: Counter = Counter()
    for p0 in primes_between(cfg.smooth_bound + 1, hi + 1).tolist():
        if a % p0 == 0:
            continue
        for m in range(lo // p0 + 1, hi // p0 + 1):
            if math.gcd(m, a) != 1:
                continue
            for l1 in ensemble.L:
                lam[l1 * p0 * m] += 1

    def block(k: int) -> CoefficientSeq:
        return CoefficientSeq.from_counts(tuple_products(ensemble.L, k), max(k - 1, 0), a)

    return Section3Coefficients(
        CoefficientSeq.from_counts(lam, 2, a),
        block(H // 2),
        block(H // 4 - 1),
        block(H // 4),
    )


def n1_via_multilinear(ensemble: Ensemble, *, threads: int = 1) -> DiscrepancyReport:
    """``|N1|`` from the four-factor sum with the main term switched off."""
    coeffs = section3_coefficients(ensemble)
    spec = MultilinearSpec(
        x=ensemble.config.x,
        a=ensemble.config.a,
        factors=list(coeffs),
        mode="sharp_le",
        main_term=False,
        prime_range="dyadic",
    )
    return multilinear_sum(spec, threads=threads)
