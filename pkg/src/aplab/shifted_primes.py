"""Shifted primes p - a without large prime factors, at desk scale.

Counts of primes ``x < p <= 2x`` whose shift ``p - a`` is ``x**beta``-smooth,
together with the finite objects of the Baker--Harman style lower-bound
argument: the dyadic base set ``L``, the product ensemble ``G`` of H-fold
products from ``L``, the tuple sets N, N', N1, N2, the multiplicities
Gamma(p), the singular series ``G_l`` and the reciprocal-prime sum that
governs ``|N1| / |N|``.

Conventions
-----------
* ``n ~ N`` means ``N < n <= 2N``. All such boundaries and every smoothness
  test ``P+(n) <= x**beta`` are decided in exact integer arithmetic.
* ``G`` is a multiset: a product reached by several H-tuples of ``L`` is
  counted once per tuple, so ``|G| = |L|**H``.
* In the closed-form estimate for ``|N|`` the prime count ``pi(x)`` is read
  as the number of primes in ``(x, 2x]``, matching the dyadic ``p ~ x``
  summation of the brute count.
"""
from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Literal, NamedTuple

import numpy as np

from ._exact import RationalLike, as_fraction, dyadic_bounds, floor_power
from .errors import AplabError, BudgetExceeded
from .sieve_core import (
    arith,
    build_factor_table,
    divisors,
    factorize,
    is_prime_table,
    primes_between,
    progression_count,
    small_primes,
)

DEFAULT_ENSEMBLE_CAP = 10**7
DEFAULT_BRUTE_BUDGET = 10**9


@dataclass(frozen=True)
class ShiftedPrimeConfig:
    """Scale and exponents of one shifted-prime experiment.

    ``eps_desk`` is carried for bookkeeping only; ``H`` is set directly.
    """

    x: int
    a: int = 1
    beta: Fraction = Fraction(7, 20)
    theta: Fraction = Fraction(17, 32)
    eps_desk: Fraction = Fraction(1, 100)
    H: int = 8
    B0: int = 1

    def __post_init__(self) -> None:
        for name in ("beta", "theta", "eps_desk"):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))
        object.__setattr__(self, "x", int(self.x))
        object.__setattr__(self, "a", int(self.a))
        if self.a == 0:
            raise AplabError("shift a must be nonzero")
        if self.x <= abs(self.a) + 1:
            raise AplabError("need x > |a| + 1")
        if not 0 < self.beta <= 1:
            raise AplabError("beta must lie in (0, 1]")
        if not Fraction(1, 2) < self.theta < 1:
            raise AplabError("theta must lie in (1/2, 1)")
        if self.eps_desk <= 0:
            raise AplabError("eps_desk must be positive")
        if self.H < 4 or self.H % 4:
            raise AplabError("H must be a positive multiple of 4")
        if self.B0 < 0:
            raise AplabError("B0 must be nonnegative")

    @property
    def l_exponent(self) -> Fraction:
        """Exponent of the dyadic scale of each ``l_i``: ``(2 theta - 1) / H``."""
        return (2 * self.theta - 1) / self.H

    @property
    def smooth_bound(self) -> int:
        """``floor(x**beta)``; an integer is x**beta-smooth iff its P+ is at most this."""
        return floor_power(self.x, self.beta)

    def as_dict(self) -> dict:
        return {
            "x": self.x,
            "a": self.a,
            "beta": str(self.beta),
            "theta": str(self.theta),
            "eps_desk": str(self.eps_desk),
            "H": self.H,
            "B0": self.B0,
        }


# ---------------------------------------------------------------------------
# smooth shifted primes

def _check_shift(x: int, a: int) -> None:
    if a == 0:
        raise AplabError("shift a must be nonzero")
    if x <= max(abs(a) + 1, 2):
        raise AplabError("need x > max(|a| + 1, 2)")


def shifted_lpf(x: int, a: int, *, threads: int = 1, cache_dir=None) -> tuple[np.ndarray, np.ndarray]:
    """Primes ``p`` in ``(x, 2x]`` and the largest prime factor of each ``p - a``."""
    _check_shift(x, a)
    primes = primes_between(x + 1, 2 * x + 1)
    table = build_factor_table(x + 1 - a, 2 * x + 1 - a, threads=threads, cache_dir=cache_dir)
    return primes, table.lpf[primes - a - table.lo]


def count_smooth_shifted(
    x: int, a: int, beta: RationalLike, *, threads: int = 1, cache_dir=None
) -> int:
    """Number of primes ``x < p <= 2x`` with ``P+(p - a) <= x**beta``.

    The threshold is ``x**beta`` (not ``p**beta``). ``beta`` is taken as an
    exact rational and the test ``P <= x**beta`` is made as ``P**v <= x**u``
    for ``beta = u/v``.
    """
    x, a = int(x), int(a)
    _check_shift(x, a)
    beta = as_fraction(beta)
    if not 0 < beta <= 1:
        raise AplabError("beta must lie in (0, 1]")
    _, lpf = shifted_lpf(x, a, threads=threads, cache_dir=cache_dir)
    return int(np.count_nonzero(lpf <= floor_power(x, beta)))


def count_smooth_shifted_grid(x: int, a: int, betas, **kw) -> list[int]:
    """Counts for several exponents from one factor table."""
    _, lpf = shifted_lpf(int(x), int(a), **kw)
    lpf = np.sort(lpf)
    return [
        int(np.searchsorted(lpf, floor_power(x, as_fraction(b)), side="right")) for b in betas
    ]


# ---------------------------------------------------------------------------
# the ensemble

def tuple_products(values, k: int) -> Counter:
    """Multiset of products of ``k``-tuples drawn from ``values`` (ordered tuples)."""
    out: Counter = Counter({1: 1})
    for _ in range(k):
        nxt: Counter = Counter()
        for prod, mult in out.items():
            for v in values:
                nxt[prod * v] += mult
        out = nxt
    return out


@dataclass(frozen=True)
class Ensemble:
    config: ShiftedPrimeConfig
    L: tuple[int, ...]
    G: dict[int, int] = field(repr=False)
    l_window: tuple[int, int]
    mn_window: tuple[int, int]

    @property
    def size(self) -> int:
        """``|G| = |L|**H`` (tuples, counted with multiplicity)."""
        return len(self.L) ** self.config.H

    def summary(self) -> dict:
        return {
            "L": list(self.L),
            "L_size": len(self.L),
            "G_size": self.size,
            "G_distinct": len(self.G),
            "l_window": list(self.l_window),
            "mn_window": list(self.mn_window),
        }


def build_ensemble(config: ShiftedPrimeConfig, *, cap: int = DEFAULT_ENSEMBLE_CAP) -> Ensemble:
    """Materialize ``L = {l ~ x**((2 theta-1)/H) : (l, a) = 1}`` and ``G = L**H``."""
    lo, hi = dyadic_bounds(config.x, config.l_exponent)
    L = tuple(l for l in range(lo + 1, hi + 1) if math.gcd(l, config.a) == 1)
    if not L:
        raise AplabError(
            f"L-window ({lo}, {hi}] has no integer coprime to a={config.a}; "
            "increase x or decrease H"
        )
    size = len(L) ** config.H
    if size > cap:
        raise BudgetExceeded(
            f"|L|^H = {size} exceeds cap {cap}; use a larger eps_desk (smaller H) or a smaller x"
        )
    G = dict(sorted(tuple_products(L, config.H).items()))
    return Ensemble(config, L, G, (lo, hi), dyadic_bounds(config.x, 1 - config.theta))


Reading = Literal["set", "display"]


def _n_bounds(ensemble: Ensemble, reading: Reading) -> tuple[int, int]:
    """Inclusive range allowed for the cofactor ``n``."""
    lo, hi = ensemble.mn_window
    if reading == "set":
        return lo + 1, hi
    if reading == "display":
        cfg = ensemble.config
        return 1, max(1, (2 * cfg.x - cfg.a) // (min(ensemble.G) * (lo + 1)))
    raise AplabError(f"unknown reading {reading!r}")


def _profile(hi: int, t: int, big_hi: int) -> tuple[np.ndarray, np.ndarray]:
    """Largest prime factor of ``0..hi`` and the number of distinct primes in ``(t, big_hi]`` dividing each."""
    lpf = np.ones(hi + 1, dtype=np.int64)
    if hi >= 2:
        lpf[2:] = build_factor_table(2, hi + 1).lpf
    big = np.zeros(hi + 1, dtype=np.int64)
    for p0 in primes_between(t + 1, min(big_hi, hi) + 1).tolist():
        big[p0::p0] += 1
    big[0] = 0
    return lpf, big


def gamma_multiplicity(
    ensemble: Ensemble, p: int, smooth_only: bool = True, reading: Reading = "set"
) -> int:
    """Gamma(p): triples ``(l, m, n)`` with ``p - a = l m n``, ``l`` in G, ``m ~ x**(1-theta)``, ``(m, a) = 1``.

    The ``set`` reading also asks ``n ~ x**(1-theta)``; the ``display`` reading
    leaves ``n`` free, as in the progression-count form of ``|N|``. With
    ``smooth_only`` the count is zero unless ``P+(p - a) <= x**beta``.
    Elements of G are counted with their tuple multiplicity.
    """
    cfg = ensemble.config
    if not cfg.x < p <= 2 * cfg.x:
        raise AplabError(f"p={p} outside (x, 2x]")
    n_lo, n_hi = _n_bounds(ensemble, reading)
    d = p - cfg.a
    if smooth_only and arith(d).lpf > cfg.smooth_bound:
        return 0
    lo, hi = ensemble.mn_window
    total = 0
    for l, w in ensemble.G.items():
        if d % l:
            continue
        rest = d // l
        for m in divisors(rest):
            if lo < m <= hi and n_lo <= rest // m <= n_hi and math.gcd(m, cfg.a) == 1:
                total += w
    return total


@dataclass
class NSets:
    """Exact sizes of the tuple sets over one ensemble.

    ``n1``/``n2`` count pairs (tuple, p0) with ``p0`` a prime factor of
    ``m``/``n`` in ``(x**beta, 2 x**(1-theta)]``.
    """

    reading: str
    n_total: int
    n_smooth: int
    n1: int
    n2: int
    gamma: dict[int, int]
    gamma_all: dict[int, int]

    @property
    def gamma_sq_sum(self) -> int:
        return sum(g * g for g in self.gamma.values())

    @property
    def support(self) -> int:
        return sum(1 for g in self.gamma.values() if g > 0)

    def cauchy_schwarz_holds(self) -> bool:
        return self.n_smooth**2 <= self.gamma_sq_sum * self.support

    def inclusion_exclusion_holds(self) -> bool:
        return self.n_smooth >= self.n_total - self.n1 - self.n2

    def as_dict(self) -> dict:
        return {
            "reading": self.reading,
            "N": self.n_total,
            "N_prime": self.n_smooth,
            "N1": self.n1,
            "N2": self.n2,
            "sum_gamma": sum(self.gamma.values()),
            "sum_gamma_sq": self.gamma_sq_sum,
            "gamma_support": self.support,
            "cauchy_schwarz": self.cauchy_schwarz_holds(),
            "N_prime_ge_N_minus_N1_minus_N2": self.inclusion_exclusion_holds(),
            "N_prime_ge_N_minus_2N1": self.n_smooth >= self.n_total - 2 * self.n1,
        }


def n_sets(ensemble: Ensemble, reading: Reading = "set") -> NSets:
    """Enumerate every ``(p, l, m, n)`` and tally N, N', N1, N2 and Gamma."""
    cfg = ensemble.config
    x, a, t = cfg.x, cfg.a, cfg.smooth_bound
    lo, hi = ensemble.mn_window
    n_lo, n_hi = _n_bounds(ensemble, reading)
    lpf, big = _profile(max(hi, n_hi), t, hi)
    is_p = is_prime_table(2 * x)
    ms = [m for m in range(lo + 1, hi + 1) if math.gcd(m, a) == 1]

    gamma: Counter = Counter()
    gamma_all: Counter = Counter()
    n_total = n_smooth = n1 = n2 = 0
    for l, w in ensemble.G.items():
        l_lpf = arith(l).lpf
        for m in ms:
            base = l * m
            first = max(n_lo, (x - a) // base + 1)
            last = min(n_hi, (2 * x - a) // base)
            if first > last:
                continue
            ns = np.arange(first, last + 1, dtype=np.int64)
            ps = base * ns + a
            keep = is_p[ps]
            ns, ps = ns[keep], ps[keep]
            if not ns.size:
                continue
            smooth = np.maximum(lpf[ns], max(l_lpf, int(lpf[m]))) <= t
            n_total += w * ns.size
            n_smooth += w * int(np.count_nonzero(smooth))
            n1 += w * int(big[m]) * ns.size
            n2 += w * int(big[ns].sum())
            for q in ps.tolist():
                gamma_all[q] += w
            for q in ps[smooth].tolist():
                gamma[q] += w
    return NSets(
        reading, n_total, n_smooth, n1, n2, dict(sorted(gamma.items())), dict(sorted(gamma_all.items()))
    )


def n1_triple_sum(ensemble: Ensemble) -> int:
    """``|N1|`` as the nested sum over ``l`` in G, primes ``p0``, cofactors ``m`` and progressions.

    ``p0`` runs over ``(x**beta, 2 x**(1-theta)]`` and ``m`` over
    ``x**(1-theta)/p0 < m <= 2 x**(1-theta)/p0`` with ``(p0 m, a) = 1``.
    """
    cfg = ensemble.config
    lo, hi = ensemble.mn_window
    total = 0
    for p0 in primes_between(cfg.smooth_bound + 1, hi + 1).tolist():
        if cfg.a % p0 == 0:
            continue
        for m in range(lo // p0 + 1, hi // p0 + 1):
            if math.gcd(m, cfg.a) != 1:
                continue
            for l, w in ensemble.G.items():
                total += w * progression_count(cfg.x, 2 * cfg.x, l * p0 * m, cfg.a)
    return total


# ---------------------------------------------------------------------------
# singular series and the Mertens sum

@lru_cache(maxsize=8)
def _euler_logs(cutoff: int) -> tuple[np.ndarray, np.ndarray, float]:
    ps = small_primes(cutoff)
    pf = ps.astype(np.float64)
    logs = np.log1p(1.0 / (pf * (pf - 1.0)))
    return ps, logs, math.fsum(logs.tolist())


class SingularSeries(NamedTuple):
    value: float
    tail_bound: float
    cutoff: int


def singular_series(a: int, l: int, cutoff: int = 10**6) -> SingularSeries:
    """``phi(|a|)/|a| * prod_{p <= cutoff, p does not divide a l} (1 + 1/(p(p-1)))``.

    The omitted tail satisfies ``sum_{p > cutoff} 1/(p(p-1)) < 1/cutoff``.
    """
    if a == 0:
        raise AplabError("singular series needs a != 0")
    if l < 1 or cutoff < 2:
        raise AplabError("need l >= 1 and cutoff >= 2")
    ps, logs, total = _euler_logs(int(cutoff))
    excluded = {p for p in factorize(abs(a)).primes + factorize(l).primes if p <= cutoff}
    if excluded:
        idx = np.searchsorted(ps, sorted(excluded))
        total = math.fsum([total] + [-float(v) for v in logs[idx]])
    aa = abs(a)
    return SingularSeries(arith(aa).phi / aa * math.exp(total), 1.0 / cutoff, int(cutoff))


class MertensReport(NamedTuple):
    sum: float
    prediction: float
    asymptotic: float
    lo: int
    hi: int
    prime_count: int


def mertens_interval(x: int, theta: RationalLike, beta: RationalLike) -> MertensReport:
    """Sum of ``1/p`` over primes in ``(x**beta, 2 x**(1-theta)]``.

    ``prediction`` is the finite-x Mertens value ``ln(ln(2x^(1-theta)) / ln(x^beta))``;
    ``asymptotic`` is its limit ``ln((1-theta)/beta)``, reported for reference.
    """
    theta, beta = as_fraction(theta), as_fraction(beta)
    if x < 2 or beta <= 0 or not 0 < theta < 1:
        raise AplabError("need x >= 2, beta > 0 and 0 < theta < 1")
    lo = floor_power(x, beta)
    _, hi = dyadic_bounds(x, 1 - theta)
    # x^beta < 2x^(1-theta)  <=>  beta ln x < ln 2 + (1-theta) ln x
    logx = math.log(x)
    if not float(beta) * logx < math.log(2) + float(1 - theta) * logx:
        raise AplabError("empty interval: x^beta >= 2 x^(1-theta)")
    ps = primes_between(lo + 1, hi + 1)
    total = math.fsum((1.0 / ps.astype(np.float64)).tolist())
    prediction = math.log((math.log(2) + float(1 - theta) * logx) / (float(beta) * logx))
    return MertensReport(total, prediction, math.log(float((1 - theta) / beta)), lo, hi, int(ps.size))


# ---------------------------------------------------------------------------
# |N|: brute force against the closed form

def _brute_cost(ensemble: Ensemble) -> int:
    x = ensemble.config.x
    lo, hi = ensemble.mn_window
    harmonic = math.log(hi / max(lo, 1)) + 1.0 / max(lo, 1)
    return int(sum(x / l * harmonic + (hi - lo) for l in ensemble.G)) + 1


def n_count(
    ensemble: Ensemble,
    mode: Literal["brute", "formula"] = "brute",
    *,
    budget: int = DEFAULT_BRUTE_BUDGET,
    cutoff: int = 10**5,
    threads: int = 1,
) -> float:
    """|N| by direct counting or by ``pi(x) log 2 sum_{l in G} G_l / phi(l)``.

    ``brute`` returns the exact integer
    ``sum_{l in G} sum_{m ~ x^(1-theta), (m,a)=1} #{p ~ x : p ≡ a (mod l m)}``.
    """
    cfg = ensemble.config
    if not ensemble.G:
        return 0
    if mode == "formula":
        pi_dyadic = int(primes_between(cfg.x + 1, 2 * cfg.x + 1).size)
        acc = math.fsum(
            w * singular_series(cfg.a, l, cutoff).value / arith(l).phi
            for l, w in ensemble.G.items()
        )
        return pi_dyadic * math.log(2) * acc
    if mode != "brute":
        raise AplabError(f"unknown mode {mode!r}")
    if cfg.x > 10**8:
        raise BudgetExceeded("brute |N| is limited to x <= 10^8")
    cost = _brute_cost(ensemble)
    if cost > budget:
        raise BudgetExceeded(f"estimated cost {cost} exceeds budget {budget}")
    lo, hi = ensemble.mn_window
    ms = [m for m in range(lo + 1, hi + 1) if math.gcd(m, cfg.a) == 1]

    def per_l(item: tuple[int, int]) -> int:
        l, w = item
        return w * sum(progression_count(cfg.x, 2 * cfg.x, l * m, cfg.a) for m in ms)

    items = list(ensemble.G.items())
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return sum(pool.map(per_l, items))
    return sum(per_l(it) for it in items)
