"""Segmented sieving, factor tables and basic arithmetic functions.

Everything else in the package sits on top of three primitives here:

* :func:`build_factor_table` -- smallest and largest prime factor for every
  integer of a window ``[lo, hi)``, sieved segment by segment;
* :func:`prime_count` / :func:`prime_count_ap` -- exact prime counts, in
  total and in a residue class;
* :func:`arith` -- phi, tau, mu and the extreme prime factors of one integer.

Integers up to ``2**50`` are supported. Outputs never depend on the segment
size, the worker count or the on-disk cache.
"""
from __future__ import annotations

import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import AplabError, BudgetExceeded

MAX_N = 1 << 50
DEFAULT_SEGMENT = 1 << 22
DEFAULT_MAX_WIDTH = 1 << 27
# primes up to this bound are answered from a cached flat table
TABLE_LIMIT = 1 << 26
_SMALL_SPF_LIMIT = 1 << 21

CACHE_MAGIC = b"APL1"
_HEADER = struct.Struct("<4sqq")


# ---------------------------------------------------------------------------
# base primes

@lru_cache(maxsize=8)
def _base_sieve(n: int) -> np.ndarray:
    is_p = np.ones(n + 1, dtype=bool)
    is_p[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if is_p[p]:
            is_p[p * p :: p] = False
    is_p.flags.writeable = False
    return is_p


def small_primes(n: int) -> np.ndarray:
    """All primes ``<= n`` as an int64 array."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    # round up so nearby requests share one cached sieve
    size = max(1 << 10, 1 << (n.bit_length()))
    primes = np.flatnonzero(_base_sieve(size)).astype(np.int64)
    return primes[: np.searchsorted(primes, n, side="right")]


def is_prime_table(n: int) -> np.ndarray:
    """Read-only boolean table ``t`` with ``t[k]`` true iff ``k`` is prime.

    The table covers at least ``0 <= k <= n``; sizes are rounded up to a
    power of two so that nearby requests share one cached array.
    """
    if n > TABLE_LIMIT:
        raise BudgetExceeded(f"flat prime table limited to n <= {TABLE_LIMIT}")
    return _prime_table(max(1 << 12, 1 << (int(n) + 1).bit_length()))


@lru_cache(maxsize=4)
def _prime_table(size: int) -> np.ndarray:
    table = np.zeros(size, dtype=bool)
    for lo, hi in _segments(2, size, DEFAULT_SEGMENT):
        table[lo:hi] = _segment_is_prime(lo, hi)
    table.flags.writeable = False
    return table


def _segments(lo: int, hi: int, width: int) -> Iterator[tuple[int, int]]:
    start = lo
    while start < hi:
        end = min(hi, start + width)
        yield start, end
        start = end


def _segment_is_prime(lo: int, hi: int) -> np.ndarray:
    flags = np.ones(hi - lo, dtype=bool)
    if lo < 2:
        flags[: 2 - lo] = False
    for p in small_primes(math.isqrt(hi - 1)).tolist():
        start = max(p * p, ((lo + p - 1) // p) * p)
        if start < hi:
            flags[start - lo :: p] = False
    return flags


# ---------------------------------------------------------------------------
# factor tables

@dataclass(frozen=True)
class Factorization:
    n: int
    factors: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        prod = 1
        for p, e in self.factors:
            prod *= p**e
        if prod != self.n:
            raise AplabError(f"factorization {self.factors} does not multiply to {self.n}")

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)


@dataclass(frozen=True)
class FactorTable:
    """Smallest (``spf``) and largest (``lpf``) prime factor of every n in ``[lo, hi)``."""

    lo: int
    hi: int
    spf: np.ndarray
    lpf: np.ndarray

    def __len__(self) -> int:
        return self.hi - self.lo

    def _index(self, n: int) -> int:
        if not self.lo <= n < self.hi:
            raise AplabError(f"{n} outside table window [{self.lo}, {self.hi})")
        return n - self.lo

    def spf_of(self, n: int) -> int:
        return int(self.spf[self._index(n)])

    def lpf_of(self, n: int) -> int:
        return int(self.lpf[self._index(n)])

    def is_prime(self, n: int) -> bool:
        return self.spf_of(n) == n

    def factorize(self, n: int) -> Factorization:
        """Factor ``n`` by repeated division by its smallest prime factor.

        Only the entry for ``n`` lies in the window; the shrinking cofactors
        are finished with :func:`factorize`.
        """
        p = self.spf_of(n)
        m, e = n, 0
        while m % p == 0:
            m //= p
            e += 1
        rest = factorize(m).factors if m > 1 else ()
        return Factorization(n, ((p, e),) + rest)


def _sieve_factor_segment(lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
    width = hi - lo
    rem = np.arange(lo, hi, dtype=np.int64)
    spf = np.zeros(width, dtype=np.int64)
    lpf = np.zeros(width, dtype=np.int64)
    base = small_primes(math.isqrt(hi - 1))
    split = int(np.searchsorted(base, width, side="right"))

    for p in base[:split].tolist():
        start = (-lo) % p
        view = spf[start::p]
        view[view == 0] = p
        lpf[start::p] = p
        pk = p
        while pk < hi:
            rem[(-lo) % pk :: pk] //= p
            pk *= p

    # primes above the width hit the window at most once each
    big = base[split:]
    if big.size:
        starts = (-lo) % big
        hit = starts < width
        idx, ps = starts[hit], big[hit]
        if idx.size:
            smallest = np.full(width, np.iinfo(np.int64).max, dtype=np.int64)
            np.minimum.at(smallest, idx, ps)
            largest = np.zeros(width, dtype=np.int64)
            np.maximum.at(largest, idx, ps)
            fill = (spf == 0) & (smallest != np.iinfo(np.int64).max)
            spf[fill] = smallest[fill]
            np.maximum(lpf, largest, out=lpf)
            while idx.size:
                np.floor_divide.at(rem, idx, ps)
                again = rem[idx] % ps == 0
                idx, ps = idx[again], ps[again]

    cofactor = rem > 1
    lpf[cofactor] = rem[cofactor]
    unset = spf == 0
    spf[unset] = rem[unset]
    return spf, lpf


def _cache_path(cache_dir: Path, lo: int, hi: int) -> Path:
    return cache_dir / f"apl1_{lo}_{hi}.bin"


def _read_cached(path: Path, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray] | None:
    try:
        raw = path.read_bytes()
    except OSError:
        return None
    width = hi - lo
    if len(raw) != _HEADER.size + 16 * width:
        return None
    magic, c_lo, c_hi = _HEADER.unpack_from(raw)
    if magic != CACHE_MAGIC or (c_lo, c_hi) != (lo, hi):
        return None
    payload = np.frombuffer(raw, dtype="<i8", offset=_HEADER.size)
    return payload[:width].astype(np.int64), payload[width:].astype(np.int64)


def _write_cached(path: Path, lo: int, hi: int, spf: np.ndarray, lpf: np.ndarray) -> None:
    tmp = path.with_suffix(f".tmp{os.getpid()}")
    with open(tmp, "wb") as fh:
        fh.write(_HEADER.pack(CACHE_MAGIC, lo, hi))
        fh.write(spf.astype("<i8").tobytes())
        fh.write(lpf.astype("<i8").tobytes())
    os.replace(tmp, path)


def encode_segment(lo: int, hi: int, spf: np.ndarray, lpf: np.ndarray) -> bytes:
    """Serialize one segment in the on-disk cache layout."""
    return (
        _HEADER.pack(CACHE_MAGIC, lo, hi)
        + np.asarray(spf).astype("<i8").tobytes()
        + np.asarray(lpf).astype("<i8").tobytes()
    )


def build_factor_table(
    lo: int,
    hi: int,
    *,
    segment: int = DEFAULT_SEGMENT,
    threads: int = 1,
    cache_dir: str | os.PathLike | None = None,
    max_width: int = DEFAULT_MAX_WIDTH,
) -> FactorTable:
    """Sieve smallest and largest prime factors over ``[lo, hi)``.

    Base primes up to ``sqrt(hi)`` are divided out of every entry; whatever
    cofactor survives is a single prime and becomes the largest factor.

    Args:
        lo: inclusive window start, at least 2.
        hi: exclusive window end, at most ``2**50``.
        segment: entries sieved per pass.
        threads: worker count; the result is identical for any value.
        cache_dir: optional directory holding one ``APL1`` file per segment.
        max_width: refuse windows wider than this.
    """
    lo, hi = int(lo), int(hi)
    if not 2 <= lo < hi:
        raise AplabError(f"need 2 <= lo < hi, got lo={lo}, hi={hi}")
    if hi > MAX_N:
        raise AplabError(f"hi={hi} exceeds the supported bound 2**50")
    if hi - lo > max_width:
        raise BudgetExceeded(f"window width {hi - lo} exceeds max_width={max_width}")
    if segment < 1:
        raise AplabError("segment width must be positive")
    cache = Path(cache_dir) if cache_dir is not None else None
    if cache is not None:
        cache.mkdir(parents=True, exist_ok=True)

    def work(bounds: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
        s_lo, s_hi = bounds
        if cache is not None:
            path = _cache_path(cache, s_lo, s_hi)
            hit = _read_cached(path, s_lo, s_hi)
            if hit is not None:
                return hit
            spf, lpf = _sieve_factor_segment(s_lo, s_hi)
            _write_cached(path, s_lo, s_hi, spf, lpf)
            return spf, lpf
        return _sieve_factor_segment(s_lo, s_hi)

    bounds = list(_segments(lo, hi, segment))
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(b) for b in bounds]
    spf = np.concatenate([p[0] for p in parts])
    lpf = np.concatenate([p[1] for p in parts])
    return FactorTable(lo, hi, spf, lpf)


# ---------------------------------------------------------------------------
# prime counting

def primes_between(lo: int, hi: int, *, segment: int = DEFAULT_SEGMENT) -> np.ndarray:
    """Primes ``p`` with ``lo <= p < hi`` as an int64 array."""
    lo = max(int(lo), 2)
    hi = int(hi)
    if hi <= lo:
        return np.zeros(0, dtype=np.int64)
    if hi - 1 <= TABLE_LIMIT and hi <= 4 * DEFAULT_SEGMENT:
        return np.flatnonzero(is_prime_table(hi - 1)[lo:hi]).astype(np.int64) + lo
    chunks = [
        np.flatnonzero(_segment_is_prime(s_lo, s_hi)).astype(np.int64) + s_lo
        for s_lo, s_hi in _segments(lo, hi, segment)
    ]
    return np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)


def _count_segment(bounds: tuple[int, int]) -> int:
    return int(np.count_nonzero(_segment_is_prime(*bounds)))


def prime_count(x: int, *, segment: int = DEFAULT_SEGMENT, threads: int = 1) -> int:
    """pi(x): the number of primes ``<= x``."""
    x = int(x)
    if x < 0:
        raise AplabError("prime_count needs x >= 0")
    if x < 2:
        return 0
    if x > MAX_N:
        raise AplabError("x exceeds the supported bound 2**50")
    bounds = list(_segments(2, x + 1, segment))
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return sum(pool.map(_count_segment, bounds))
    return sum(_count_segment(b) for b in bounds)


def progression_count(lo: int, hi: int, q: int, a: int) -> int:
    """Number of primes ``p`` with ``lo < p <= hi`` and ``p ≡ a (mod q)``."""
    if q < 1:
        raise AplabError("modulus must be positive")
    lo = max(int(lo), 1)
    hi = int(hi)
    if hi <= lo:
        return 0
    r = a % q
    start = lo + 1 + ((r - lo - 1) % q)
    if hi <= TABLE_LIMIT:
        return int(np.count_nonzero(is_prime_table(hi)[start : hi + 1 : q]))
    total = 0
    for s_lo, s_hi in _segments(lo + 1, hi + 1, DEFAULT_SEGMENT):
        flags = _segment_is_prime(s_lo, s_hi)
        first = s_lo + ((r - s_lo) % q)
        total += int(np.count_nonzero(flags[first - s_lo :: q]))
    return total


def prime_count_ap(x: int, q: int, a: int) -> int:
    """pi(x; q, a): primes ``p <= x`` with ``p ≡ a (mod q)``; ``a`` is reduced mod ``q``."""
    if q == 0:
        raise AplabError("modulus q must be nonzero")
    if x < 0:
        raise AplabError("prime_count_ap needs x >= 0")
    if q < 0:
        q = -q
    return progression_count(0, x, q, a)


# ---------------------------------------------------------------------------
# single-integer arithmetic

@lru_cache(maxsize=1)
def _small_spf() -> np.ndarray:
    n = _SMALL_SPF_LIMIT
    spf = np.zeros(n, dtype=np.int32)
    for p in small_primes(math.isqrt(n - 1)).tolist():
        view = spf[p * p :: p]
        view[view == 0] = p
    idx = np.flatnonzero(spf == 0)
    spf[idx] = idx
    spf.flags.writeable = False
    return spf


@lru_cache(maxsize=1 << 16)
def factorize(n: int) -> Factorization:
    """Prime factorization of ``1 <= n <= 2**50``."""
    n = int(n)
    if n < 1:
        raise AplabError("factorize needs n >= 1")
    if n > MAX_N:
        raise AplabError("factorize is limited to n <= 2**50")
    if n < _SMALL_SPF_LIMIT:
        table = _small_spf()
        out: list[tuple[int, int]] = []
        m = n
        while m > 1:
            p = int(table[m])
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            out.append((p, e))
        return Factorization(n, tuple(out))
    from sympy import factorint

    return Factorization(n, tuple(sorted((int(p), int(e)) for p, e in factorint(n).items())))


class Arith(NamedTuple):
    phi: int
    tau: int
    mu: int
    lpf: int
    spf: int


def arith(n: int) -> Arith:
    """phi, tau, mu, P+ and P- of ``n``; ``P+(1) = P-(1) = 1`` by convention."""
    if n < 1:
        raise AplabError("arith needs n >= 1")
    f = factorize(n).factors
    if not f:
        return Arith(1, 1, 1, 1, 1)
    phi, tau = 1, 1
    for p, e in f:
        phi *= (p - 1) * p ** (e - 1)
        tau *= e + 1
    mu = 0 if any(e > 1 for _, e in f) else (-1) ** len(f)
    return Arith(phi, tau, mu, f[-1][0], f[0][0])


def euler_phi(n: int) -> int:
    return arith(n).phi


def divisor_count(n: int) -> int:
    return arith(n).tau


def mobius(n: int) -> int:
    return arith(n).mu


def divisors(n: int) -> list[int]:
    """Sorted list of positive divisors of ``n``."""
    divs = [1]
    for p, e in factorize(n).factors:
        divs = [d * p**k for d in divs for k in range(e + 1)]
    return sorted(divs)


def distinct_primes(n: int) -> Sequence[int]:
    return factorize(n).primes
