"""Complete Kloosterman and Ramanujan sums, and a Weil-bound auditor.

Every phase ``e(k/c)`` is looked up from the exact integer residue
``k mod c``; no angle is ever formed from an unreduced float.
"""
from __future__ import annotations

import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal

import numpy as np

from .errors import AplabError, BudgetExceeded
from sympy import isprime, primitive_root

from .sieve_core import arith, divisors, factorize

KLOOSTERMAN_MAX_C = 10**7
FULL_AUDIT_MAX_C = 300
SAMPLED_AUDIT_MAX_C = 10**5
_CHUNK = 1 << 20


@dataclass(frozen=True)
class KloostermanValue:
    m: int
    n: int
    c: int
    value: float
    imag_residual: float


def modular_inverses(b: np.ndarray, c: int) -> np.ndarray:
    """Inverses of the units ``b`` modulo ``c`` by a vectorized extended Euclid."""
    r0 = np.full(b.shape, c, dtype=np.int64)
    r1 = np.asarray(b, dtype=np.int64) % c
    t0 = np.zeros(b.shape, dtype=np.int64)
    t1 = np.ones(b.shape, dtype=np.int64)
    while True:
        live = r1 != 0
        if not live.any():
            break
        q = np.zeros_like(r0)
        q[live] = r0[live] // r1[live]
        r0, r1 = np.where(live, r1, r0), np.where(live, r0 - q * r1, r1)
        t0, t1 = np.where(live, t1, t0), np.where(live, t0 - q * t1, t1)
    if np.any(r0 != 1):
        raise AplabError("modular_inverses called on a non-unit")
    return t0 % c


@lru_cache(maxsize=256)
def _unit_table(c: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Units mod ``c``, their inverses and the ``c``-th roots of unity."""
    b = np.arange(c, dtype=np.int64)
    units = b[np.gcd(b, c) == 1] if c > 1 else np.zeros(1, dtype=np.int64)
    inv = modular_inverses(units, c) if c > 1 else units.copy()
    roots = np.exp(2j * np.pi * np.arange(c) / c)
    for arr in (units, inv, roots):
        arr.flags.writeable = False
    return units, inv, roots


def _fsum_complex(z: np.ndarray) -> complex:
    return complex(math.fsum(z.real.tolist()), math.fsum(z.imag.tolist()))


def kloosterman(m: int, n: int, c: int) -> KloostermanValue:
    """``S(m, n; c) = sum over units b mod c of e((m b + n b^-1) / c)``."""
    if c < 1:
        raise AplabError("modulus c must be positive")
    if c > KLOOSTERMAN_MAX_C:
        raise BudgetExceeded(f"c={c} exceeds the enumeration budget {KLOOSTERMAN_MAX_C}")
    if c <= 4096:
        units, inv, roots = _unit_table(c)
    else:
        b = np.arange(c, dtype=np.int64)
        units = b[np.gcd(b, c) == 1]
        inv = modular_inverses(units, c)
        roots = None
    mm, nn = m % c, n % c
    total = complex(0)
    for lo in range(0, units.size, _CHUNK):
        res = (mm * units[lo : lo + _CHUNK] + nn * inv[lo : lo + _CHUNK]) % c
        phases = roots[res] if roots is not None else np.exp(2j * np.pi * res / c)
        total += _fsum_complex(phases)
    return KloostermanValue(m, n, c, total.real, total.imag)


def ramanujan(m: int, c: int) -> int:
    """``S(m, 0; c)`` exactly, via ``sum_{d | (m, c)} d mu(c/d)``."""
    if c < 1:
        raise AplabError("modulus c must be positive")
    g = math.gcd(m, c)
    return sum(d * arith(c // d).mu for d in divisors(g))


def ramanujan_by_enumeration(c: int) -> np.ndarray:
    """``S(m, 0; c)`` for every ``m`` in ``0..c-1``, summed over units with an FFT."""
    if c < 1:
        raise AplabError("modulus c must be positive")
    ind = np.zeros(c)
    b = np.arange(c)
    ind[np.gcd(b, c) == 1] = 1.0
    if c == 1:
        ind[0] = 1.0
    spectrum = np.fft.fft(ind)
    out = np.rint(spectrum.real).astype(np.int64)
    if np.max(np.abs(spectrum - out)) > 1e-6 * max(1, c):
        raise AplabError("FFT residual too large")
    return out


def weil_bound(m: int, n: int, c: int) -> float:
    """``tau(c) sqrt(c) gcd(m, n, c)**(1/2)``."""
    return arith(c).tau * math.sqrt(c) * math.sqrt(math.gcd(math.gcd(m, n), c))


def weil_ratio(m: int, n: int, c: int) -> float:
    return abs(kloosterman(m, n, c).value) / weil_bound(m, n, c)


# ---------------------------------------------------------------------------
# audits

@dataclass
class WeilAudit:
    mode: str
    c_max: int
    seed: int | None
    tested: int
    max_ratio: float
    witness: tuple[int, int, int]
    histogram: list[int] = field(default_factory=list)
    bin_edges: list[float] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "c_max": self.c_max,
            "seed": self.seed,
            "prng": "numpy.default_rng(PCG64)" if self.mode == "sampled" else None,
            "tested": self.tested,
            "max_ratio": self.max_ratio,
            "witness": list(self.witness),
            "histogram": self.histogram,
            "bin_edges": self.bin_edges,
        }


_EDGES = np.linspace(0.0, 1.0, 11)


def _hist(ratios: np.ndarray) -> np.ndarray:
    clipped = np.minimum(ratios, 1.0)
    return np.histogram(clipped, bins=_EDGES)[0]


def kloosterman_matrix(c: int) -> np.ndarray:
    """``S(m, n; c)`` for all ``0 <= m, n < c`` as a real array."""
    units, inv, roots = _unit_table(c)
    k = np.arange(c, dtype=np.int64)[:, None]
    left = roots[(k * units[None, :]) % c]
    right = roots[(k * inv[None, :]) % c]
    return (left @ right.T).real


def _audit_one_c(c: int) -> tuple[float, tuple[int, int, int], int, np.ndarray]:
    S = np.abs(kloosterman_matrix(c))
    k = np.arange(c)
    g = np.gcd(np.gcd(k[:, None], k[None, :]), c)
    ratios = S / (arith(c).tau * math.sqrt(c) * np.sqrt(g))
    ratios[0, 0] = -1.0
    idx = int(np.argmax(ratios))
    m, n = divmod(idx, c)
    flat = np.delete(ratios.ravel(), 0)
    return float(ratios[m, n]), (m, n, c), flat.size, _hist(flat)


def _reduce(parts) -> tuple[float, tuple[int, int, int], int, np.ndarray]:
    best, witness, tested = -1.0, (0, 0, 0), 0
    hist = np.zeros(len(_EDGES) - 1, dtype=np.int64)
    for r, w, t, h in parts:
        if r > best:
            best, witness = r, w
        tested += t
        hist += h
    return best, witness, tested, hist


def _prime_power_parts(c: int) -> list[int]:
    return [p**e for p, e in factorize(c).factors]


def _kloosterman_batch(ms: np.ndarray, ns: np.ndarray, q: int) -> np.ndarray:
    """Real parts of ``S(m_i, n_i; q)`` for many pairs with one modulus."""
    units, inv, roots = _unit_table(q) if q <= 4096 else _unit_table.__wrapped__(q)
    out = np.empty(ms.size)
    rows = max(1, _CHUNK // max(units.size, 1))
    for lo in range(0, ms.size, rows):
        mm = ms[lo : lo + rows, None]
        nn = ns[lo : lo + rows, None]
        res = (mm * units[None, :] + nn * inv[None, :]) % q
        out[lo : lo + rows] = roots[res].real.sum(axis=1)
    return out


def kloosterman_multiplicative(m: int, n: int, c: int) -> float:
    """``S(m, n; c)`` assembled from prime-power moduli by twisted multiplicativity."""
    value = 1.0
    for q in _prime_power_parts(c):
        rest = c // q
        r_inv = pow(rest, -1, q) if q > 1 else 0
        value *= _kloosterman_batch(
            np.array([m * r_inv * r_inv % q]), np.array([n % q]), q
        )[0]
    return value


def _sampled_triples(c_max: int, samples: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    out = np.empty((0, 3), dtype=np.int64)
    while out.shape[0] < samples:
        need = samples - out.shape[0]
        c = rng.integers(2, c_max + 1, size=need)
        m = rng.integers(0, c)
        n = rng.integers(0, c)
        batch = np.stack([m, n, c], axis=1)
        batch = batch[(m != 0) | (n != 0)]
        out = np.concatenate([out, batch])
    return out[:samples]


def _prime_half_table(p: int) -> tuple[np.ndarray, np.ndarray]:
    """Half of the units mod an odd prime ``p`` (one of each pair ``+-b``) with their inverses.

    Units are generated as powers ``g**j`` of a primitive root; the inverse of
    ``g**j`` is ``g**(p-1-j)`` and ``g**(j + (p-1)/2) = -g**j``.
    """
    g = primitive_root(p)
    block = math.isqrt(p - 1) + 1
    low = np.empty(block, dtype=np.int64)
    low[0] = 1
    for j in range(1, block):
        low[j] = low[j - 1] * g % p
    step = int(low[-1]) * g % p
    high = np.empty(block, dtype=np.int64)
    high[0] = 1
    for i in range(1, block):
        high[i] = high[i - 1] * step % p
    powers = ((high[:, None] * low[None, :]) % p).ravel()[: p - 1]
    half = (p - 1) // 2
    inv = powers[(p - 1 - np.arange(half)) % (p - 1)]
    return powers[:half], inv


def _prime_batch(ms: np.ndarray, ns: np.ndarray, p: int) -> np.ndarray:
    """``S(m_i, n_i; p)`` for an odd prime ``p`` and pairs with ``m_i`` a unit."""
    units, inv = _prime_half_table(p)
    out = np.empty(ms.size)
    rows = max(1, _CHUNK // units.size)
    scale = 2 * np.pi / p
    for lo in range(0, ms.size, rows):
        k = (ms[lo : lo + rows] * ns[lo : lo + rows]) % p
        res = (units[None, :] + k[:, None] * inv[None, :]) % p
        out[lo : lo + rows] = 2.0 * np.cos(res * scale).sum(axis=1)
    return out


def _values_mod(q: int, ms: np.ndarray, ns: np.ndarray) -> np.ndarray:
    """``S(m_i, n_i; q)`` for many pairs with one prime-power modulus.

    When ``m`` or ``n`` is a unit, ``S(m, n; q) = S(1, m n; q)``; for large
    primes this is summed over a primitive-root table.
    """
    if q <= 4096 or not isprime(q):
        return _kloosterman_batch(ms, ns, q)
    out = np.empty(ms.size)
    swap = ms % q == 0
    a = np.where(swap, ns, ms) % q
    b = np.where(swap, ms, ns) % q
    zero = a == 0
    out[zero] = q - 1
    live = ~zero
    if live.any():
        out[live] = _prime_batch(a[live], b[live], q)
    return out


def _sampled_values(triples: np.ndarray, threads: int) -> np.ndarray:
    """Kloosterman values for all sampled triples, grouped by prime-power modulus."""
    values = np.ones(triples.shape[0])
    jobs: dict[int, list[tuple[int, int, int]]] = defaultdict(list)
    for i, (m, n, c) in enumerate(triples.tolist()):
        for q in _prime_power_parts(c):
            r_inv = pow(c // q, -1, q)
            jobs[q].append((i, m * r_inv * r_inv % q, n % q))

    def run(q: int) -> tuple[np.ndarray, np.ndarray]:
        rows = np.array(jobs[q], dtype=np.int64)
        return rows[:, 0], _values_mod(q, rows[:, 1], rows[:, 2])

    order = sorted(jobs)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, order))
    else:
        parts = [run(q) for q in order]
    # multiply in a fixed order (ascending prime power) for reproducibility
    for idx, vals in parts:
        values[idx] *= vals
    return values


def weil_audit(
    c_max: int,
    mode: Literal["full", "sampled"] = "full",
    samples: int = 10**5,
    seed: int = 0,
    *,
    threads: int = 1,
) -> WeilAudit:
    """Largest ``|S(m, n; c)| / (tau(c) sqrt(c) gcd(m, n, c)**(1/2))`` found.

    ``full`` covers every ``2 <= c <= c_max`` and every pair ``(m, n)`` mod
    ``c`` other than ``(0, 0)``; ``sampled`` draws triples uniformly with
    ``numpy.random.default_rng(seed)``.
    """
    if c_max < 2:
        raise AplabError("c_max must be at least 2")
    if mode == "full":
        if c_max > FULL_AUDIT_MAX_C:
            raise BudgetExceeded(f"full audit limited to c_max <= {FULL_AUDIT_MAX_C}")
        cs = list(range(2, c_max + 1))
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(pool.map(_audit_one_c, cs))
        else:
            parts = [_audit_one_c(c) for c in cs]
        best, witness, tested, hist = _reduce(parts)
        return WeilAudit("full", c_max, None, tested, best, witness, hist.tolist(), _EDGES.tolist())
    if mode != "sampled":
        raise AplabError(f"unknown audit mode {mode!r}")
    if c_max > SAMPLED_AUDIT_MAX_C:
        raise BudgetExceeded(f"sampled audit limited to c_max <= {SAMPLED_AUDIT_MAX_C}")
    if samples < 1:
        raise AplabError("need at least one sample")
    triples = _sampled_triples(c_max, samples, seed)
    values = _sampled_values(triples, threads)
    m, n, c = triples[:, 0], triples[:, 1], triples[:, 2]
    tau = np.array([arith(int(v)).tau for v in c.tolist()], dtype=np.float64)
    g = np.gcd(np.gcd(m, n), c)
    ratios = np.abs(values) / (tau * np.sqrt(c) * np.sqrt(g))
    idx = int(np.argmax(ratios))
    witness = tuple(int(v) for v in triples[idx])
    return WeilAudit(
        "sampled", c_max, seed, samples, float(ratios[idx]), witness, _hist(ratios).tolist(), _EDGES.tolist()
    )
