"""
Prime sieves shared by the coefficient, character and diagnostic modules.
"""

import math
from typing import Iterator

import numpy as np


def primes_up_to(limit: int) -> np.ndarray:
    """
    All primes <= limit as an int64 array (sieve of Eratosthenes).

    Args:
        limit: Inclusive upper bound

    Returns:
        Sorted numpy array of primes
    """
    if limit < 2:
        return np.array([], dtype=np.int64)
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    is_prime[4::2] = False
    for p in range(3, math.isqrt(limit) + 1, 2):
        if is_prime[p]:
            is_prime[p * p::2 * p] = False
    return np.flatnonzero(is_prime).astype(np.int64)


def segmented_primes(lo: int, hi: int, segment: int = 1 << 20) -> Iterator[np.ndarray]:
    """
    Stream the primes in [lo, hi] in ascending segments.

    Args:
        lo: Inclusive lower bound
        hi: Inclusive upper bound
        segment: Number of integers covered per segment

    Yields:
        int64 arrays of primes, one per non-empty segment
    """
    lo = max(lo, 2)
    if hi < lo:
        return
    base = primes_up_to(math.isqrt(hi))
    start = lo
    while start <= hi:
        stop = min(start + segment, hi + 1)  # exclusive
        mask = np.ones(stop - start, dtype=bool)
        for p in base:
            p = int(p)
            if p * p >= stop:
                break
            first = max(p * p, ((start + p - 1) // p) * p)
            mask[first - start::p] = False
        seg = np.flatnonzero(mask).astype(np.int64) + start
        if seg.size:
            yield seg
        start = stop


def smallest_prime_factor(limit: int) -> np.ndarray:
    """
    Smallest-prime-factor table spf[n] for 0 <= n <= limit (spf[0] = spf[1] = 0).
    """
    spf = np.zeros(limit + 1, dtype=np.int64)
    if limit >= 2:
        spf[2::2] = 2
    for p in range(3, math.isqrt(limit) + 1, 2):
        if spf[p] == 0:
            view = spf[p * p::2 * p]
            view[view == 0] = p
    unmarked = np.flatnonzero(spf == 0)
    unmarked = unmarked[unmarked >= 2]
    spf[unmarked] = unmarked
    return spf


def prime_powers_up_to(limit: float):
    """
    Enumerate (p, n, p**n) for all prime powers p**n <= limit, ordered by p then n.
    """
    bound = int(math.floor(limit))
    out = []
    for p in primes_up_to(bound):
        p = int(p)
        q, n = p, 1
        while q <= bound:
            out.append((p, n, q))
            q *= p
            n += 1
    return out
