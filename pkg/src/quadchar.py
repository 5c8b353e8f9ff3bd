"""
Quadratic characters of imaginary quadratic fields.

Kronecker symbols, the discriminant family D <= -d <= 2D, class numbers by
reduced binary quadratic forms, and L(1, chi_d) two ways.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional

import numpy as np
from scipy.special import erfc

try:
    from .errors import ConsistencyError
    from .primes import primes_up_to
except ImportError:
    from errors import ConsistencyError
    from primes import primes_up_to

logger = logging.getLogger(__name__)

L1_REL_TOL = 1e-8
SIEVE_BLOCK = 1 << 20


@dataclass(frozen=True)
class DiscriminantFilter:
    """
    Family { d < 0 : D <= -d <= upper, |d| squarefree, d = residue mod modulus }.

    upper defaults to 2D (a dyadic block). residue must be 1 mod 4 and the
    modulus a multiple of 4, so every member is a fundamental discriminant.
    """

    D: int
    residue: int = 1
    modulus: int = 8
    upper: Optional[int] = None

    def __post_init__(self):
        if self.D < 3:
            raise ValueError(f"D must be >= 3, got {self.D}")
        if self.modulus % 4:
            raise ValueError(f"modulus must be a multiple of 4, got {self.modulus}")
        if self.residue % 4 != 1:
            raise ValueError(f"residue must be 1 mod 4, got {self.residue}")
        if math.gcd(self.residue, self.modulus) != 1:
            raise ValueError(f"residue {self.residue} not coprime to {self.modulus}")
        if self.upper is None:
            object.__setattr__(self, 'upper', 2 * self.D)

    def contains(self, d: int) -> bool:
        return (d < 0 and self.D <= -d <= self.upper and d % self.modulus == self.residue % self.modulus
                and is_squarefree(-d))


def kronecker(d: int, n: int) -> int:
    """
    Kronecker symbol (d/n) for any integer d and n >= 1 (binary algorithm).

    Examples:
        kronecker(-4, 3) -> -1
        kronecker(-3, 3) -> 0
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    k = 1
    # (d/2)^v
    v = (n & -n).bit_length() - 1
    n >>= v
    if v:
        if d % 2 == 0:
            return 0
        if v & 1 and d % 8 in (3, 5):
            k = -k
    # Jacobi symbol (d/n), n odd
    a, b = d % n, n
    while a:
        while a % 2 == 0:
            a //= 2
            if b % 8 in (3, 5):
                k = -k
        a, b = b, a
        if a % 4 == 3 and b % 4 == 3:
            k = -k
        a %= b
    return k if b == 1 else 0


def is_squarefree(n: int) -> bool:
    """Trial-division squarefree test."""
    n = abs(n)
    if n == 0:
        return False
    p = 2
    while p * p <= n:
        if n % (p * p) == 0:
            return False
        if n % p == 0:
            n //= p
        p += 1
    return True


def is_fundamental_discriminant(d: int) -> bool:
    """d = 1 mod 4 squarefree, or d = 4m with m = 2, 3 mod 4 squarefree (d != 1)."""
    if d in (0, 1):
        return False
    if d % 4 == 1:
        return is_squarefree(d)
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and is_squarefree(m)
    return False


@lru_cache(maxsize=4096)
def character_table(d: int) -> np.ndarray:
    """
    chi_d(r) for 0 <= r < |d| as an int8 array.

    For d = 1 mod 4 squarefree, chi_d(n) is the Jacobi symbol (n/|d|), built as
    a product of Legendre tables; other d fall back to the scalar symbol.
    """
    m = abs(d)
    if d % 4 == 1 and is_squarefree(d):
        table = np.ones(m, dtype=np.int8)
        residues = np.arange(m, dtype=np.int64)
        rest = m
        for p in primes_up_to(m):
            p = int(p)
            if rest % p:
                continue
            rest //= p
            legendre = -np.ones(p, dtype=np.int8)
            legendre[(np.arange(1, p, dtype=np.int64) ** 2) % p] = 1
            legendre[0] = 0
            table *= legendre[residues % p]
            if rest == 1:
                break
    else:
        table = np.array([kronecker(d, r) if r else (1 if m == 1 else 0) for r in range(m)],
                         dtype=np.int8)
    table.setflags(write=False)
    return table


def character_values(d: int, n: np.ndarray) -> np.ndarray:
    """chi_d(n) for an integer array n >= 1."""
    return character_table(d)[np.asarray(n, dtype=np.int64) % abs(d)]


def enumerate_discriminants(filt: DiscriminantFilter) -> List[int]:
    """
    All family members, ascending |d|.

    Squarefreeness comes from a sieve of prime squares up to sqrt(upper),
    run over blocks of 2^20 integers.
    """
    target = (-filt.residue) % filt.modulus  # -d = |d| = target mod modulus
    primes = primes_up_to(math.isqrt(filt.upper))
    out: List[int] = []
    lo = filt.D
    while lo <= filt.upper:
        hi = min(lo + SIEVE_BLOCK, filt.upper + 1)  # exclusive
        mask = np.ones(hi - lo, dtype=bool)
        for p in primes:
            q = int(p) * int(p)
            first = ((lo + q - 1) // q) * q
            mask[first - lo::q] = False
        values = np.arange(lo, hi, dtype=np.int64)
        keep = mask & (values % filt.modulus == target)
        out.extend(-int(m) for m in values[keep])
        lo = hi
    logger.debug(f"family {filt}: {len(out)} discriminants")
    return out


def family_size(filt: DiscriminantFilter) -> int:
    return len(enumerate_discriminants(filt))


def units_count(d: int) -> int:
    """Number of roots of unity w(d) in Q(sqrt d)."""
    return {-3: 6, -4: 4}.get(d, 2)


@lru_cache(maxsize=65536)
def class_number(d: int) -> int:
    """
    h(d) by counting reduced primitive forms (a, b, c) with b^2 - 4ac = d,
    |b| <= a <= c and b >= 0 whenever |b| = a or a = c.
    """
    if d >= 0 or d % 4 not in (0, 1):
        raise ValueError(f"d must be a negative discriminant, got {d}")
    D = -d
    h = 0
    a = 1
    while 3 * a * a <= D:
        b = np.arange(-a + 1, a + 1, dtype=np.int64)
        b = b[(b - d) % 2 == 0]
        num = b * b - d
        b = b[num % (4 * a) == 0]
        c = (b * b - d) // (4 * a)
        ok = (c >= a) & ~((c == a) & (b < 0))
        b, c = b[ok], c[ok]
        g = np.gcd(np.gcd(a, np.abs(b)), c)
        h += int(np.count_nonzero(g == 1))
        a += 1
    return h


def _l1_series(d: int) -> float:
    """
    L(1, chi_d) for odd primitive real chi_d (d < 0 fundamental) from
    sum chi(n) [exp(-pi n^2/|d|)/n + (pi/sqrt|d|) erfc(n sqrt(pi/|d|))].
    """
    q = abs(d)
    n_max = int(math.sqrt(45.0 * q / math.pi)) + 2
    n = np.arange(1, n_max + 1, dtype=np.int64)
    chi = character_values(d, n).astype(np.float64)
    x = n.astype(np.float64)
    terms = np.exp(-math.pi * x * x / q) / x + math.pi / math.sqrt(q) * erfc(x * math.sqrt(math.pi / q))
    return float(np.dot(chi, terms))


def dirichlet_L1(d: int, rel_tol: float = L1_REL_TOL) -> float:
    """
    L(1, chi_d) by the class number formula 2 pi h / (w sqrt|d|), cross-checked
    against a rapidly convergent character series.

    Raises:
        ConsistencyError: If the two values differ by more than rel_tol
    """
    if d > -3 or not is_fundamental_discriminant(d):
        raise ValueError(f"d must be a negative fundamental discriminant, got {d}")
    formula = 2 * math.pi * class_number(d) / (units_count(d) * math.sqrt(-d))
    series = _l1_series(d)
    if abs(formula - series) > rel_tol * abs(formula):
        raise ConsistencyError(f"L(1, chi_{d}): class number formula {formula!r} vs series {series!r}")
    return formula
