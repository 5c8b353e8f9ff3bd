"""
Hecke eigenform coefficients and symmetric-power local data.

Level-one cusp forms of weight k in {12, 16, 18, 20, 22, 26} are Delta times
the Eisenstein series of weight k - 12. q-expansions are multiplied exactly
by Kronecker substitution on gmpy2 integers; everything downstream of the
Satake angles is numpy float64.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import gmpy2
import numpy as np

try:
    from .errors import DeligneViolationError, IntegrityError, ResourceError, UnsupportedWeightError
    from .primes import primes_up_to, smallest_prime_factor
except ImportError:
    from errors import DeligneViolationError, IntegrityError, ResourceError, UnsupportedWeightError
    from primes import primes_up_to, smallest_prime_factor

logger = logging.getLogger(__name__)

BUILTIN_WEIGHTS = (12, 16, 18, 20, 22, 26)

# E_k = 1 + C_k * sum sigma_{k-1}(n) q^n
EISENSTEIN_CONSTANTS = {4: 240, 6: -504, 8: 480, 10: -264, 14: -24}

DELIGNE_TOL = 1e-9

DEFAULT_MAX_TERMS = 20_000_000


@dataclass(frozen=True)
class EigenformSpec:
    """A level-one even-weight normalized Hecke eigenform."""

    weight: int
    label: str = ""
    level: int = 1

    def __post_init__(self):
        if self.weight < 12 or self.weight % 2:
            raise UnsupportedWeightError(f"weight must be even and >= 12, got {self.weight}")
        if self.level != 1:
            raise UnsupportedWeightError(f"only level 1 is supported, got {self.level}")
        if not self.label:
            object.__setattr__(self, 'label', f"1.{self.weight}.a.a")


@dataclass(frozen=True)
class CoefficientTable:
    """
    Exact Fourier coefficients a(1..N_max) of an eigenform.

    ``a`` is indexed from 0 with a[0] = 0 so that a[n] is the n-th coefficient.
    """

    spec: EigenformSpec
    a: Tuple[int, ...]

    @property
    def N_max(self) -> int:
        return len(self.a) - 1

    def __getitem__(self, n: int) -> int:
        return self.a[n]

    def truncate(self, N_max: int) -> "CoefficientTable":
        if N_max > self.N_max:
            raise ValueError(f"cannot extend table of {self.N_max} terms to {N_max}")
        return CoefficientTable(self.spec, self.a[:N_max + 1])

    def normalized(self, n: int) -> float:
        """lambda_f(n) = a(n) / n^((k-1)/2)."""
        return self.a[n] / n ** ((self.spec.weight - 1) / 2)


@dataclass(frozen=True)
class SatakeAngle:
    """theta_p in [0, pi] with 2 cos(theta_p) = lambda_f(p)."""

    p: int
    theta: float


@dataclass(frozen=True)
class SymCubeCoefficients:
    """Dirichlet coefficients b(n), n <= N_max, of L(s, sym^3 f) (analytic normalization)."""

    label: str
    weight: int
    b: np.ndarray = field(repr=False)

    @property
    def N_max(self) -> int:
        return len(self.b) - 1


# ---------------------------------------------------------------------------
# Exact q-expansions
# ---------------------------------------------------------------------------

def _slot_bytes(bound: int) -> int:
    """Bytes per slot so that signed values of magnitude <= bound fit with a sign bit."""
    return (int(bound).bit_length() + 2 + 7) // 8


def _pack(coeffs: Sequence[int], width: int) -> "gmpy2.mpz":
    pos = bytearray(len(coeffs) * width)
    neg = bytearray(len(coeffs) * width)
    for i, c in enumerate(coeffs):
        if c > 0:
            pos[i * width:(i + 1) * width] = int(c).to_bytes(width, 'little')
        elif c < 0:
            neg[i * width:(i + 1) * width] = int(-c).to_bytes(width, 'little')
    return gmpy2.mpz(int.from_bytes(pos, 'little')) - gmpy2.mpz(int.from_bytes(neg, 'little'))


def _unpack(value: "gmpy2.mpz", n: int, width: int) -> List[int]:
    half = 1 << (8 * width - 1)
    # bias every slot by 2^(8w-1); slots stay in [0, 2^(8w)) so no carries cross them
    bias = gmpy2.mpz(int.from_bytes((b'\x00' * (width - 1) + b'\x80') * n, 'little'))
    low = gmpy2.f_mod_2exp(value + bias, 8 * width * n)
    raw = int(low).to_bytes(n * width, 'little')
    return [int.from_bytes(raw[i * width:(i + 1) * width], 'little') - half for i in range(n)]


def series_multiply(f: Sequence[int], g: Sequence[int], n: int) -> List[int]:
    """
    Product of two integer power series truncated to n terms (q^0 .. q^(n-1)).

    Exact; the multiplication itself is one big-integer product in GMP.
    """
    f = list(f[:n])
    g = list(g[:n])
    if not f or not g:
        return [0] * n
    max_f = max(abs(c) for c in f)
    max_g = max(abs(c) for c in g)
    if max_f == 0 or max_g == 0:
        return [0] * n
    width = _slot_bytes(max_f * max_g * min(len(f), len(g)))
    F = _pack(f, width)
    G = F if g == f else _pack(g, width)
    product = F * F if G is F else F * G
    return _unpack(product, n, width)


def _eta_cubed(n: int) -> List[int]:
    """prod (1 - q^m)^3 to n terms via Jacobi's identity."""
    series = [0] * n
    m = 0
    while m * (m + 1) // 2 < n:
        series[m * (m + 1) // 2] = (-1) ** m * (2 * m + 1)
        m += 1
    return series


def _check_budget(N_max: int, max_terms: int) -> None:
    if N_max < 1:
        raise ValueError(f"N_max must be >= 1, got {N_max}")
    if N_max > max_terms:
        raise ResourceError(f"N_max={N_max} exceeds the configured budget of {max_terms} terms")


def delta_coefficients(N_max: int, max_terms: int = DEFAULT_MAX_TERMS) -> CoefficientTable:
    """
    Ramanujan tau(n) for n <= N_max from q * prod (1 - q^m)^24.

    Args:
        N_max: Number of coefficients
        max_terms: Resource budget

    Returns:
        CoefficientTable of the weight-12 form

    Raises:
        ResourceError: If N_max exceeds max_terms
    """
    _check_budget(N_max, max_terms)
    series = _eta_cubed(N_max)
    for _ in range(3):  # (eta^3)^8
        series = series_multiply(series, series, N_max)
    return CoefficientTable(EigenformSpec(12, "1.12.a.a"), (0,) + tuple(series))


def divisor_sigma(j: int, N: int) -> List[int]:
    """sigma_j(n) for 0 <= n < N (sigma_j(0) = 0), exact, by multiplicativity."""
    sig = [0] * N
    if N > 1:
        sig[1] = 1
    spf = smallest_prime_factor(max(N - 1, 1))
    ppart = [0] * N  # largest power of spf[n] dividing n
    for n in range(2, N):
        p = int(spf[n])
        m = n // p
        if m % p:
            ppart[n] = p
            sig[n] = sig[m] * (1 + p ** j)
        else:
            ppart[n] = ppart[m] * p
            rest = n // ppart[n]
            if rest == 1:
                sig[n] = 1 + p ** j * sig[m]
            else:
                sig[n] = sig[rest] * sig[ppart[n]]
    return sig


def eisenstein_coefficients(k: int, N: int) -> List[int]:
    """q-expansion of the level-one Eisenstein series E_k to N terms (E_0 = 1)."""
    if k == 0:
        return [1] + [0] * (N - 1)
    if k not in EISENSTEIN_CONSTANTS:
        raise UnsupportedWeightError(f"no Eisenstein series of weight {k} in the built-in set")
    constant = EISENSTEIN_CONSTANTS[k]
    sig = divisor_sigma(k - 1, N)
    return [1] + [constant * s for s in sig[1:]]


def builtin_coefficients(spec: EigenformSpec, N_max: int,
                         max_terms: int = DEFAULT_MAX_TERMS) -> CoefficientTable:
    """
    Coefficients of the unique normalized cusp form of weight spec.weight as Delta * E_{k-12}.

    Raises:
        UnsupportedWeightError: If the weight has a cusp space of dimension != 1
    """
    if spec.weight not in BUILTIN_WEIGHTS:
        raise UnsupportedWeightError(
            f"weight {spec.weight} is not built in; supported: {BUILTIN_WEIGHTS}")
    delta = delta_coefficients(N_max, max_terms)
    if spec.weight == 12:
        return CoefficientTable(spec, delta.a)
    eis = eisenstein_coefficients(spec.weight - 12, N_max)
    product = series_multiply(list(delta.a[1:]), eis, N_max)
    return CoefficientTable(spec, (0,) + tuple(product))


def validate_table(table: CoefficientTable, limit: Optional[int] = None) -> None:
    """
    Exact integrity checks: a(1) = 1, Hecke recursion at prime powers, multiplicativity.

    Args:
        table: Table to check
        limit: Only check n <= limit (default: whole table)

    Raises:
        IntegrityError: On the first violation
    """
    N = table.N_max if limit is None else min(limit, table.N_max)
    a = table.a
    k = table.spec.weight
    if N < 1 or a[1] != 1:
        raise IntegrityError(f"{table.spec.label}: a(1) must be 1")

    for p in primes_up_to(N):
        p = int(p)
        ap = a[p]
        if ap * ap > 4 * p ** (k - 1):
            raise IntegrityError(f"{table.spec.label}: |a({p})| exceeds the Deligne bound")
        pk = p ** (k - 1)
        prev, cur, q = 1, ap, p
        while q * p <= N:
            expected = ap * cur - pk * prev
            if a[q * p] != expected:
                raise IntegrityError(
                    f"{table.spec.label}: Hecke recursion fails at {p}^j = {q * p}")
            prev, cur, q = cur, expected, q * p

    spf = smallest_prime_factor(N)
    for n in range(2, N + 1):
        p = int(spf[n])
        pe = p
        while n % (pe * p) == 0:
            pe *= p
        if pe != n and a[n] != a[pe] * a[n // pe]:
            raise IntegrityError(f"{table.spec.label}: multiplicativity fails at n = {n}")


# ---------------------------------------------------------------------------
# Satake data
# ---------------------------------------------------------------------------

def _clamp_lambda(lam: float, p: int) -> float:
    if abs(lam) > 2 + DELIGNE_TOL:
        raise DeligneViolationError(f"|lambda({p})| = {abs(lam):.12g} > 2")
    if abs(lam) > 2:
        logger.debug(f"clamped lambda({p}) = {lam!r} to [-2, 2]")
    return min(2.0, max(-2.0, lam))


def satake_angle(table: CoefficientTable, p: int) -> SatakeAngle:
    """
    Satake angle theta_p = arccos(lambda_f(p) / 2).

    Raises:
        DeligneViolationError: If |lambda_f(p)| > 2 + 1e-9
    """
    if p > table.N_max:
        raise ValueError(f"p={p} beyond table of {table.N_max} terms")
    lam = _clamp_lambda(table.normalized(p), p)
    return SatakeAngle(p, math.acos(lam / 2))


def satake_angles(table: CoefficientTable, limit: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorised Satake angles for every prime p <= limit.

    Returns:
        (primes, thetas) as numpy arrays
    """
    N = table.N_max if limit is None else min(limit, table.N_max)
    primes = primes_up_to(N)
    half = (table.spec.weight - 1) / 2
    lam = np.array([table.a[int(p)] / float(p) ** half for p in primes], dtype=np.float64)
    bad = np.abs(lam) > 2 + DELIGNE_TOL
    if bad.any():
        p = int(primes[np.argmax(bad)])
        raise DeligneViolationError(f"{table.spec.label}: |lambda({p})| > 2")
    return primes, np.arccos(np.clip(lam, -2.0, 2.0) / 2)


def sym_power_lambda(theta, r: int):
    """
    lambda_{sym^r f}(p) = U_r(cos theta) = sin((r+1) theta) / sin(theta).

    Accepts a SatakeAngle, a float, or a numpy array of angles. At theta = 0
    and theta = pi the limits r + 1 and (-1)^r (r + 1) are used.
    """
    if isinstance(theta, SatakeAngle):
        theta = theta.theta
    th = np.asarray(theta, dtype=np.float64)
    s = np.sin(th)
    small = np.abs(s) < 1e-15
    with np.errstate(divide='ignore', invalid='ignore'):
        value = np.sin((r + 1) * th) / np.where(small, 1.0, s)
    limit = np.where(np.cos(th) > 0, r + 1.0, (-1.0) ** r * (r + 1))
    value = np.where(small, limit, value)
    return float(value) if value.ndim == 0 else value


def chebyshev_u(r: int, x):
    """U_r(x) by the three-term recursion U_{r+1} = 2x U_r - U_{r-1}."""
    x = np.asarray(x, dtype=np.float64)
    prev, cur = np.ones_like(x), 2 * x
    if r == 0:
        return prev if prev.ndim else float(prev)
    for _ in range(r - 1):
        prev, cur = cur, 2 * x * cur - prev
    return cur if cur.ndim else float(cur)


def sym_cube_prime_power(theta, j: int):
    """
    b(p^j) for L(s, sym^3 f) from the degree-4 recursion

        b_j = e1 b_{j-1} - e2 b_{j-2} + e1 b_{j-3} - b_{j-4},

    e1 = lambda_{sym^3}(p), e2 = lambda_{sym^4}(p) + 1. Vectorised over theta.
    """
    return _sym_cube_powers(theta, j)[j]


def _sym_cube_powers(theta, j_max: int) -> list:
    e1 = sym_power_lambda(theta, 3)
    e2 = sym_power_lambda(theta, 4) + 1
    b = [np.ones_like(np.asarray(e1, dtype=np.float64))]
    for j in range(1, j_max + 1):
        val = e1 * b[j - 1]
        if j >= 2:
            val = val - e2 * b[j - 2]
        if j >= 3:
            val = val + e1 * b[j - 3]
        if j >= 4:
            val = val - b[j - 4]
        b.append(val)
    if np.ndim(b[0]) == 0:
        b = [float(v) for v in b]
    return b


def sym_power_at_primes(table: CoefficientTable, r: int,
                        limit: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """(primes, lambda_{sym^r f}(p)) for all p <= limit."""
    primes, thetas = satake_angles(table, limit)
    return primes, sym_power_lambda(thetas, r)


# ---------------------------------------------------------------------------
# Multiplicative extension
# ---------------------------------------------------------------------------

def iter_sym_cube_chunks(primes: np.ndarray, thetas: np.ndarray, N_max: int,
                         chunk: int = 1 << 22) -> Iterator[Tuple[int, np.ndarray]]:
    """
    Stream b(n) for 1 <= n <= N_max in chunks.

    Args:
        primes: All primes <= N_max
        thetas: Their Satake angles
        N_max: Last index
        chunk: Integers per chunk

    Yields:
        (start, values) with values[i] = b(start + i)
    """
    root = math.isqrt(N_max)
    n_small = int(np.searchsorted(primes, root, side='right'))
    b_prime = sym_cube_prime_power(thetas, 1)
    # prime-power tables for the small primes
    small_powers = []
    for p, th in zip(primes[:n_small], thetas[:n_small]):
        p = int(p)
        j_max = int(math.log(N_max) / math.log(p)) + 1
        small_powers.append((p, np.array(_sym_cube_powers(float(th), j_max))))
    large_primes = primes[n_small:]
    large_vals = b_prime[n_small:]

    start = 1
    while start <= N_max:
        stop = min(start + chunk, N_max + 1)  # exclusive
        values = np.ones(stop - start, dtype=np.float64)
        for p, powers in small_powers:
            first = ((start + p - 1) // p) * p
            if first >= stop:
                continue
            idx = np.arange(first, stop, p, dtype=np.int64)
            exps = np.ones(idx.size, dtype=np.int64)
            q = idx // p
            divisible = q % p == 0
            while divisible.any():
                exps += divisible
                q = np.where(divisible, q // p, q)
                divisible = divisible & (q % p == 0)
            values[idx - start] *= powers[exps]
        # each n has at most one prime factor above sqrt(N_max), to the first power
        for m in range(1, (stop - 1) // max(root + 1, 2) + 1):
            lo = int(np.searchsorted(large_primes, (start + m - 1) // m, side='left'))
            hi = int(np.searchsorted(large_primes, (stop - 1) // m, side='right'))
            if lo >= hi:
                continue
            values[large_primes[lo:hi] * m - start] *= large_vals[lo:hi]
        yield start, values
        start = stop


def sym_cube_dirichlet(table: CoefficientTable, N_max: Optional[int] = None,
                       max_terms: int = DEFAULT_MAX_TERMS) -> SymCubeCoefficients:
    """
    b(n) for n <= N_max by multiplicativity over prime powers.

    Raises:
        ResourceError: If N_max exceeds the budget
        ValueError: If the table does not cover all primes <= N_max
    """
    N_max = table.N_max if N_max is None else N_max
    _check_budget(N_max, max_terms)
    if N_max > table.N_max:
        raise ValueError(f"table covers n <= {table.N_max}, need {N_max}")
    primes, thetas = satake_angles(table, N_max)
    b = np.empty(N_max + 1, dtype=np.float64)
    b[0] = 0.0
    for start, values in iter_sym_cube_chunks(primes, thetas, N_max):
        b[start:start + values.size] = values
    logger.info(f"sym^3 coefficients for {table.spec.label}: {N_max} terms")
    return SymCubeCoefficients(table.spec.label, table.spec.weight, b)


def standard_dirichlet(table: CoefficientTable, N_max: Optional[int] = None) -> SymCubeCoefficients:
    """
    lambda_f(n) = a(n) / n^((k-1)/2) in the same container, for evaluating L(s, f)
    itself with GammaData.standard(k).
    """
    N_max = table.N_max if N_max is None else N_max
    n = np.arange(1, N_max + 1, dtype=np.float64)
    b = np.zeros(N_max + 1, dtype=np.float64)
    b[1:] = np.array(table.a[1:N_max + 1], dtype=np.float64) / n ** ((table.spec.weight - 1) / 2)
    return SymCubeCoefficients(table.spec.label, table.spec.weight, b)
