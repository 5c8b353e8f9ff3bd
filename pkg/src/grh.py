"""
Prime-sum diagnostics behind the conditional moment bounds.

Twisted prime-power coefficients, the Chandee-type upper bound for
log L(1/2), short Dirichlet polynomials over the family, character-sum
moments, Selberg-orthogonality and variance sums, and exceedance counts.
Everything is checked against computed truth at desk scale; nothing here
assumes GRH.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import quad

try:
    from .hecke import (CoefficientTable, SatakeAngle, satake_angles, sym_power_at_primes,
                        sym_power_lambda)
    from .lvalue import CentralValue, fit_global_sign
    from .primes import prime_powers_up_to, primes_up_to, segmented_primes
    from .quadchar import DiscriminantFilter, character_values, enumerate_discriminants
except ImportError:
    from hecke import (CoefficientTable, SatakeAngle, satake_angles, sym_power_at_primes,
                       sym_power_lambda)
    from lvalue import CentralValue, fit_global_sign
    from primes import prime_powers_up_to, primes_up_to, segmented_primes
    from quadchar import DiscriminantFilter, character_values, enumerate_discriminants

logger = logging.getLogger(__name__)

IDENTITY_TOL = 1e-10
ORDER_TOL = 1e-9


@dataclass(frozen=True)
class PolyConfig:
    """Dirichlet polynomial lengths 2 <= y <= x and weights l_i for the forms."""

    x: float
    y: float
    ells: Tuple[float, ...]
    tables: Tuple[CoefficientTable, ...] = field(repr=False)

    def __post_init__(self):
        if not 2 <= self.y <= self.x:
            raise ValueError(f"need 2 <= y <= x, got y={self.y}, x={self.x}")
        if len(self.ells) != len(self.tables):
            raise ValueError("one weight per form required")


@dataclass(frozen=True)
class ExceedanceStats:
    V: float
    x: float
    count: int
    sample_size: int
    sigma2: float
    eta: float
    bound: float
    capped: bool = False


@dataclass
class DiagnosticRow:
    """One executed check; hard checks decide the exit code."""

    check: str
    params: Dict[str, Any]
    lhs: float
    rhs: float
    passed: bool
    hard: bool = True

    @property
    def ratio(self) -> float:
        if self.rhs == 0:
            return float('nan')
        return self.lhs / self.rhs

    def as_record(self) -> Dict[str, Any]:
        return {
            'check': self.check,
            'param_json': json.dumps(self.params, sort_keys=True),
            'lhs': self.lhs,
            'rhs': self.rhs,
            'ratio': self.ratio,
            'pass': bool(self.passed),
        }


# ---------------------------------------------------------------------------
# Prime-power coefficients
# ---------------------------------------------------------------------------

def _theta(theta) -> float:
    return theta.theta if isinstance(theta, SatakeAngle) else theta


def twisted_lambda(theta, d: int, p: int, n: int):
    """
    Lambda_{sym^3 f x chi_d}(p^n) = (2 cos 3n theta + 2 cos n theta) chi_d(p)^n, zero if p | d.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    chi = int(character_values(d, np.array([p]))[0])
    th = np.asarray(_theta(theta), dtype=np.float64)
    value = (2 * np.cos(3 * n * th) + 2 * np.cos(n * th)) * chi ** n
    return float(value) if value.ndim == 0 else value


def hecke_relation_rhs(theta, d: int, p: int):
    """(lambda_sym6 - lambda_sym4 + lambda_sym2 - 1)(p) * [p does not divide d]."""
    if d % p == 0:
        return 0.0
    th = _theta(theta)
    return sym_power_lambda(th, 6) - sym_power_lambda(th, 4) + sym_power_lambda(th, 2) - 1


def satake_power_sum(theta, n: int) -> float:
    """alpha^3n + alpha^n + beta^n + beta^3n from complex exponentials."""
    alpha = np.exp(1j * _theta(theta))
    beta = 1 / alpha
    return float((alpha ** (3 * n) + alpha ** n + beta ** n + beta ** (3 * n)).real)


def _theta_lookup(table: CoefficientTable, limit: int) -> Dict[int, float]:
    primes, thetas = satake_angles(table, limit)
    return {int(p): float(t) for p, t in zip(primes, thetas)}


def chandee_terms(d: int, table: CoefficientTable, x: float) -> np.ndarray:
    """Terms of the prime-power sum, ordered by p then n."""
    if not x > 10:
        raise ValueError(f"x must exceed 10, got {x}")
    powers = prime_powers_up_to(x)
    thetas = _theta_lookup(table, int(x))
    log_x = math.log(x)
    terms = np.empty(len(powers))
    for i, (p, n, q) in enumerate(powers):
        lam = twisted_lambda(thetas[p], d, p, n)
        terms[i] = lam / (n * q ** (0.5 + 1 / log_x)) * math.log(x / q) / log_x
    return terms


def chandee_bound(d: int, table: CoefficientTable, x: float, reverse: bool = False) -> float:
    """
    Main term sum_{p^n <= x} Lambda(p^n) chi_d(p^n) / (n p^(n(1/2 + 1/log x))) * log(x/p^n)/log x.

    The O(log|d|/log x + 1) slack is left to the caller.
    """
    terms = chandee_terms(d, table, x)
    if reverse:
        terms = terms[::-1]
    total = 0.0
    for t in terms:
        total += t
    return total


def prime_square_sum(table: CoefficientTable, x: float, d: int) -> Tuple[float, float]:
    """
    (1/2) sum_{p <= sqrt x} (lambda_sym6 - lambda_sym4 + lambda_sym2 - 1)(p) [p not | d]
    p^(-1 - 2/log x) log(x/p^2)/log x, with its predicted main term -(1/2) log log x.
    """
    limit = int(math.isqrt(int(x)))
    primes, lam6 = sym_power_at_primes(table, 6, limit)
    if primes.size == 0:
        return 0.0, -0.5 * math.log(math.log(x))
    _, lam4 = sym_power_at_primes(table, 4, limit)
    _, lam2 = sym_power_at_primes(table, 2, limit)
    coeff = lam6 - lam4 + lam2 - 1
    coeff = np.where(d % primes == 0, 0.0, coeff)
    log_x = math.log(x)
    pf = primes.astype(np.float64)
    weights = pf ** (-1 - 2 / log_x) * np.log(x / pf ** 2) / log_x
    return 0.5 * float(np.dot(coeff, weights)), -0.5 * math.log(math.log(x))


# ---------------------------------------------------------------------------
# Dirichlet polynomials over the family
# ---------------------------------------------------------------------------

def poly_weights(cfg: PolyConfig, x_outer: Optional[float] = None,
                 lower: float = 0.0, upper: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Primes lower < p <= upper (default y) and their weights
    (sum_i l_i lambda_sym3_i(p)) p^(-(1/2 + 1/log x)) (1 - log p / log x).
    """
    x = cfg.x if x_outer is None else x_outer
    upper = cfg.y if upper is None else upper
    limit = int(math.floor(upper))
    if lower >= 2:
        start = int(math.floor(lower)) + 1
        primes = np.concatenate([np.empty(0, dtype=np.int64), *segmented_primes(start, limit)])
    else:
        primes = primes_up_to(limit)
    primes = primes[primes > lower]
    coeff = np.zeros(primes.size)
    for ell, table in zip(cfg.ells, cfg.tables):
        p_all, thetas = satake_angles(table, limit)
        lam = sym_power_lambda(thetas, 3)
        coeff += ell * lam[np.isin(p_all, primes)]
    log_x = math.log(x)
    pf = primes.astype(np.float64)
    weights = coeff * pf ** -(0.5 + 1 / log_x) * (1 - np.log(pf) / log_x)
    return primes, weights


def dirichlet_poly_P(d: int, cfg: PolyConfig, x_outer: Optional[float] = None) -> float:
    """P(d; x, y) = sum_{p <= y} (sum l_i lambda_sym3_i(p)) chi_d(p) p^(-(1/2+1/log x)) (1 - log p/log x)."""
    x = cfg.x if x_outer is None else x_outer
    if cfg.y > x:
        raise ValueError(f"y={cfg.y} exceeds x={x}")
    primes, weights = poly_weights(cfg, x)
    return float(np.dot(character_values(d, primes), weights))


def poly_values(discriminants: Sequence[int], primes: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """sum_p w_p chi_d(p) for every d, in family order."""
    out = np.empty(len(discriminants))
    for i, d in enumerate(discriminants):
        out[i] = np.dot(character_values(d, primes), weights)
    return out


def split_polynomial(d: int, cfg: PolyConfig, x: float, D: int) -> Tuple[float, float]:
    """
    P(d; x, x) = P_1 + P_2 with P_1 over p <= z = x^(1/log log D) and P_2 over z < p <= x.
    """
    z = x ** (1 / math.log(math.log(D)))
    full = PolyConfig(x, x, cfg.ells, cfg.tables)
    p1, w1 = poly_weights(full, x, upper=z)
    p2, w2 = poly_weights(full, x, lower=z, upper=x)
    return (float(np.dot(character_values(d, p1), w1)),
            float(np.dot(character_values(d, p2), w2)))


def char_moment_check(filt: DiscriminantFilter, x: float, r: int,
                      a_p: Union[Callable[[np.ndarray], np.ndarray], np.ndarray]) -> Tuple[float, float]:
    """
    lhs = sum_d (sum_{p <= x} a_p chi_d(p) / sqrt p)^(2r),
    rhs = (2r)!/(r! 2^r) D (sum_{p <= x} a_p^2 / p)^r.
    """
    if x > filt.D ** (1 / (10 * r)):
        logger.info(f"x={x:.4g} exceeds D^(1/(10r)) = {filt.D ** (1 / (10 * r)):.4g}")
    primes = primes_up_to(int(math.floor(x)))
    a = np.asarray(a_p(primes) if callable(a_p) else a_p, dtype=np.float64)
    pf = primes.astype(np.float64)
    family = enumerate_discriminants(filt)
    sums = poly_values(family, primes, a / np.sqrt(pf))
    lhs = float(np.sum(sums ** (2 * r)))
    gaussian = math.factorial(2 * r) / (math.factorial(r) * 2 ** r)
    rhs = gaussian * filt.D * float(np.sum(a * a / pf)) ** r
    return lhs, rhs


# ---------------------------------------------------------------------------
# Orthogonality and variance
# ---------------------------------------------------------------------------

def _sym3_between(table: CoefficientTable, x: float, y: float) -> Tuple[np.ndarray, np.ndarray]:
    primes, thetas = satake_angles(table, int(math.floor(x)))
    keep = primes > y
    return primes[keep], thetas[keep]


def orthogonality_sum(table_i: CoefficientTable, table_j: CoefficientTable,
                      x: float, y: float) -> float:
    """sum_{y < p <= x} lambda_sym3_i(p) lambda_sym3_j(p) / p."""
    if y >= x:
        return 0.0
    primes, th_i = _sym3_between(table_i, x, y)
    _, th_j = _sym3_between(table_j, x, y)
    return float(np.sum(sym_power_lambda(th_i, 3) * sym_power_lambda(th_j, 3) / primes))


def orthogonality_identity(table: CoefficientTable, x: float, y: float) -> Tuple[float, float]:
    """(sum lambda_sym3^2 / p, sum (1 + lambda_sym2 + lambda_sym4 + lambda_sym6) / p) over y < p <= x."""
    primes, th = _sym3_between(table, x, y)
    direct = float(np.sum(sym_power_lambda(th, 3) ** 2 / primes))
    expanded = float(np.sum((1 + sym_power_lambda(th, 2) + sym_power_lambda(th, 4)
                             + sym_power_lambda(th, 6)) / primes))
    return direct, expanded


def variance_sum(tables: Sequence[CoefficientTable], ells: Sequence[float],
                 x: float, y: float, d: int) -> Tuple[float, float]:
    """
    sum_{y < p <= x} (sum_i l_i lambda_sym3_i(p))^2 [p not | d] / p and the main
    term (sum l_i^2) log(log x / log y).
    """
    primes = None
    combined = 0.0
    for ell, table in zip(ells, tables):
        primes, th = _sym3_between(table, x, y)
        combined = combined + ell * sym_power_lambda(th, 3)
    main = sum(ell * ell for ell in ells) * math.log(math.log(x) / math.log(y))
    if primes is None or primes.size == 0:
        return 0.0, main
    coprime = d % primes != 0
    return float(np.sum(np.where(coprime, combined ** 2 / primes, 0.0))), main


# ---------------------------------------------------------------------------
# Large values
# ---------------------------------------------------------------------------

def sigma2(ells: Sequence[float], D: int) -> float:
    return sum(ell * ell for ell in ells) * math.log(math.log(D))


def eta(ells: Sequence[float], D: int, epsilon: float) -> float:
    return (-0.5 + epsilon) * sum(ells) * math.log(math.log(D))


def exceedance_bound(V: float, D: int, s2: float, epsilon: float) -> float:
    """D (exp(-(1 - 2 eps) V^2 / (2 sigma^2)) (log log D)^3 + exp(-(eps/11) V log V))."""
    loglog = math.log(math.log(D))
    gaussian = math.exp(-(1 - 2 * epsilon) * V * V / (2 * s2)) * loglog ** 3
    tail = math.exp(-(epsilon / 11) * V * math.log(V)) if V > 0 else 1.0
    return D * (gaussian + tail)


def exceedance_count(filt: DiscriminantFilter, tables: Sequence[CoefficientTable],
                     ells: Sequence[float], V: float, epsilon: float = 0.1,
                     x_max: Optional[float] = None) -> ExceedanceStats:
    """
    A(V; x) = #{d in family : P(d; x, x) > V} with x = D^(1/(eps V)), capped at x_max
    (default: the shortest coefficient table).
    """
    D = filt.D
    if x_max is None:
        x_max = float(min(t.N_max for t in tables))
    x = math.inf if V <= 0 else D ** (1 / (epsilon * V))
    capped = x > x_max
    x = min(x, x_max)
    family = enumerate_discriminants(filt)
    s2 = sigma2(ells, D)
    if x < 2:
        count = 0 if V >= 0 else len(family)
    else:
        cfg = PolyConfig(x, x, tuple(ells), tuple(tables))
        primes, weights = poly_weights(cfg, x)
        count = int(np.count_nonzero(poly_values(family, primes, weights) > V))
    return ExceedanceStats(V, x, count, len(family), s2, eta(ells, D, epsilon),
                           exceedance_bound(V, D, s2, epsilon), capped)


def large_value_count(values: Dict[int, Sequence[float]], ells: Sequence[float], V: float) -> int:
    """B(V) = #{d : log prod_i L_i(d)^l_i > V}; d with a non-positive value never counts."""
    count = 0
    for d in sorted(values):
        vals = values[d]
        if any(v <= 0 for v in vals):
            continue
        if sum(ell * math.log(v) for ell, v in zip(ells, vals)) > V:
            count += 1
    return count


def gaussian_identity_check(sigma: float) -> Tuple[float, float]:
    """(int_R exp(-x^2/(2 sigma^2) + x) dx numerically, sqrt(2 pi) sigma exp(sigma^2/2))."""
    # the integrand peaks at x = sigma^2
    center = sigma * sigma
    width = 12 * sigma
    numeric, _ = quad(lambda t: math.exp(-t * t / (2 * sigma * sigma) + t),
                      center - width, center + width, limit=200, epsabs=0, epsrel=1e-12)
    return numeric, math.sqrt(2 * math.pi) * sigma * math.exp(sigma * sigma / 2)


# ---------------------------------------------------------------------------
# Full suite
# ---------------------------------------------------------------------------

def run_diagnostics(config: Dict[str, Any], tables: Sequence[CoefficientTable],
                    central_values: Sequence[CentralValue] = (),
                    seed: int = 20251) -> List[DiagnosticRow]:
    """
    Execute every diagnostic in a fixed order.

    Args:
        config: Loaded configuration
        tables: Coefficient tables of the configured forms (covering grh.variance_x)
        central_values: Evaluated central values for the Chandee diagnostic
        seed: Seed of the random angle samples

    Returns:
        One DiagnosticRow per check
    """
    grh = config['grh']
    family = config['family']
    epsilon = float(grh['epsilon'])
    C0 = float(grh['C0'])
    D = int(grh['D'])
    residue, modulus = int(family['residue']), int(family['modulus'])
    filt = DiscriminantFilter(D, residue, modulus)
    members = enumerate_discriminants(filt)
    rng = np.random.default_rng(seed)
    rows: List[DiagnosticRow] = []

    # Hecke relation at n = 2 and the power-sum form at n <= 6
    limit = min(10_000, min(t.N_max for t in tables))
    sample = members[:50]
    for table in tables:
        primes, thetas = satake_angles(table, limit)
        worst = 0.0
        for d in sample:
            chi = character_values(d, primes).astype(np.float64)
            lhs = (2 * np.cos(6 * thetas) + 2 * np.cos(2 * thetas)) * chi ** 2
            rhs = np.where(d % primes == 0, 0.0,
                           sym_power_lambda(thetas, 6) - sym_power_lambda(thetas, 4)
                           + sym_power_lambda(thetas, 2) - 1)
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        rows.append(DiagnosticRow('hecke_relation', {'form': table.spec.label, 'p_max': limit,
                                                     'discriminants': len(sample)},
                                  worst, IDENTITY_TOL, worst < IDENTITY_TOL))

    angles = rng.uniform(0, math.pi, 1000)
    worst = 0.0
    for n in range(1, 7):
        direct = np.array([satake_power_sum(t, n) for t in angles])
        worst = max(worst, float(np.max(np.abs(
            2 * np.cos(3 * n * angles) + 2 * np.cos(n * angles) - direct))))
    rows.append(DiagnosticRow('power_sum', {'samples': 1000, 'n_max': 6},
                              worst, IDENTITY_TOL, worst < IDENTITY_TOL))

    # summation-order robustness of the prime-power sum
    for d in members[:5]:
        forward = chandee_bound(d, tables[0], min(abs(d), tables[0].N_max))
        backward = chandee_bound(d, tables[0], min(abs(d), tables[0].N_max), reverse=True)
        rows.append(DiagnosticRow('chandee_order', {'d': d, 'form': tables[0].spec.label},
                                  abs(forward - backward), ORDER_TOL,
                                  abs(forward - backward) < ORDER_TOL))

    # character-sum moments
    primes_all, thetas_all = satake_angles(tables[0])
    lam3 = dict(zip(primes_all.tolist(), sym_power_lambda(thetas_all, 3).tolist()))
    for r in grh.get('moment_orders', [1, 2]):
        x = D ** (1 / (10 * r))
        lhs, rhs = char_moment_check(filt, x, r, lambda p: np.array([lam3[int(q)] for q in p]))
        rows.append(DiagnosticRow('char_moment', {'D': D, 'r': r, 'x': x,
                                                  'form': tables[0].spec.label},
                                  lhs, rhs, lhs <= 2 * rhs))

    # orthogonality and variance
    x_var, y_var = float(grh['variance_x']), float(grh['variance_y'])
    for table in tables:
        direct, expanded = orthogonality_identity(table, x_var, y_var)
        rows.append(DiagnosticRow('orthogonality_identity', {'form': table.spec.label,
                                                             'x': x_var, 'y': y_var},
                                  direct, expanded, abs(direct - expanded) < IDENTITY_TOL))
    if len(tables) >= 2:
        value = orthogonality_sum(tables[0], tables[1], x_var, y_var)
        rows.append(DiagnosticRow('orthogonality_cross',
                                  {'forms': [t.spec.label for t in tables[:2]], 'x': x_var, 'y': y_var},
                                  abs(value), 2.0, abs(value) < 2.0))
    ells = [1.0] * len(tables)
    d0 = members[0] if members else -7
    value, main = variance_sum(tables, ells, x_var, y_var, d0)
    rows.append(DiagnosticRow('variance_sum', {'ells': ells, 'x': x_var, 'y': y_var, 'd': d0},
                              value, main, abs(value - main) < 1.5))

    for table in tables:
        value, main = prime_square_sum(table, x_var, d0)
        rows.append(DiagnosticRow('prime_square_sum', {'form': table.spec.label, 'x': x_var, 'd': d0},
                                  value, main, True, hard=False))

    # Gaussian identity used to integrate the large-value bound
    for s in (0.5, 1.0, 2.0):
        numeric, closed = gaussian_identity_check(s)
        rows.append(DiagnosticRow('gaussian_identity', {'sigma': s}, numeric, closed,
                                  abs(numeric - closed) < 1e-8 * closed))

    # exceedance counts
    ells_exc = [1.0] * len(tables)
    sigma = math.sqrt(sigma2(ells_exc, D))
    for t in grh.get('exceedance_t', [1, 2, 3]):
        stats = exceedance_count(filt, tables, ells_exc, sigma * t, epsilon)
        rows.append(DiagnosticRow('exceedance', {'D': D, 't': t, 'V': stats.V, 'x': stats.x,
                                                 'capped': stats.capped, 'eps': epsilon},
                                  stats.count, stats.bound, stats.count <= stats.bound))
    stats = exceedance_count(filt, tables, ells_exc, 0.0, epsilon)
    rows.append(DiagnosticRow('exceedance_sign_balance', {'D': D, 'x': stats.x},
                              stats.count, stats.sample_size, True, hard=False))

    rows.extend(_central_value_rows(central_values, tables, C0, epsilon))
    return rows


def _central_value_rows(central_values: Sequence[CentralValue], tables: Sequence[CoefficientTable],
                        C0: float, epsilon: float) -> List[DiagnosticRow]:
    rows: List[DiagnosticRow] = []
    by_label = {t.spec.label: t for t in tables}
    for label, table in by_label.items():
        records = [cv for cv in central_values if cv.form_label == label]
        if not records:
            continue
        eps_g, mismatches = fit_global_sign([(cv.d, cv.epsilon) for cv in records])
        rows.append(DiagnosticRow('global_sign', {'form': label, 'epsilon_g': eps_g,
                                                  'sample': len(records)},
                                  mismatches, 0, mismatches == 0, hard=False))
        positive = [cv for cv in records if cv.epsilon == 1 and cv.L_half > 0]
        violations = 0
        worst = -math.inf
        for cv in positive:
            x = float(abs(cv.d))
            if x <= 10:
                continue
            bound = chandee_bound(cv.d, table, min(x, table.N_max)) \
                + C0 * (math.log(abs(cv.d)) / math.log(x) + 1)
            gap = math.log(cv.L_half) - bound
            worst = max(worst, gap)
            violations += gap > 0
        rows.append(DiagnosticRow('chandee_bound', {'form': label, 'C0': C0,
                                                    'evaluated': len(records),
                                                    'positive': len(positive),
                                                    'worst_gap': worst if positive else None},
                                  violations, 0, violations == 0))
        vanishing = [cv for cv in records if cv.epsilon == -1]
        if vanishing:
            worst_residual = max((cv.odd_residual / cv.scale for cv in vanishing if cv.scale > 0),
                                 default=0.0)
            rows.append(DiagnosticRow('vanishing_residual', {'form': label, 'count': len(vanishing)},
                                      worst_residual, 1e-5, worst_residual < 1e-5))
        values = {cv.d: [cv.L_half] for cv in positive}
        for t in (1, 2):
            rows.append(DiagnosticRow('large_values', {'form': label, 'V': float(t)},
                                      large_value_count(values, [1.0], float(t)), len(records),
                                      True, hard=False))
    return rows
