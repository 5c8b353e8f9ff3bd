"""
Tests for the prime-sum diagnostics.
"""

import sys
import math
from pathlib import Path

import numpy as np
import pytest

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from src import grh, hecke
from src.hecke import EigenformSpec
from src.lvalue import CentralValue
from src.primes import primes_up_to
from src.quadchar import DiscriminantFilter, enumerate_discriminants


@pytest.fixture(scope='module')
def tables():
    return (hecke.delta_coefficients(5000),
            hecke.builtin_coefficients(EigenformSpec(16), 5000))


def test_twisted_lambda_hecke_relation():
    """Test Lambda(p^2) against the sym^6, sym^4, sym^2 combination."""
    rng = np.random.default_rng(3)
    for d in (-7, -15, -23):
        for p in (2, 3, 5, 7, 11, 13):
            for theta in rng.uniform(0, math.pi, 20):
                lhs = grh.twisted_lambda(theta, d, p, 2)
                assert abs(lhs - grh.hecke_relation_rhs(theta, d, p)) < 1e-10


def test_twisted_lambda_power_sums():
    """Test the cosine form against complex exponentials for n <= 6."""
    rng = np.random.default_rng(11)
    for theta in rng.uniform(0, math.pi, 200):
        for n in range(1, 7):
            assert abs(grh.twisted_lambda(theta, -7, 2, n) - grh.satake_power_sum(theta, n)) < 1e-10


def test_twisted_lambda_vanishes_at_ramified_primes():
    """Test Lambda = 0 when p | d."""
    assert grh.twisted_lambda(0.7, -7, 7, 1) == 0.0
    assert grh.twisted_lambda(0.7, -15, 3, 2) == 0.0
    with pytest.raises(ValueError):
        grh.twisted_lambda(0.7, -7, 2, 0)


def test_chandee_bound_order_independent(tables):
    """Test forward and reverse accumulation agree."""
    for d in (-7, -199, -1999):
        forward = grh.chandee_bound(d, tables[0], 2000)
        backward = grh.chandee_bound(d, tables[0], 2000, reverse=True)
        assert abs(forward - backward) < 1e-9
    with pytest.raises(ValueError):
        grh.chandee_bound(-7, tables[0], 5)


def test_orthogonality_identity(tables):
    """Test lambda_sym3^2 = 1 + lambda_sym2 + lambda_sym4 + lambda_sym6 summed over primes."""
    for table in tables:
        direct, expanded = grh.orthogonality_identity(table, 5000, 10)
        assert abs(direct - expanded) < 1e-10


def test_orthogonality_sum(tables):
    """Test the cross sum is symmetric and the diagonal matches the identity."""
    cross = grh.orthogonality_sum(tables[0], tables[1], 5000, 10)
    assert abs(cross) < 2
    direct, _ = grh.orthogonality_identity(tables[0], 5000, 10)
    assert grh.orthogonality_sum(tables[0], tables[0], 5000, 10) == pytest.approx(direct, rel=1e-12)
    assert cross == pytest.approx(grh.orthogonality_sum(tables[1], tables[0], 5000, 10), abs=1e-12)
    assert grh.orthogonality_sum(tables[0], tables[1], 10, 10) == 0.0


def test_variance_sum(tables):
    """Test the variance sum and its main term."""
    value, main = grh.variance_sum(tables, [1.0, 1.0], 5000, 10, -7)
    assert main == pytest.approx(2 * math.log(math.log(5000) / math.log(10)))
    assert value > 0

    # a single form drops only the p = 11 term from the diagonal sum
    single, _ = grh.variance_sum(tables[:1], [1.0], 5000, 10, -11)
    direct, _ = grh.orthogonality_identity(tables[0], 5000, 10)
    lam11 = hecke.sym_power_lambda(hecke.satake_angle(tables[0], 11), 3)
    assert single + lam11 ** 2 / 11 == pytest.approx(direct, rel=1e-12)


def test_prime_square_sum(tables):
    """Test the prime-square sum returns its predicted main term alongside."""
    value, main = grh.prime_square_sum(tables[0], 4000, -7)
    assert main == pytest.approx(-0.5 * math.log(math.log(4000)))
    assert math.isfinite(value)


def test_split_polynomial(tables):
    """Test P1 + P2 = P(d; x, x)."""
    cfg = grh.PolyConfig(1000, 1000, (0.5, 0.5), tables)
    for d in (-7, -23, -311):
        p1, p2 = grh.split_polynomial(d, cfg, 1000, 10000)
        assert p1 + p2 == pytest.approx(grh.dirichlet_poly_P(d, cfg), abs=1e-12)


def test_poly_config_validation(tables):
    """Test 2 <= y <= x."""
    with pytest.raises(ValueError):
        grh.PolyConfig(10, 20, (1.0,), tables[:1])
    with pytest.raises(ValueError):
        grh.PolyConfig(10, 5, (1.0, 1.0), tables[:1])


def test_char_moment_first_order():
    """Test the r = 1 character moment with a_p = 1."""
    filt = DiscriminantFilter(500, 1, 8)
    lhs, rhs = grh.char_moment_check(filt, 20, 1, lambda p: np.ones(len(p)))
    primes = primes_up_to(20)
    assert rhs == pytest.approx(500 * float(np.sum(1.0 / primes)))
    assert lhs > 0
    family = enumerate_discriminants(filt)
    assert lhs / len(family) < 3 * rhs / 500


def test_gaussian_identity():
    """Test int exp(-x^2/2s^2 + x) dx against the closed form."""
    for sigma in (0.5, 1.0, 2.0):
        numeric, closed = grh.gaussian_identity_check(sigma)
        assert abs(numeric - closed) < 1e-8 * closed


def test_exceedance(tables):
    """Test A(V) bookkeeping."""
    filt = DiscriminantFilter(500, 1, 8)
    huge = grh.exceedance_count(filt, tables, [1.0, 1.0], 1000.0, 0.1)
    assert huge.count == 0
    assert huge.x < 2
    small = grh.exceedance_count(filt, tables, [1.0, 1.0], 0.5, 0.1)
    assert small.capped
    assert small.x == 5000
    assert 0 <= small.count <= small.sample_size
    assert small.count <= small.bound
    assert small.sigma2 == pytest.approx(2 * math.log(math.log(500)))


def test_large_value_count():
    """Test B(V) with vanishing values."""
    values = {-7: [math.e ** 2], -15: [0.0], -23: [math.e ** 0.5]}
    assert grh.large_value_count(values, [1.0], 1.0) == 1
    assert grh.large_value_count(values, [0.25], 0.4) == 1
    assert grh.large_value_count(values, [1.0], -10.0) == 2


def test_diagnostic_row_record():
    """Test CSV record layout."""
    row = grh.DiagnosticRow('check', {'b': 2, 'a': 1}, 1.0, 4.0, True)
    record = row.as_record()
    assert list(record) == ['check', 'param_json', 'lhs', 'rhs', 'ratio', 'pass']
    assert record['param_json'] == '{"a": 1, "b": 2}'
    assert record['ratio'] == 0.25
    assert math.isnan(grh.DiagnosticRow('c', {}, 1.0, 0.0, True).ratio)


def test_central_value_rows_vanishing_family(tables):
    """Test the Chandee rows when every twist vanishes."""
    values = [CentralValue(d, "1.12.a.a", -1, 0.0, 1.0, 100, 10.0, 1e-9)
              for d in (-15, -23, -31)]
    rows = grh._central_value_rows(values, tables[:1], 20.0, 0.1)
    by_check = {row.check: row for row in rows}
    assert by_check['global_sign'].params['epsilon_g'] == 1
    assert by_check['chandee_bound'].params['positive'] == 0
    assert by_check['chandee_bound'].passed
    assert by_check['vanishing_residual'].passed
