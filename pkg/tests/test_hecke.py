"""
Tests for eigenform coefficients and symmetric-cube local data.
"""

import sys
import math
from pathlib import Path

import numpy as np
import pytest

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from src import hecke
from src.errors import DeligneViolationError, IntegrityError, ResourceError, UnsupportedWeightError
from src.hecke import CoefficientTable, EigenformSpec
from src.primes import primes_up_to, segmented_primes, smallest_prime_factor


def naive_multiply(f, g, n):
    out = [0] * n
    for i, a in enumerate(f[:n]):
        if a:
            for j, b in enumerate(g[:n - i]):
                out[i + j] += a * b
    return out


def naive_delta(n):
    """q * prod (1 - q^m)^24 by repeated schoolbook products."""
    series = [1] + [0] * (n - 1)
    for m in range(1, n):
        for _ in range(24):
            # multiply by (1 - q^m) in place, highest degree first
            for i in range(n - 1, m - 1, -1):
                series[i] -= series[i - m]
    return series


@pytest.fixture(scope='module')
def delta():
    return hecke.delta_coefficients(3000)


@pytest.fixture(scope='module')
def weight16():
    return hecke.builtin_coefficients(EigenformSpec(16), 3000)


def test_primes():
    """Test the sieves against each other."""
    primes = primes_up_to(1000)
    assert list(primes[:10]) == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert len(primes) == 168
    segmented = np.concatenate(list(segmented_primes(2, 1000, segment=97)))
    assert np.array_equal(segmented, primes)
    spf = smallest_prime_factor(100)
    assert spf[97] == 97 and spf[91] == 7 and spf[64] == 2


def test_known_tau_values(delta):
    """Test Ramanujan tau at small n."""
    assert delta[1] == 1
    assert delta[2] == -24
    assert delta[3] == 252
    assert delta[5] == 4830
    assert delta[7] == -16744
    assert delta[11] == 534612


def test_weight16_values(weight16):
    """Test the weight-16 eigenform at small n."""
    assert weight16[1] == 1
    assert weight16[2] == 216
    assert weight16[3] == -3348


def test_delta_against_naive_product(delta):
    """Test tau(n), n <= 100, against schoolbook q-expansion multiplication."""
    expected = naive_delta(100)
    assert list(delta.a[1:101]) == expected


def test_weight16_against_naive_product(delta, weight16):
    """Test Delta * E_4 for n <= 100."""
    e4 = hecke.eisenstein_coefficients(4, 100)
    assert e4[:3] == [1, 240, 2160]
    expected = naive_multiply(list(delta.a[1:101]), e4, 100)
    assert list(weight16.a[1:101]) == expected


def test_series_multiply_signs():
    """Test Kronecker substitution with mixed signs and large entries."""
    f = [3, -5, 0, 2 ** 70, -1]
    g = [-7, 1, 2 ** 65, 0, 4]
    assert hecke.series_multiply(f, g, 5) == naive_multiply(f, g, 5)


def test_divisor_sigma():
    """Test sigma_j against direct divisor sums."""
    sig = hecke.divisor_sigma(3, 60)
    for n in range(1, 60):
        assert sig[n] == sum(d ** 3 for d in range(1, n + 1) if n % d == 0)


@pytest.mark.parametrize("weight", [18, 20, 22, 26])
def test_builtin_weights_pass_validation(weight):
    """Test every built-in weight satisfies the exact Hecke relations."""
    table = hecke.builtin_coefficients(EigenformSpec(weight), 500)
    hecke.validate_table(table)


def test_validate_table_detects_corruption(delta):
    """Test that a single wrong coefficient is caught."""
    a = list(delta.truncate(100).a)
    a[4] += 1
    with pytest.raises(IntegrityError):
        hecke.validate_table(CoefficientTable(delta.spec, tuple(a)))
    a = list(delta.truncate(100).a)
    a[6] += 1
    with pytest.raises(IntegrityError):
        hecke.validate_table(CoefficientTable(delta.spec, tuple(a)))


def test_unsupported_weights():
    """Test weight validation."""
    with pytest.raises(UnsupportedWeightError):
        EigenformSpec(14)
    with pytest.raises(UnsupportedWeightError):
        hecke.builtin_coefficients(EigenformSpec(24), 10)


def test_resource_budget():
    """Test the term budget."""
    with pytest.raises(ResourceError):
        hecke.delta_coefficients(1000, max_terms=100)


def test_satake_angles_in_range(delta):
    """Test theta_p in [0, pi] and 2 cos theta_p = lambda(p)."""
    primes, thetas = hecke.satake_angles(delta, 3000)
    assert np.all((thetas >= 0) & (thetas <= math.pi))
    lam = np.array([delta.normalized(int(p)) for p in primes])
    assert np.allclose(2 * np.cos(thetas), lam, atol=1e-12)
    angle = hecke.satake_angle(delta, 2)
    assert angle.p == 2
    assert math.isclose(2 * math.cos(angle.theta), -24 / 2 ** 5.5, rel_tol=1e-12)


def test_deligne_violation():
    """Test that |lambda(p)| > 2 is rejected."""
    bad = CoefficientTable(EigenformSpec(12), (0, 1, 2 ** 7, 0))
    with pytest.raises(DeligneViolationError):
        hecke.satake_angle(bad, 2)


def test_chebyshev_agreement():
    """Test sin((r+1)theta)/sin(theta) against the U_r recursion."""
    rng = np.random.default_rng(7)
    thetas = rng.uniform(0, math.pi, 1000)
    for r in range(7):
        assert np.max(np.abs(hecke.sym_power_lambda(thetas, r)
                             - hecke.chebyshev_u(r, np.cos(thetas)))) < 1e-10
    assert hecke.sym_power_lambda(0.0, 3) == 4.0
    assert hecke.sym_power_lambda(math.pi, 3) == -4.0


def test_sym_cube_prime_powers_match_parameters():
    """Test b(p^j) against the complete homogeneous sums of {a^3, a, b, b^3}."""
    for theta in (0.3, 1.1, 2.5):
        alpha = complex(math.cos(theta), math.sin(theta))
        params = [alpha ** 3, alpha, 1 / alpha, 1 / alpha ** 3]
        series = np.zeros(7, dtype=complex)
        series[0] = 1
        for gamma in params:
            geometric = np.array([gamma ** j for j in range(7)])
            series = np.convolve(series, geometric)[:7]
        for j in range(7):
            assert abs(hecke.sym_cube_prime_power(theta, j) - series[j].real) < 1e-10


def test_sym_cube_dirichlet_multiplicative(delta):
    """Test b(mn) = b(m) b(n) for coprime m, n and b(p) = U_3."""
    sym = hecke.sym_cube_dirichlet(delta, 3000)
    b = sym.b
    assert b[1] == 1.0
    for p in (2, 3, 5, 53, 997, 2999):
        assert abs(b[p] - hecke.sym_power_lambda(hecke.satake_angle(delta, p), 3)) < 1e-12
    for m, n in [(4, 9), (8, 25), (7, 11), (13, 229), (16, 187)]:
        assert math.gcd(m, n) == 1
        assert abs(b[m * n] - b[m] * b[n]) < 1e-9 * max(1.0, abs(b[m * n]))
    assert abs(b[8] - hecke.sym_cube_prime_power(hecke.satake_angle(delta, 2), 3)) < 1e-12


def test_chunked_fill_matches_single_chunk(delta):
    """Test that chunk boundaries do not change b(n)."""
    primes, thetas = hecke.satake_angles(delta, 3000)
    whole = np.concatenate([v for _, v in hecke.iter_sym_cube_chunks(primes, thetas, 3000)])
    pieces = np.concatenate([v for _, v in hecke.iter_sym_cube_chunks(primes, thetas, 3000, chunk=257)])
    assert np.array_equal(whole, pieces)


def test_standard_dirichlet(delta):
    """Test the normalized standard coefficients."""
    std = hecke.standard_dirichlet(delta, 10)
    assert std.N_max == 10
    assert math.isclose(std.b[2], -24 / 2 ** 5.5)
