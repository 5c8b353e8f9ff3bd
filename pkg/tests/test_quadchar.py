"""
Tests for quadratic characters, the discriminant family and L(1, chi_d).
"""

import sys
import math
from pathlib import Path

import numpy as np
import pytest

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from src import quadchar
from src.quadchar import DiscriminantFilter
from src.primes import primes_up_to


def euler_legendre(a, p):
    r = pow(a % p, (p - 1) // 2, p)
    return -1 if r == p - 1 else r


def test_kronecker_examples():
    """Test small Kronecker symbols."""
    assert quadchar.kronecker(-4, 3) == -1
    assert quadchar.kronecker(-3, 3) == 0
    assert quadchar.kronecker(-7, 2) == 1
    assert quadchar.kronecker(5, 2) == -1
    assert quadchar.kronecker(-7, 11) == 1
    assert quadchar.kronecker(-4, 2) == 0
    assert quadchar.kronecker(-3, 1) == 1
    with pytest.raises(ValueError):
        quadchar.kronecker(-3, 0)


def test_kronecker_matches_euler_criterion():
    """Test (d/p) against Euler's criterion for odd primes."""
    for p in primes_up_to(200)[1:]:
        p = int(p)
        for d in (-3, -4, -7, -8, -15, -23, -163):
            assert quadchar.kronecker(d, p) == euler_legendre(d, p)


def test_kronecker_is_completely_multiplicative():
    """Test (d/mn) = (d/m)(d/n)."""
    for d in (-7, -20, -23):
        for m in range(1, 30):
            for n in range(1, 30):
                assert quadchar.kronecker(d, m * n) == quadchar.kronecker(d, m) * quadchar.kronecker(d, n)


def test_character_table_matches_scalar():
    """Test the vectorised table against the scalar symbol."""
    for d in (-3, -4, -7, -8, -15, -84, -231):
        table = quadchar.character_table(d)
        n = np.arange(1, 3 * abs(d))
        scalar = [quadchar.kronecker(d, int(k)) for k in n]
        assert list(quadchar.character_values(d, n)) == scalar
        assert not table.flags.writeable


def test_fundamental_discriminants():
    """Test both branches of the fundamental-discriminant test."""
    assert quadchar.is_fundamental_discriminant(-3)
    assert quadchar.is_fundamental_discriminant(-4)
    assert quadchar.is_fundamental_discriminant(-8)
    assert quadchar.is_fundamental_discriminant(-15)
    assert not quadchar.is_fundamental_discriminant(-12)
    assert not quadchar.is_fundamental_discriminant(-16)
    assert not quadchar.is_fundamental_discriminant(-27)
    assert not quadchar.is_fundamental_discriminant(1)


@pytest.mark.parametrize("lower,upper,residue,modulus,expected", [
    (5, 20, 1, 4, [-7, -11, -15, -19]),
    (5, 20, 5, 8, [-11, -19]),
    (3, 5, 1, 8, []),
])
def test_family_examples(lower, upper, residue, modulus, expected):
    """Test small families."""
    filt = DiscriminantFilter(lower, residue, modulus, upper=upper)
    assert quadchar.enumerate_discriminants(filt) == expected
    assert quadchar.family_size(filt) == len(expected)


def test_family_members_are_fundamental():
    """Test that every member of a dyadic block is fundamental and in range."""
    filt = DiscriminantFilter(250, 1, 8)
    family = quadchar.enumerate_discriminants(filt)
    assert family == sorted(family, reverse=True)
    brute = [-m for m in range(250, 501) if m % 8 == 7 and quadchar.is_squarefree(m)]
    assert family == brute
    assert all(quadchar.is_fundamental_discriminant(d) and filt.contains(d) for d in family)


def test_invalid_filters():
    """Test filter validation."""
    with pytest.raises(ValueError):
        DiscriminantFilter(2)
    with pytest.raises(ValueError):
        DiscriminantFilter(10, residue=3, modulus=8)
    with pytest.raises(ValueError):
        DiscriminantFilter(10, residue=1, modulus=6)


@pytest.mark.parametrize("d,h", [(-3, 1), (-4, 1), (-7, 1), (-8, 1), (-15, 2), (-20, 2),
                                 (-23, 3), (-47, 5), (-71, 7), (-163, 1), (-231, 12)])
def test_class_numbers(d, h):
    """Test class numbers by reduced forms."""
    assert quadchar.class_number(d) == h


def test_l1_special_values():
    """Test L(1, chi_d) at d = -3 and -4."""
    assert math.isclose(quadchar.dirichlet_L1(-4), math.pi / 4, rel_tol=1e-12)
    assert math.isclose(quadchar.dirichlet_L1(-3), math.pi / (3 * math.sqrt(3)), rel_tol=1e-12)


def test_l1_formula_matches_series_on_a_range():
    """Test class-number formula against the series for every fundamental -2000 <= d < 0."""
    for d in range(-2000, -2):
        if quadchar.is_fundamental_discriminant(d):
            value = quadchar.dirichlet_L1(d)
            assert value > 0


def test_l1_rejects_bad_input():
    """Test argument checks."""
    with pytest.raises(ValueError):
        quadchar.dirichlet_L1(-12)
    with pytest.raises(ValueError):
        quadchar.dirichlet_L1(5)
