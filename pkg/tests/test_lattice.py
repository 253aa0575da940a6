import numpy as np
import pytest
from fire import Fire

from korobov_density.exceptions import ConfigurationError, DomainError
from korobov_density.kernels import ProductWeights
from korobov_density.lattice import (
    LatticeRule,
    _cbc_main,
    cbc_construct,
    cbc_criterion,
    is_prime,
    next_prime,
    read_generating_vector,
    write_generating_vector,
)


def test_primes():
    """API Tests"""
    assert [n for n in range(20) if is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19]
    assert next_prime(12) == 13
    assert next_prime(13) == 13
    assert next_prime(0.5) == 2


def test_rule_validation():
    with pytest.raises(DomainError, match="N must be prime"):
        LatticeRule(6, (1,))
    with pytest.raises(DomainError):
        LatticeRule(5, (0, 1))
    with pytest.raises(DomainError):
        LatticeRule(5, (5,))


def test_points():
    """API Tests"""
    rule = LatticeRule(5, (1, 2))
    pts = rule.points()
    assert pts.shape == (5, 2)
    np.testing.assert_allclose(pts[0], [0.2, 0.4])
    assert np.array_equal(pts[-1], [0.0, 0.0])
    np.testing.assert_allclose(rule.lag_points()[1], pts[0])


def test_lag_index_matches_differences():
    rule = LatticeRule(7, (1, 3))
    pts = rule.points()
    lags = rule.lag_points()
    idx = rule.lag_index()
    for j in range(7):
        for k in range(7):
            np.testing.assert_allclose(np.mod(pts[k] - pts[j], 1.0), lags[idx[j, k]], atol=1e-15)


def test_cbc_one_dim():
    assert cbc_construct(5, 1, 2, ProductWeights.power_law(1, 2)) == (1,)


def test_cbc_two_dim():
    assert cbc_construct(5, 2, 2, ProductWeights.power_law(2, 2)) == (1, 2)


@pytest.mark.parametrize("alpha", [2, 4])
def test_cbc_matches_brute_force_step(alpha):
    """Every greedy step attains the exhaustive minimum"""
    n, w = 13, ProductWeights.power_law(3, alpha)
    z = cbc_construct(n, 3, alpha, w)
    crit = [cbc_criterion(n, (z[0], z[1], c), alpha, w) for c in range(1, n)]
    assert z[2] == 1 + int(np.argmin(crit))
    assert min(crit) == pytest.approx(cbc_criterion(n, z, alpha, w), rel=1e-12)


def test_cbc_ties_prefer_smallest():
    """API Tests"""
    z = cbc_construct(11, 4, 2, ProductWeights.power_law(4, 2))
    assert all(v <= 5 for v in z[1:])


def test_criterion_positive():
    w = ProductWeights.power_law(2, 2)
    assert cbc_criterion(11, (1, 3), 2, w) > 0


def test_cbc_errors():
    w = ProductWeights.power_law(2, 2)
    with pytest.raises(ConfigurationError):
        cbc_construct(11, 2, 3, w)
    with pytest.raises(DomainError):
        cbc_construct(12, 2, 2, w)
    with pytest.raises(DomainError):
        cbc_construct(11, 3, 2, w)


def test_generating_vector_file(tmp_path):
    """API Tests"""
    rule = LatticeRule(11, (1, 3, 5))
    path = write_generating_vector(tmp_path / "z.txt", rule)
    assert path.read_text() == "11 3\n1 3 5\n"
    assert read_generating_vector(path) == rule
    bad = tmp_path / "bad.txt"
    bad.write_text("11 3\n1 3\n")
    with pytest.raises(DomainError):
        read_generating_vector(bad)


def test_cbc_entry_point(capsys):
    """CLI Tests"""
    z = Fire(_cbc_main, command=["11", "3", "--alpha", "4"])
    assert tuple(z) == cbc_construct(11, 3, 4, ProductWeights.power_law(3, 4))
    assert str(z[1]) in capsys.readouterr().out
