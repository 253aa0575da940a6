import numpy as np
import pytest

from korobov_density.estimator import (
    DensityEstimator,
    GramSystem,
    assemble_rhs,
    assemble_system,
    fit,
    fit_exact,
    fit_rhs,
    solve_circulant,
)
from korobov_density.exceptions import DomainError, SingularSystemError
from korobov_density.kernels import KorobovKernel, ProductWeights, kernel_mean_embedding_fourier
from korobov_density.lattice import LatticeRule
from korobov_density.sampling import TestDensity


@pytest.fixture
def sample2():
    return np.random.default_rng(7).random((300, 2))


def test_system_matches_dense_gram(rule11, kernel2):
    """API Tests"""
    system = assemble_system(rule11, kernel2, 0.1)
    pts = rule11.points()
    dense = kernel2.l2_evaluate(pts[:, None], pts[None, :]) + 0.1 * kernel2(pts[:, None], pts[None, :])
    np.testing.assert_allclose(system.dense(), dense, rtol=1e-12)
    np.testing.assert_allclose(system.first_row[1:], system.first_row[:0:-1], rtol=1e-13)
    assert np.all(system.eigenvalues > 0)


def test_lambda_must_be_positive(rule11, kernel2):
    with pytest.raises(DomainError):
        assemble_system(rule11, kernel2, 0.0)


def test_solve_matches_dense(rule11, kernel2):
    """API Tests"""
    system = assemble_system(rule11, kernel2, 0.05)
    b = np.random.default_rng(0).random(11)
    c = solve_circulant(system, b)
    np.testing.assert_allclose(c, np.linalg.solve(system.dense(), b), rtol=1e-9)
    np.testing.assert_allclose(system.matvec(c), b, rtol=1e-10)


def test_null_space_is_thresholded():
    """Zero eigenvalues drop out of the solution"""
    rule = LatticeRule(5, (1,))
    kernel = KorobovKernel(2, ProductWeights((1.0,)))
    system = GramSystem(np.ones(5), 1.0, rule, kernel)
    c = solve_circulant(system, np.eye(5)[0])
    np.testing.assert_allclose(c, np.full(5, 1 / 25))


def test_singular_system():
    rule = LatticeRule(5, (1,))
    kernel = KorobovKernel(2, ProductWeights((1.0,)))
    with pytest.raises(SingularSystemError):
        solve_circulant(GramSystem(np.zeros(5), 1.0, rule, kernel), np.ones(5))


def test_rhs_matches_brute_force(rule11, kernel2, sample2):
    """Circulant right-hand side against the direct double sum"""
    b = assemble_rhs(rule11, kernel2, sample2)
    pts = rule11.points()
    expected = [np.mean([kernel2(x, y) for y in sample2]) for x in pts]
    np.testing.assert_allclose(b, expected, rtol=1e-12)


def test_rhs_errors(rule11, kernel2):
    with pytest.raises(DomainError):
        assemble_rhs(rule11, kernel2, np.empty((0, 2)))
    with pytest.raises(DomainError):
        assemble_rhs(rule11, kernel2, np.zeros((4, 3)))


def test_uniform_target_aliasing(rule11, kernel2):
    """Exact fit of f = 1 sees the aliased frequencies"""
    lam = 0.1
    emb = kernel_mean_embedding_fourier(kernel2, {(0, 0): 1.0})
    est = fit_exact(rule11, kernel2, lam, emb)
    row = assemble_system(rule11, kernel2, lam).first_row
    np.testing.assert_allclose(est.coefficients, 1 / row.sum(), rtol=1e-12)
    assert est.integral() == pytest.approx(11 / row.sum(), rel=1e-12)


def test_uniform_target_small_weights():
    lam = 0.25
    kernel = KorobovKernel(2, ProductWeights((1e-12, 1e-12)))
    rule = LatticeRule(7, (1, 3))
    est = fit_exact(rule, kernel, lam, kernel_mean_embedding_fourier(kernel, {(0, 0): 1.0}))
    assert est.integral() == pytest.approx(1 / (1 + lam), rel=1e-9)
    np.testing.assert_allclose(est(np.random.default_rng(1).random((5, 2))), 1 / (1 + lam), rtol=1e-9)


def test_galerkin_residual(rule11, kernel2, sample2):
    b = assemble_rhs(rule11, kernel2, sample2)
    est = fit_rhs(rule11, kernel2, 0.01, b)
    assert est.galerkin_residual(b) < 1e-10


def test_node_and_grid_evaluation(rule11, kernel2, sample2):
    est = fit(rule11, kernel2, 0.1, sample2)
    pts = rule11.points()
    np.testing.assert_allclose(est.evaluate_at_nodes(), est(pts), rtol=1e-11)
    shifts = np.array([[0.5, 0.5], [0.1, 0.7], [0.93, 0.02]])
    grid = est.evaluate_shifted_grid(shifts)
    assert grid.shape == (3, 11)
    for ell, p in enumerate(shifts):
        np.testing.assert_allclose(grid[ell], est(np.mod(pts + p, 1.0)), rtol=1e-11)


def test_integral_is_coefficient_sum(rule7, kernel1):
    """API Tests"""
    est = fit(rule7, kernel1, 0.1, np.random.default_rng(5).random((200, 1)))
    y = (np.arange(4096) / 4096)[:, None]
    assert est(y).mean() == pytest.approx(est.integral(), abs=1e-6)


def test_norms(rule11, kernel2, sample2):
    est = fit(rule11, kernel2, 0.1, sample2)
    pts = rule11.points()
    c = est.coefficients
    gram = kernel2(pts[:, None], pts[None, :])
    l2_gram = kernel2.l2_evaluate(pts[:, None], pts[None, :])
    assert est.rkhs_norm_squared() == pytest.approx(c @ gram @ c, rel=1e-10)
    assert est.l2_norm_squared() == pytest.approx(c @ l2_gram @ c, rel=1e-10)


def test_coefficient_count(rule11, kernel2):
    with pytest.raises(DomainError):
        DensityEstimator(rule11, kernel2, 0.1, np.ones(5))


def test_save_load(tmp_path, rule11, kernel2, sample2):
    """API Tests"""
    est = fit(rule11, kernel2, 0.01, sample2)
    loaded = DensityEstimator.load(est.save(tmp_path / "est.txt"))
    assert np.array_equal(loaded.coefficients, est.coefficients)
    assert loaded.rule == est.rule and loaded.kernel == est.kernel and loaded.lam == est.lam
    x = sample2[:10]
    assert np.array_equal(loaded(x), est(x))


def test_load_malformed(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("d 2\nN 11\n")
    with pytest.raises(DomainError):
        DensityEstimator.load(path)


@pytest.mark.parametrize("d", [1, 2, 6])
@pytest.mark.parametrize("n", [2, 3, 5, 7, 11])
def test_circulant_solve_matches_dense_solve(n, d):
    """FFT solve against a dense symmetric solve over random lambdas and samples"""
    rng = np.random.default_rng(100 * n + d)
    kernel = KorobovKernel(2, ProductWeights.power_law(d, 2))
    for _ in range(20):
        rule = LatticeRule(n, tuple(rng.integers(1, n, size=d)))
        lam = 10 ** rng.uniform(-2, 0)
        sample = rng.random((int(rng.integers(1, 200)), d))
        system = assemble_system(rule, kernel, lam)
        b = assemble_rhs(rule, kernel, sample)
        dense = np.linalg.solve(system.dense(), b)
        c = solve_circulant(system, b)
        assert np.linalg.norm(c - dense) <= 1e-10 * np.linalg.norm(dense)


def test_rkhs_norm_decreases_with_lambda(rule11, kernel2):
    """Heavier regularization never increases ||f||_K of the ideal estimator"""
    emb = TestDensity.benchmark(2).kernel_embedding(kernel2)
    norms = np.array(
        [fit_exact(rule11, kernel2, 0.7**k, emb).rkhs_norm_squared() for k in range(41)]
    )
    # k grows as lambda shrinks
    assert np.all(np.diff(norms) >= -1e-12 * norms[1:])
    assert norms[-1] > norms[0]


def test_shifts_must_match_dimension(rule11, kernel2, sample2):
    est = fit(rule11, kernel2, 0.1, sample2)
    with pytest.raises(DomainError):
        est.evaluate_shifted_grid(np.array([[0.5], [0.25]]))
    with pytest.raises(DomainError):
        est.evaluate_shifted_grid(np.zeros((2, 3)))
