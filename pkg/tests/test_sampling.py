import numpy as np
import pytest
from fire import Fire
from scipy import stats

from korobov_density.exceptions import DomainError
from korobov_density.kernels import KorobovKernel, ProductFourierEmbedding, ProductWeights
from korobov_density.sampling import (
    TestDensity,
    _sample_main,
    make_rng,
    read_sample_csv,
    write_sample_csv,
)
from korobov_density.special import fourier_scale


def test_benchmark_amplitudes():
    assert TestDensity.benchmark(3).amplitudes == pytest.approx((1.0, 1 / 16, 1 / 81))
    with pytest.raises(DomainError):
        TestDensity((30.0,))
    with pytest.raises(DomainError):
        TestDensity((-0.5,))


def test_evaluate():
    f = TestDensity.benchmark(2)
    assert f(np.array([0.5, 0.5])) == pytest.approx((1 + 7 / 240) * (1 + 7 / 240 / 16))
    assert f(np.zeros(2)) == pytest.approx((1 - 1 / 30) * (1 - 1 / 30 / 16))
    with pytest.raises(DomainError):
        f(np.array([0.5, 1.2]))
    with pytest.raises(DomainError):
        f(np.array([0.5]))


def test_envelope_bounds_density():
    """API Tests"""
    f = TestDensity((20.0, 5.0))
    y = np.random.default_rng(0).random((5000, 2))
    assert f(y).max() <= f.envelope_constant()
    assert f.envelope_constant() == pytest.approx((1 + 140 / 240) * (1 + 35 / 240))


def test_sample_shape_and_determinism():
    f = TestDensity.benchmark(4)
    a = f.sample(500, 11)
    assert a.shape == (500, 4)
    assert np.all((a >= 0) & (a < 1))
    np.testing.assert_array_equal(a, f.sample(500, 11))
    assert not np.array_equal(a, f.sample(500, 12))
    np.testing.assert_array_equal(a, f.sample(500, make_rng(11)))


def test_uniform_accepts_everything():
    draw = TestDensity.uniform(2).draw(1000, 3, "joint")
    assert draw.proposals[0] == 1000


@pytest.mark.parametrize("method", ["factorized", "joint"])
def test_marginals_follow_cdf(method):
    """Both samplers reproduce the marginal CDFs"""
    f = TestDensity((20.0, 3.0))
    y = f.sample(20_000, 5, method)
    for j in range(2):
        def cdf(t, j=j):
            pts = np.full((len(t), 2), 0.5)
            pts[:, j] = t
            return f.cdf(pts)[:, j]

        assert stats.kstest(y[:, j], cdf).pvalue > 1e-3


def test_acceptance_rates():
    """API Tests"""
    f = TestDensity((20.0, 10.0))
    joint = f.draw(20_000, 1, "joint")
    assert 20_000 / joint.proposals[0] == pytest.approx(1 / f.envelope_constant(), abs=0.02)
    fact = f.draw(20_000, 1, "factorized")
    np.testing.assert_allclose(20_000 / fact.proposals, 1 / f.factor_max(), atol=0.02)


def test_unknown_method():
    with pytest.raises(DomainError):
        TestDensity.benchmark(1).draw(10, 0, "metropolis")


def test_cdf():
    f = TestDensity((5.0, 1.0))
    np.testing.assert_allclose(f.cdf(np.zeros(2)), 0.0, atol=1e-15)
    np.testing.assert_allclose(f.cdf(np.ones(2)), 1.0, atol=1e-14)
    t = np.linspace(0, 1, 201)
    assert np.all(np.diff(f.cdf(np.column_stack([t, t])), axis=0) > 0)


def test_fourier_coefficients():
    f = TestDensity((0.7,))
    coeffs = f.fourier_coefficients(2)
    assert len(coeffs) == 5
    assert coeffs[(0,)] == 1
    assert coeffs[(1,)] == pytest.approx(0.7 * fourier_scale(4))
    assert coeffs[(-2,)] == pytest.approx(0.7 * fourier_scale(4) / 16)
    y = (np.arange(8192) + 0.5) / 8192
    numeric = np.mean(f(y[:, None]) * np.exp(-2j * np.pi * y))
    assert coeffs[(1,)] == pytest.approx(numeric, abs=1e-10)
    assert len(TestDensity.benchmark(3).fourier_coefficients(1)) == 27


def test_l2_norm():
    """API Tests"""
    f = TestDensity((1.0,))
    assert f.l2_norm_squared() == pytest.approx(1 + 1 / 2100, rel=1e-12)
    g = TestDensity((3.0, 0.5))
    y = (np.arange(2000) + 0.5) / 2000
    grid = np.stack(np.meshgrid(y, y, indexing="ij"), axis=-1)
    assert g.l2_norm_squared() == pytest.approx(np.mean(g(grid) ** 2), rel=1e-8)


@pytest.mark.parametrize("alpha", [2, 4])
def test_closed_form_embedding_matches_fourier(alpha):
    """Bernoulli closed form of the embedding against its Fourier series"""
    f = TestDensity.benchmark(3)
    kernel = KorobovKernel(alpha, ProductWeights.power_law(3, alpha))
    x = np.random.default_rng(4).random((20, 3))
    fourier = ProductFourierEmbedding(kernel, f.factor_coefficients(256))
    np.testing.assert_allclose(f.kernel_embedding(kernel)(x), fourier(x), atol=1e-11)


def test_embedding_quadrature(kernel1):
    f = TestDensity((2.0,))
    y = (np.arange(4096) / 4096)[:, None]
    emb = f.kernel_embedding(kernel1)
    for x in (0.0, 0.3, 0.77):
        numeric = np.mean(kernel1(np.array([x]), y) * f(y))
        assert emb(np.array([x])) == pytest.approx(numeric, abs=1e-6)


def test_fractional_alpha_falls_back_to_fourier():
    kernel = KorobovKernel(3.0, ProductWeights((1.0,)), series_truncation=500)
    emb = TestDensity((1.0,)).kernel_embedding(kernel)
    assert isinstance(emb, ProductFourierEmbedding)
    x = (np.arange(1024) / 1024)[:, None]
    assert emb(x).mean() == pytest.approx(1.0, abs=1e-12)


def test_rng_streams():
    assert make_rng(3, 1).random() == make_rng(3, 1).random()
    assert make_rng(3, 1).random() != make_rng(3, 2).random()
    assert make_rng(3).random() != make_rng(4).random()


def test_sample_csv_round_trip(tmp_path):
    pts = TestDensity.benchmark(3).sample(50, 0)
    path = write_sample_csv(tmp_path / "s.csv", pts)
    assert path.read_text().splitlines()[0] == "y1,y2,y3"
    np.testing.assert_array_equal(read_sample_csv(path), pts)


def test_sample_csv_without_header(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("0.1,0.2\n0.3,0.4\n")
    np.testing.assert_array_equal(read_sample_csv(path), [[0.1, 0.2], [0.3, 0.4]])


@pytest.mark.parametrize(
    "content,where",
    [
        ("y1,y2\n0.1,0.2\n0.3,abc\n", "row 3, column 2"),
        ("0.1,0.2\n1.5,0.4\n", "row 2, column 1"),
        ("0.1,0.2\n0.3\n", "row 2, column 2"),
    ],
)
def test_sample_csv_errors(tmp_path, content, where):
    """Malformed CSVs name the first offending row and column"""
    path = tmp_path / "s.csv"
    path.write_text(content)
    with pytest.raises(DomainError, match=where):
        read_sample_csv(path)


def test_empty_sample_csv(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("")
    with pytest.raises(DomainError):
        read_sample_csv(path)


@pytest.mark.slow
def test_benchmark_marginals_pass_ks():
    """Per-coordinate KS statistic of 10^5 draws below the 1% critical value"""
    m = 10**5
    f = TestDensity.benchmark(6)
    u = f.cdf(f.sample(m, 2024))
    critical = stats.kstwo.ppf(0.99, m)
    for j in range(6):
        assert stats.kstest(u[:, j], "uniform").statistic < critical


@pytest.mark.slow
def test_joint_acceptance_rate_within_three_sigma():
    m = 10**5
    f = TestDensity.benchmark(6)
    draw = f.draw(m, 2024, "joint")
    proposals = int(draw.proposals[0])
    p = 1 / f.envelope_constant()
    sigma = np.sqrt(p * (1 - p) / proposals)
    assert abs(m / proposals - p) <= 3 * sigma


def test_sample_entry_point(tmp_path, capsys):
    """CLI Tests"""
    out = tmp_path / "s.csv"
    Fire(_sample_main, command=["2", "40", "--seed", "3", "--out", str(out)])
    np.testing.assert_array_equal(read_sample_csv(out), TestDensity.benchmark(2).sample(40, 3))
    assert str(out) in capsys.readouterr().out
