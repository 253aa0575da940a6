"""
Estimator

Regularized kernel density estimator on a rank-1 lattice. The coefficients
solve A c = b with

    A_jk = K~(x_j, x_k) + lambda K(x_j, x_k),    b_j = (1/M) sum_m K(x_j, Y_m).

On a lattice A is a symmetric circulant matrix, so the system is diagonalized
by the length-N discrete Fourier transform.
"""
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from korobov_density.constants import DEFAULT_SERIES_TRUNCATION, NULL_SPACE_RTOL
from korobov_density.exceptions import DomainError, SingularSystemError
from korobov_density.kernels import KorobovKernel, ProductWeights
from korobov_density.lattice import LatticeRule

_logger = logging.getLogger(__name__)

# elements per temporary (points x samples x d) in the right-hand side assembly
_RHS_BLOCK = 2**21

_HEADER = "# korobov-density estimator"


def _format_reals(values):
    return " ".join(format(float(v), ".17g") for v in values)


def _circular_convolve(row, c):
    """Product of the symmetric circulant matrix with first row ``row`` and c."""

    return np.fft.ifft(np.fft.fft(row) * np.fft.fft(c)).real


def _check_dimension(rule, kernel):
    if rule.dimension != kernel.dimension:
        raise DomainError(
            f"Lattice dimension {rule.dimension} != kernel dimension {kernel.dimension}"
        )


@dataclass(frozen=True)
class GramSystem:
    """The circulant system A = K~ + lambda K on a lattice, stored by its first row."""

    first_row: np.ndarray
    lam: float
    rule: LatticeRule
    kernel: KorobovKernel

    @property
    def n(self):
        return len(self.first_row)

    @property
    def eigenvalues(self):
        """DFT of the first row; real because the row is symmetric."""

        return np.fft.fft(self.first_row).real

    def matvec(self, c):
        return _circular_convolve(self.first_row, c)

    def dense(self):
        """Full N x N matrix, only meant for cross-checks."""

        return self.first_row[self.rule.lag_index()]


def assemble_system(rule, kernel, lam):
    """
    First row of A from the lag points {m z / N}, m = 0..N-1. Cost O(N d).

    Raises
    ------
    DomainError
        If lambda <= 0 or the dimensions of rule and kernel differ.
    """

    if not lam > 0:
        raise DomainError(f"Regularization lambda must be positive, got {lam}")
    _check_dimension(rule, kernel)
    lags = rule.lag_points()
    origin = np.zeros(rule.dimension)
    first_row = kernel.l2_evaluate(lags, origin) + lam * kernel.evaluate(lags, origin)
    return GramSystem(first_row, float(lam), rule, kernel)


def assemble_rhs(rule, kernel, sample):
    """b_j = (1/M) sum_m K(x_j, Y_m) for a sample of shape (M, d). Cost O(N M d)."""

    _check_dimension(rule, kernel)
    sample = np.asarray(sample, dtype=float)
    if sample.ndim != 2 or sample.shape[0] == 0:
        raise DomainError(f"Expected a nonempty (M, d) sample, got shape {sample.shape}")
    if sample.shape[1] != rule.dimension:
        raise DomainError(
            f"Sample dimension {sample.shape[1]} != lattice dimension {rule.dimension}"
        )
    points = rule.points()
    block = max(1, _RHS_BLOCK // (rule.n * rule.dimension))
    b = np.zeros(rule.n)
    for start in range(0, len(sample), block):
        chunk = sample[start : start + block]
        b += kernel.evaluate(points[:, None, :], chunk[None, :, :]).sum(axis=1)
    return b / len(sample)


def solve_circulant(system, b, rtol=NULL_SPACE_RTOL):
    """
    Solve A c = b by dividing DFT coefficients.

    Eigenvalues with modulus <= rtol * max modulus are treated as the null
    space of A and the matching DFT coefficients of c are set to zero, which
    puts c in the orthogonal complement of null(A).

    Raises
    ------
    SingularSystemError
        If every eigenvalue is thresholded.
    """

    b = np.asarray(b, dtype=float)
    if b.shape != (system.n,):
        raise DomainError(f"Right-hand side has shape {b.shape}, expected ({system.n},)")
    eig = np.fft.fft(system.first_row)
    scale = np.abs(eig).max()
    keep = np.abs(eig) > rtol * scale
    if scale == 0 or not keep.any():
        raise SingularSystemError("All eigenvalues of the circulant system are zero")
    if not keep.all():
        _logger.debug("Thresholded %d of %d eigenvalues", (~keep).sum(), system.n)
    c_hat = np.zeros(system.n, dtype=complex)
    c_hat[keep] = np.fft.fft(b)[keep] / eig[keep]
    c = np.fft.ifft(c_hat)
    residue = np.abs(c.imag).max()
    if residue > 1e-12 * max(1.0, np.abs(c.real).max()):
        _logger.warning("Discarding imaginary residue %.3e of circulant solve", residue)
    return c.real


@dataclass(frozen=True)
class DensityEstimator:
    """
    f^(x) = sum_k c_k K(x_k, x) on a rank-1 lattice.

    Attributes
    ----------
    rule : LatticeRule
    kernel : KorobovKernel
    lam : float
        Regularization parameter the coefficients were fitted with.
    coefficients : np.ndarray
        c_1..c_N in lattice order.
    """

    rule: LatticeRule
    kernel: KorobovKernel
    lam: float
    coefficients: np.ndarray

    def __post_init__(self):
        _check_dimension(self.rule, self.kernel)
        c = np.array(self.coefficients, dtype=float)
        if c.shape != (self.rule.n,):
            raise DomainError(f"Expected {self.rule.n} coefficients, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    def evaluate(self, x):
        """f^ at points of shape (..., d). Cost O(N d) per point."""

        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != self.rule.dimension:
            raise DomainError(
                f"Expected points of dimension {self.rule.dimension}, got shape {x.shape}"
            )
        flat = x.reshape(-1, x.shape[-1])
        block = max(1, _RHS_BLOCK // (self.rule.n * self.rule.dimension))
        points = self.rule.points()
        out = np.empty(len(flat))
        for start in range(0, len(flat), block):
            chunk = flat[start : start + block]
            gram = self.kernel.evaluate(chunk[:, None, :], points[None, :, :])
            out[start : start + block] = gram @ self.coefficients
        return out.reshape(x.shape[:-1])

    __call__ = evaluate

    def evaluate_shifted_grid(self, shifts):
        """
        f^ on {x_n + p_l}: array of shape (L, N), column n in lattice order.

        Each shift costs one length-N circular convolution.
        """

        shifts = np.asarray(getattr(shifts, "points", shifts), dtype=float)
        shifts = np.atleast_2d(shifts)
        if shifts.ndim != 2 or shifts.shape[1] != self.rule.dimension:
            raise DomainError(
                f"Expected shifts of shape (L, {self.rule.dimension}), got {shifts.shape}"
            )
        lags = self.rule.lag_points()
        g = self.kernel.lag_evaluate(lags[None, :, :] + shifts[:, None, :])
        c_hat = np.fft.fft(self.coefficients)
        return np.fft.ifft(np.fft.fft(g, axis=1) * c_hat[None, :], axis=1).real

    def evaluate_at_nodes(self):
        """f^(x_n) for n = 1..N, the kernel-only circulant applied to c."""

        return self.evaluate_shifted_grid(np.zeros((1, self.rule.dimension)))[0]

    def integral(self):
        """int f^ = sum_k c_k, because every K(x_k, .) integrates to 1."""

        return float(self.coefficients.sum())

    def rkhs_norm_squared(self):
        """||f^||_K^2 = c^T K c."""

        return float(self.coefficients @ self.evaluate_at_nodes())

    def l2_norm_squared(self):
        """||f^||_{L2}^2 = c^T K~ c."""

        lags = self.rule.lag_points()
        row = self.kernel.l2_evaluate(lags, np.zeros(self.rule.dimension))
        return float(self.coefficients @ _circular_convolve(row, self.coefficients))

    def galerkin_residual(self, b):
        """
        Relative residual of <f^, K(x_k, .)>_{L2} + lambda f^(x_k) = b_k.

        Computed by direct substitution with dense kernel evaluations.
        """

        b = np.asarray(b, dtype=float)
        points = self.rule.points()
        l2_gram = self.kernel.l2_evaluate(points[:, None, :], points[None, :, :])
        lhs = l2_gram @ self.coefficients + self.lam * self.evaluate(points)
        scale = np.linalg.norm(b)
        res = np.linalg.norm(lhs - b)
        return float(res / scale) if scale > 0 else float(res)

    def save(self, path):
        """Plain-text artifact, every real printed with 17 significant digits."""

        lines = [
            _HEADER,
            f"d {self.rule.dimension}",
            f"alpha {format(float(self.kernel.alpha), '.17g')}",
            f"N {self.rule.n}",
            f"lambda {format(self.lam, '.17g')}",
            f"series_truncation {self.kernel.series_truncation}",
            "z " + " ".join(map(str, self.rule.z)),
            "gamma " + _format_reals(self.kernel.weights.gamma),
            "c " + _format_reals(self.coefficients),
        ]
        path = Path(path)
        path.write_text("\n".join(lines) + "\n")
        return path

    @classmethod
    def load(cls, path):
        fields = {}
        for line in Path(path).read_text().splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            key, *values = line.split()
            fields[key] = values
        try:
            d = int(fields["d"][0])
            rule = LatticeRule(int(fields["N"][0]), tuple(int(v) for v in fields["z"]))
            weights = ProductWeights(tuple(float(v) for v in fields["gamma"]))
            kernel = KorobovKernel(
                float(fields["alpha"][0]),
                weights,
                int(fields.get("series_truncation", [DEFAULT_SERIES_TRUNCATION])[0]),
            )
            lam = float(fields["lambda"][0])
            c = np.array([float(v) for v in fields["c"]])
        except (KeyError, IndexError, ValueError) as e:
            raise DomainError(f"Malformed estimator file {path}: {e}") from e
        if rule.dimension != d:
            raise DomainError(f"Header announces d={d}, generating vector has {rule.dimension}")
        return cls(rule, kernel, lam, c)


def fit_rhs(rule, kernel, lam, b):
    """Estimator for a given right-hand side b."""

    system = assemble_system(rule, kernel, lam)
    return DensityEstimator(rule, kernel, float(lam), solve_circulant(system, b))


def fit(rule, kernel, lam, sample):
    """
    Fit the estimator to an i.i.d. sample.

    Parameters
    ----------
    rule : LatticeRule
    kernel : KorobovKernel
    lam : float
        Regularization parameter, > 0.
    sample : array_like
        Shape (M, d), points in [0, 1]^d.

    Returns
    -------
    DensityEstimator
    """

    return fit_rhs(rule, kernel, lam, assemble_rhs(rule, kernel, sample))


def fit_exact(rule, kernel, lam, embedding):
    """
    Fit with the exact functional b_j = int K(x_j, y) f(y) dy.

    ``embedding`` maps points of shape (N, d) to these integrals (for example
    :func:`korobov_density.kernels.kernel_mean_embedding_fourier`). The result
    is the ideal estimator f_N^lambda, the expectation of :func:`fit`.
    """

    return fit_rhs(rule, kernel, lam, embedding(rule.points()))
