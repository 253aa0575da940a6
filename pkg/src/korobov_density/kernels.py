"""
Kernels

Weighted Korobov kernels with product weights and the L2-product kernel
K~ whose Fourier weights are the squares of the Korobov ones. Both are
evaluated through their Bernoulli closed form when the exponent is an even
integer up to 8, and through a truncated cosine series otherwise.
"""
import logging
from dataclasses import dataclass

import numpy as np

from korobov_density.constants import (
    DEFAULT_SERIES_TRUNCATION,
    SUPPORTED_DEGREES,
    WEIGHT_PRESETS,
)
from korobov_density.exceptions import ConfigurationError, DomainError
from korobov_density.special import bernoulli_eval, fourier_scale, zeta_value

_logger = logging.getLogger(__name__)

_SERIES_CHUNK = 4096


def periodic_distance(t):
    """Distance of t to the nearest integer, in [0, 1/2].

    Even-degree Bernoulli polynomials satisfy B({t}) = B(dist(t, Z)), and the
    folded value is bitwise symmetric under t -> -t.
    """

    t = np.asarray(t, dtype=float)
    return np.abs(t - np.rint(t))


def _exponent_degree(exponent):
    if float(exponent).is_integer() and int(exponent) in SUPPORTED_DEGREES:
        return int(exponent)
    return None


def _cosine_series(t, exponent, terms):
    """sum_{h=1}^{terms} cos(2 pi h t) / h^exponent, accumulated in chunks of h."""

    t = np.asarray(t, dtype=float)
    total = np.zeros(t.shape)
    for start in range(1, terms + 1, _SERIES_CHUNK):
        h = np.arange(start, min(start + _SERIES_CHUNK, terms + 1), dtype=float)
        total += (np.cos(2 * np.pi * np.multiply.outer(t, h)) / h**exponent).sum(
            axis=-1
        )
    return total


def one_dim_factor(t, gamma, exponent, terms=DEFAULT_SERIES_TRUNCATION):
    """
    The 1-dimensional Korobov factor 1 + gamma * sum_{h != 0} e^{2 pi i h t} / |h|^exponent.

    Parameters
    ----------
    t : array_like
        Differences x - y (any real values, the factor is 1-periodic).
    gamma : float or array_like
        Weight(s), broadcast against ``t``.
    exponent : float
        Decay exponent of the Fourier weights (alpha, or 2 alpha for K~).
    terms : int
        Truncation of the cosine series when no closed form exists.
    """

    dist = periodic_distance(t)
    degree = _exponent_degree(exponent)
    if degree is not None:
        return 1.0 + gamma * bernoulli_eval(degree, dist) / fourier_scale(degree)
    return 1.0 + 2.0 * gamma * _cosine_series(dist, exponent, terms)


@dataclass(frozen=True)
class ProductWeights:
    """Per-coordinate weights gamma_1..gamma_d; gamma_u = prod_{j in u} gamma_j."""

    gamma: tuple

    def __post_init__(self):
        gamma = tuple(float(g) for g in np.atleast_1d(self.gamma))
        if not gamma:
            raise DomainError("At least one weight is required")
        bad = [g for g in gamma if not g > 0]
        if bad:
            raise DomainError(f"Weights must be positive, got {bad}")
        object.__setattr__(self, "gamma", gamma)

    @classmethod
    def power_law(cls, d, alpha):
        """gamma_j = j^(-alpha)."""

        return cls(tuple(float(j) ** -alpha for j in range(1, d + 1)))

    @classmethod
    def constant(cls, d, value=1.0):
        return cls((float(value),) * d)

    @classmethod
    def from_preset(cls, name, d, alpha):
        if name == "power":
            return cls.power_law(d, alpha)
        if name == "unit":
            return cls.constant(d)
        raise ConfigurationError(
            f"Unknown weight preset {name}! Supported: {WEIGHT_PRESETS}"
        )

    @property
    def dimension(self):
        return len(self.gamma)

    @property
    def array(self):
        return np.array(self.gamma)

    def squared(self):
        return ProductWeights(tuple(g * g for g in self.gamma))

    def restrict(self, s):
        """Weights of the first s coordinates."""

        return ProductWeights(self.gamma[:s])


@dataclass(frozen=True)
class KorobovKernel:
    """
    Weighted Korobov kernel with product weights.

    K(x, y) = prod_j [1 + gamma_j sum_{h != 0} e^{2 pi i h (x_j - y_j)} / |h|^alpha]

    Attributes
    ----------
    alpha : float
        Smoothness, alpha > 1.
    weights : ProductWeights
        Coordinate weights; their count fixes the dimension.
    series_truncation : int
        Number of cosine terms used when alpha is not in {2, 4, 6, 8}.
    """

    alpha: float
    weights: ProductWeights
    series_truncation: int = DEFAULT_SERIES_TRUNCATION

    def __post_init__(self):
        if not self.alpha > 1:
            raise ConfigurationError(f"Smoothness alpha must exceed 1, got {self.alpha}")
        if self.series_truncation < 1:
            raise ConfigurationError(
                f"series_truncation must be positive, got {self.series_truncation}"
            )
        if not self.closed_form:
            _logger.debug(
                "alpha=%s has no Bernoulli closed form, using %d cosine terms",
                self.alpha,
                self.series_truncation,
            )

    @property
    def dimension(self):
        return self.weights.dimension

    @property
    def closed_form(self):
        return _exponent_degree(self.alpha) is not None

    def _check_points(self, *points):
        arrs = [np.asarray(p, dtype=float) for p in points]
        for arr in arrs:
            if arr.ndim == 0 or arr.shape[-1] != self.dimension:
                raise DomainError(
                    f"Expected points of dimension {self.dimension}, got shape {arr.shape}"
                )
        return arrs

    def lag_evaluate(self, t):
        """Kernel value as a function of the difference vector t = x - y."""

        (t,) = self._check_points(t)
        factors = one_dim_factor(
            t, self.weights.array, self.alpha, terms=self.series_truncation
        )
        return np.prod(factors, axis=-1)

    def evaluate(self, x, y):
        """K(x, y) for broadcastable point arrays of shape (..., d)."""

        x, y = self._check_points(x, y)
        return self.lag_evaluate(x - y)

    __call__ = evaluate

    def squared(self):
        """The kernel with Fourier weights r(h, gamma)^-2 (exponent 2 alpha, weights gamma^2)."""

        return KorobovKernel(
            2 * self.alpha, self.weights.squared(), self.series_truncation
        )

    def l2_evaluate(self, x, y):
        """K~(x, y) = <K(x, .), K(y, .)>_{L2}."""

        return self.squared().evaluate(x, y)

    def fourier_weight(self, h):
        """r(h, gamma)^-1 for integer multi-indices h of shape (..., d)."""

        (h,) = self._check_points(h)
        absh = np.abs(h)
        safe = np.where(absh == 0, 1.0, absh)
        factors = np.where(absh == 0, 1.0, self.weights.array / safe**self.alpha)
        return np.prod(factors, axis=-1)


def _coefficient_arrays(coeffs, dimension):
    if not coeffs:
        raise DomainError("Empty Fourier coefficient map")
    indices = np.array([tuple(h) for h in coeffs.keys()], dtype=float).reshape(
        len(coeffs), -1
    )
    if indices.shape[1] != dimension:
        raise DomainError(
            f"Multi-indices have length {indices.shape[1]}, kernel dimension is {dimension}"
        )
    values = np.array(list(coeffs.values()), dtype=complex)
    zero = tuple([0] * dimension)
    if abs(coeffs.get(zero, 0.0) - 1.0) > 1e-12:
        raise DomainError("The coefficient at h=0 must equal 1 for a density")
    return indices, values


class FourierEmbedding:
    """
    x -> int K(x, y) f(y) dy for a density with finitely many Fourier coefficients.

    Coefficients follow f^(h) = int f(y) e^{-2 pi i h.y} dy, so the embedding is
    sum_h r(h, gamma)^-1 f^(h) e^{2 pi i h.x}.
    """

    def __init__(self, kernel, coeffs):
        self.kernel = kernel
        self.indices, values = _coefficient_arrays(coeffs, kernel.dimension)
        self._weighted = kernel.fourier_weight(self.indices) * values

    def complex_values(self, x):
        (x,) = self.kernel._check_points(x)
        phase = np.exp(2j * np.pi * (x @ self.indices.T))
        return phase @ self._weighted

    def __call__(self, x):
        return self.complex_values(x).real


class ProductFourierEmbedding:
    """Separable version of :class:`FourierEmbedding` for product densities."""

    def __init__(self, kernel, factor_coeffs):
        if len(factor_coeffs) != kernel.dimension:
            raise DomainError(
                f"Got {len(factor_coeffs)} coordinate factors for dimension {kernel.dimension}"
            )
        self.kernel = kernel
        self._factors = []
        for j, coeffs in enumerate(factor_coeffs):
            one_dim = KorobovKernel(
                kernel.alpha,
                ProductWeights((kernel.weights.gamma[j],)),
                kernel.series_truncation,
            )
            self._factors.append(
                FourierEmbedding(one_dim, {(int(h),): c for h, c in coeffs.items()})
            )

    def complex_values(self, x):
        (x,) = self.kernel._check_points(x)
        res = np.ones(x.shape[:-1], dtype=complex)
        for j, factor in enumerate(self._factors):
            res = res * factor.complex_values(x[..., j : j + 1])
        return res

    def __call__(self, x):
        return self.complex_values(x).real


def kernel_mean_embedding_fourier(kernel, fourier_coeffs):
    """
    Exact kernel mean embedding of a density given by Fourier coefficients.

    Parameters
    ----------
    kernel : KorobovKernel
    fourier_coeffs : dict
        Map from integer multi-index (tuple of length d) to complex coefficient,
        finite support, value 1 at h = 0.

    Returns
    -------
    FourierEmbedding
        Callable returning real values; ``complex_values`` exposes the
        (numerically zero) imaginary part.
    """

    return FourierEmbedding(kernel, fourier_coeffs)


def kernel_mean_embedding_product(kernel, factor_coeffs):
    """Like :func:`kernel_mean_embedding_fourier` for f(y) = prod_j f_j(y_j)."""

    return ProductFourierEmbedding(kernel, factor_coeffs)


def interpolation_error_constant(alpha, delta, weights):
    """
    Constant of the lattice kernel-interpolation L2 error bound for product weights.

    (sum_u max(|u|, 1) gamma_u^{1/(alpha - 4 delta)} [2 zeta(alpha/(alpha - 4 delta))]^|u|)^(alpha - 4 delta)

    With w_j = gamma_j^p 2 zeta(alpha p), p = 1/(alpha - 4 delta), the subset sum
    equals 1 + prod_j (1 + w_j) * sum_j w_j / (1 + w_j).
    """

    if not 0 < delta < alpha / 4:
        raise DomainError(f"delta must lie in (0, alpha/4), got {delta}")
    p = 1.0 / (alpha - 4 * delta)
    w = weights.array**p * 2 * zeta_value(alpha * p)
    total = 1.0 + np.prod(1 + w) * np.sum(w / (1 + w))
    return float(total ** (alpha - 4 * delta))
