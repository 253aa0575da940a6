"""
Sampling

The periodic benchmark density

    f(y) = prod_j (1 + a_j B_4(y_j)),   a_j = j^-4,

exact acceptance-rejection sampling from it, and the closed forms used as
oracles (Fourier coefficients, kernel mean embedding, L2 norm, CDF).
"""
import logging
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import NamedTuple

import numpy as np
import pandas as pd
from fire import Fire

from korobov_density.exceptions import DomainError
from korobov_density.kernels import kernel_mean_embedding_product, periodic_distance
from korobov_density.special import (
    bernoulli_antiderivative,
    bernoulli_eval,
    fourier_scale,
    polynomial_eval,
    zeta_value,
)

_logger = logging.getLogger(__name__)

# max B_4 on [0, 1], attained at 1/2
B4_MAX = 7.0 / 240.0
B4_MIN = -1.0 / 30.0

_EMBEDDING_TERMS = 256
_B4_PRIMITIVE = bernoulli_antiderivative(4)


def make_rng(seed, *stream):
    """
    Counter-based Philox generator for a (seed, stream...) key.

    Streams with different keys never overlap, so replication k of an
    experiment can use ``make_rng(seed, k)`` on any worker.
    """

    key = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(key))


def _as_rng(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return make_rng(0 if rng is None else rng)


class RejectionDraw(NamedTuple):
    points: np.ndarray
    # proposals used per coordinate (factorized) or in total (joint, length 1)
    proposals: np.ndarray


def _rejection(m, dim, accept_fn, envelope, rng):
    """Draw m accepted proposals of dimension ``dim``; returns (points, proposals)."""

    out = np.empty((m, dim))
    filled = 0
    proposals = 0
    while filled < m:
        need = m - filled
        batch = int(need * envelope * 1.1) + 16
        y = rng.random((batch, dim))
        u = rng.random(batch)
        accepted = np.flatnonzero(u * envelope <= accept_fn(y))
        if len(accepted) >= need:
            proposals += int(accepted[need - 1]) + 1
            accepted = accepted[:need]
        else:
            proposals += batch
        out[filled : filled + len(accepted)] = y[accepted]
        filled += len(accepted)
    return out, proposals


@dataclass(frozen=True)
class TestDensity:
    """
    Product density with factors 1 + a_j B_4(y_j) on [0, 1]^d.

    Amplitudes must satisfy 0 <= a_j < 30 so that every factor stays positive.
    """

    amplitudes: tuple

    __test__ = False  # not a pytest class

    def __post_init__(self):
        a = tuple(float(v) for v in np.atleast_1d(self.amplitudes))
        if not a:
            raise DomainError("At least one amplitude is required")
        bad = [v for v in a if not 0 <= v < 30]
        if bad:
            raise DomainError(f"Amplitudes must lie in [0, 30), got {bad}")
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def benchmark(cls, d):
        """a_j = j^-4."""

        return cls(tuple(float(j) ** -4 for j in range(1, d + 1)))

    @classmethod
    def uniform(cls, d):
        return cls((0.0,) * d)

    @property
    def dimension(self):
        return len(self.amplitudes)

    @property
    def array(self):
        return np.array(self.amplitudes)

    def _check(self, y):
        y = np.asarray(y, dtype=float)
        if y.ndim == 0 or y.shape[-1] != self.dimension:
            raise DomainError(
                f"Expected points of dimension {self.dimension}, got shape {y.shape}"
            )
        if np.any((y < 0) | (y > 1)):
            raise DomainError("Density is defined on [0, 1]^d")
        return y

    def evaluate(self, y):
        y = self._check(y)
        return np.prod(1.0 + self.array * bernoulli_eval(4, y), axis=-1)

    __call__ = evaluate

    def factor_max(self):
        """Per-coordinate maxima 1 + 7 a_j / 240."""

        return 1.0 + self.array * B4_MAX

    def envelope_constant(self):
        """C = prod_j (1 + 7 a_j / 240), the joint envelope for uniform proposals."""

        return float(np.prod(self.factor_max()))

    def cdf(self, y):
        """Per-coordinate CDFs y + a_j (B_5(y) - B_5(0)) / 5, shape of y."""

        y = self._check(y)
        return y + self.array * polynomial_eval(_B4_PRIMITIVE, y)

    def draw(self, m, rng=None, method="factorized"):
        """
        Acceptance-rejection with uniform proposals.

        ``factorized`` samples every coordinate from its own factor (acceptance
        1 / (1 + 7 a_j / 240) per coordinate); ``joint`` rejects whole points
        against C (acceptance 1 / C).
        """

        if m < 1:
            raise DomainError(f"Sample size must be positive, got {m}")
        rng = _as_rng(rng)
        if method == "joint":
            points, used = _rejection(
                m, self.dimension, self.evaluate, self.envelope_constant(), rng
            )
            _logger.debug("Joint rejection used %d proposals for %d points", used, m)
            return RejectionDraw(points, np.array([used]))
        if method != "factorized":
            raise DomainError(f"Unknown sampling method {method}")
        points = np.empty((m, self.dimension))
        used = np.empty(self.dimension, dtype=np.int64)
        for j, a in enumerate(self.amplitudes):
            col, used[j] = _rejection(
                m,
                1,
                lambda y, a=a: 1.0 + a * bernoulli_eval(4, y[:, 0]),
                1.0 + a * B4_MAX,
                rng,
            )
            points[:, j] = col[:, 0]
        return RejectionDraw(points, used)

    def sample(self, m, rng=None, method="factorized"):
        """M independent draws, shape (M, d). ``rng`` is a seed or a Generator."""

        return self.draw(m, rng, method).points

    def factor_coefficients(self, h_max):
        """Per-coordinate 1-d Fourier coefficient maps for |h| <= h_max."""

        s4 = fourier_scale(4)
        res = []
        for a in self.amplitudes:
            coeffs = {0: 1.0 + 0j}
            for h in range(1, h_max + 1):
                coeffs[h] = coeffs[-h] = complex(a * s4 / h**4)
            res.append(coeffs)
        return res

    def fourier_coefficients(self, h_max):
        """
        f^(h) = int f(y) e^{-2 pi i h.y} dy for ||h||_inf <= h_max.

        f^(h) = prod_{j in supp h} a_j (-1)^3 4! / (2 pi |h_j|)^4, f^(0) = 1.
        The map has (2 h_max + 1)^d entries.
        """

        if h_max < 0:
            raise DomainError(f"h_max must be non-negative, got {h_max}")
        factors = self.factor_coefficients(h_max)
        res = {}
        for h in product(range(-h_max, h_max + 1), repeat=self.dimension):
            res[h] = complex(np.prod([factors[j][hj] for j, hj in enumerate(h)]))
        return res

    def l2_norm_squared(self):
        """||f||_{L2}^2 = prod_j (1 + a_j^2 int B_4^2), int B_4^2 = 2 s_4^2 zeta(8) = 1/2100."""

        b4_sq = 2 * fourier_scale(4) ** 2 * zeta_value(8)
        return float(np.prod(1.0 + self.array**2 * b4_sq))

    def kernel_embedding(self, kernel):
        """
        x -> int K(x, y) f(y) dy.

        For alpha in {2, 4} each factor is 1 + gamma_j a_j (s_4 / s_{alpha+4}) B_{alpha+4}({x_j});
        other alphas go through the truncated Fourier series.
        """

        if kernel.dimension != self.dimension:
            raise DomainError(
                f"Kernel dimension {kernel.dimension} != density dimension {self.dimension}"
            )
        if float(kernel.alpha) in (2.0, 4.0):
            return _BernoulliEmbedding(kernel, self)
        return kernel_mean_embedding_product(
            kernel, self.factor_coefficients(_EMBEDDING_TERMS)
        )


class _BernoulliEmbedding:
    """Closed-form kernel mean embedding of a :class:`TestDensity`."""

    def __init__(self, kernel, density):
        self.degree = int(kernel.alpha) + 4
        ratio = fourier_scale(4) / fourier_scale(self.degree)
        self.scale = kernel.weights.array * density.array * ratio

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        dist = periodic_distance(x)
        return np.prod(1.0 + self.scale * bernoulli_eval(self.degree, dist), axis=-1)


def write_sample_csv(path, points):
    """One point per row, columns y1..yd, 17 significant digits."""

    points = np.atleast_2d(points)
    columns = [f"y{j + 1}" for j in range(points.shape[1])]
    pd.DataFrame(points, columns=columns).to_csv(path, index=False, float_format="%.17g")
    return Path(path)


def read_sample_csv(path):
    """
    Read an (M, d) sample; a header row is optional.

    Raises
    ------
    DomainError
        Naming the row and column (1-based, as in the file) of the first
        non-numeric or out-of-range entry.
    """

    try:
        raw = pd.read_csv(path, header=None, dtype=str, skip_blank_lines=True)
    except pd.errors.EmptyDataError as e:
        raise DomainError(f"Sample file {path} is empty") from e
    except pd.errors.ParserError as e:
        raise DomainError(f"Malformed sample file {path}: {e}") from e

    start = 1 if pd.to_numeric(raw.iloc[0], errors="coerce").isna().all() else 0
    values = raw.iloc[start:].apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)
    if values.size == 0:
        raise DomainError(f"Sample file {path} contains no data rows")
    bad = ~np.isfinite(values) | (values < 0) | (values > 1)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise DomainError(
            f"{path}: row {row + start + 1}, column {col + 1}: "
            f"expected a number in [0, 1], got {raw.iloc[row + start, col]!r}"
        )
    return values


def _sample_main(d, m, seed=0, out=None):
    points = TestDensity.benchmark(d).sample(m, seed)
    if out is not None:
        write_sample_csv(out, points)
        return out
    return points


if __name__ == "__main__":
    Fire(_sample_main)
