"""
Lattice

Rank-1 lattice point sets and the component-by-component (CBC) search for
their generating vectors.
"""
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fire import Fire

from korobov_density.constants import CLOSED_FORM_ALPHAS
from korobov_density.exceptions import ConfigurationError, DomainError
from korobov_density.kernels import ProductWeights, one_dim_factor

_logger = logging.getLogger(__name__)


def is_prime(n):
    """Trial division."""

    n = int(n)
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def next_prime(n):
    """Smallest prime >= n."""

    n = max(int(np.ceil(n)), 2)
    while not is_prime(n):
        n += 1
    return n


@dataclass(frozen=True)
class LatticeRule:
    """
    Rank-1 lattice x_k = {k z / N}, k = 1..N.

    The N-th point is the origin. Differences x_j - x_k depend only on
    (j - k) mod N, which is what makes the Gram systems circulant.
    """

    n: int
    z: tuple

    def __post_init__(self):
        if int(self.n) != self.n or not is_prime(self.n):
            raise DomainError(f"N must be prime, got {self.n}")
        z = tuple(int(v) for v in np.atleast_1d(self.z))
        if not z:
            raise DomainError("Generating vector must have at least one component")
        bad = [v for v in z if not 1 <= v <= self.n - 1]
        if bad:
            raise DomainError(f"Generating vector entries must lie in 1..{self.n - 1}, got {bad}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "z", z)

    @classmethod
    def cbc(cls, n, d, alpha, weights):
        return cls(n, cbc_construct(n, d, alpha, weights))

    @property
    def dimension(self):
        return len(self.z)

    def _residues(self, k):
        # exact integer arithmetic before the division keeps x_N == 0 bitwise
        return np.multiply.outer(k, np.array(self.z, dtype=np.int64)) % self.n

    def points(self):
        """The N points in lattice order k = 1..N, shape (N, d)."""

        return self._residues(np.arange(1, self.n + 1, dtype=np.int64)) / self.n

    def lag_points(self):
        """{m z / N} for m = 0..N-1; row m is the difference x_{k+m} - x_k mod 1."""

        return self._residues(np.arange(self.n, dtype=np.int64)) / self.n

    def lag_index(self):
        """N x N table of (k - j) mod N, indexing first_row of a circulant matrix."""

        idx = np.arange(self.n)
        return (idx[None, :] - idx[:, None]) % self.n


def _check_cbc_args(n, d, alpha, weights):
    if not is_prime(n):
        raise DomainError(f"N must be prime, got {n}")
    if d < 1:
        raise DomainError(f"Dimension must be positive, got {d}")
    if alpha not in CLOSED_FORM_ALPHAS:
        raise ConfigurationError(
            f"CBC supports alpha in {CLOSED_FORM_ALPHAS}, got {alpha}"
        )
    if weights.dimension < d:
        raise DomainError(f"Need {d} weights, got {weights.dimension}")


def _coordinate_factors(n, candidates, gamma, alpha):
    """Rows: candidate z_s; columns: k = 1..N; entries: 1-d kernel factor at {k z_s / N}."""

    k = np.arange(1, n + 1, dtype=np.int64)
    r = np.multiply.outer(np.asarray(candidates, dtype=np.int64), k) % n
    # B_alpha({t}) = B_alpha(1 - {t}); folding the residue makes z and N - z tie exactly
    r = np.minimum(r, n - r)
    return one_dim_factor(r / n, gamma, alpha)


def cbc_criterion(n, z, alpha, weights):
    """
    Squared worst-case integration error of the lattice in the Korobov space.

    E^2(z) = -1 + (1/N) sum_{k=1}^N prod_j [1 + gamma_j (2 pi)^alpha / ((-1)^{alpha/2+1} alpha!) B_alpha({k z_j / N})]
    """

    z = tuple(int(v) for v in np.atleast_1d(z))
    _check_cbc_args(n, len(z), alpha, weights)
    running = np.ones(n)
    for j, zj in enumerate(z):
        running *= _coordinate_factors(n, [zj], weights.gamma[j], alpha)[0]
    return float(running.mean() - 1.0)


def cbc_construct(n, d, alpha, weights):
    """
    Component-by-component construction of a generating vector.

    z_1 = 1; each later z_s minimizes the criterion of :func:`cbc_criterion`
    over 1..N-1 given the previously fixed components, ties going to the
    smallest candidate. Cost O(N^2 d).

    Parameters
    ----------
    n : int
        Prime number of points.
    d : int
        Dimension.
    alpha : int
        Smoothness, 2 or 4.
    weights : ProductWeights
        At least d weights.

    Returns
    -------
    tuple of int
        The generating vector.
    """

    _check_cbc_args(n, d, alpha, weights)
    z = [1]
    running = _coordinate_factors(n, [1], weights.gamma[0], alpha)[0]
    candidates = np.arange(1, n)
    for s in range(1, d):
        factors = _coordinate_factors(n, candidates, weights.gamma[s], alpha)
        criteria = (factors * running).mean(axis=1) - 1.0
        # np.argmin returns the first minimizer, i.e. the smallest candidate
        best = int(np.argmin(criteria))
        z.append(int(candidates[best]))
        running = running * factors[best]
        _logger.debug("CBC step %d: z_%d=%d criterion=%.6e", s + 1, s + 1, z[-1], criteria[best])
    _logger.info("CBC vector for N=%d, d=%d, alpha=%s: %s", n, d, alpha, z)
    return tuple(z)


def write_generating_vector(path, rule):
    """Write "N d" on the first line and z on the second."""

    path = Path(path)
    path.write_text(f"{rule.n} {rule.dimension}\n" + " ".join(map(str, rule.z)) + "\n")
    return path


def read_generating_vector(path):
    """Inverse of :func:`write_generating_vector`."""

    lines = [line.split() for line in Path(path).read_text().splitlines() if line.strip()]
    try:
        n, d = (int(v) for v in lines[0])
        z = tuple(int(v) for v in lines[1])
    except (IndexError, ValueError) as e:
        raise DomainError(f"Malformed generating vector file {path}: {e}") from e
    if len(z) != d:
        raise DomainError(f"Header announces d={d} but {len(z)} components follow in {path}")
    return LatticeRule(n, z)


def _cbc_main(n, d, alpha=2, weights="power"):
    return list(cbc_construct(n, d, alpha, ProductWeights.from_preset(weights, d, alpha)))


if __name__ == "__main__":
    Fire(_cbc_main)
