"""
QMC points

Sobol' shift points for the shifted-lattice MISE evaluation grid.

The direction numbers are the Joe-Kuo table shipped with
``scipy.stats.qmc.Sobol`` (21201 dimensions). The sequence is unscrambled and
the initial all-zeros point is skipped, so the first shift is (1/2, ..., 1/2)
and no shift repeats the raw lattice.
"""
import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from korobov_density.constants import SOBOL_MAX_DIM
from korobov_density.exceptions import ConfigurationError, DomainError

_logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ShiftSet:
    """L shift points in [0, 1)^d."""

    points: np.ndarray

    def __post_init__(self):
        points = np.array(self.points, dtype=float)
        points.setflags(write=False)
        object.__setattr__(self, "points", points)

    @property
    def count(self):
        return self.points.shape[0]

    @property
    def dimension(self):
        return self.points.shape[1]


def generate_shifts(count, d):
    """
    First ``count`` nonzero points of the d-dimensional Sobol' sequence.

    Parameters
    ----------
    count : int
        Number of shifts L >= 1.
    d : int
        Dimension, 1 <= d <= 21201.

    Returns
    -------
    ShiftSet
    """

    if count < 1:
        raise DomainError(f"Shift count must be positive, got {count}")
    if not 1 <= d <= SOBOL_MAX_DIM:
        raise ConfigurationError(
            f"Sobol' direction numbers cover 1..{SOBOL_MAX_DIM} dimensions, got {d}"
        )
    engine = qmc.Sobol(d, scramble=False)
    engine.fast_forward(1)
    with warnings.catch_warnings():
        # balance warning for counts that are not powers of two
        warnings.simplefilter("ignore", UserWarning)
        points = engine.random(count)
    _logger.debug("Generated %d Sobol' shifts in dimension %d", count, d)
    return ShiftSet(np.ascontiguousarray(points))


def zero_shift(d):
    """A single zero shift, turning the grid into the raw lattice."""

    return ShiftSet(np.zeros((1, d)))
