"""
Presets

Rate-optimal parameter choices and the four experiment families of the MISE
study, plus user-supplied grid files.
"""
import logging
from itertools import product

import pandas as pd

from korobov_density.constants import DESK_MAX_M, RATE_LAMBDA_SCALE
from korobov_density.exceptions import ConfigurationError, DomainError
from korobov_density.lattice import next_prime
from korobov_density.mise import MiseConfig

_logger = logging.getLogger(__name__)

PRESETS = ("fig1", "fig3", "fig5", "fig7")

GRID_COLUMNS = ["d", "alpha", "N", "lambda", "M"]

SAMPLE_SIZES = tuple(10**k for k in range(3, 7))


def rate_lambda(m, alpha, scale=1.0, eps=0.0):
    """lambda = scale * M^(-1 / (1 + 1/alpha + eps)), the rate choice for targets in the Korobov space."""

    return scale * float(m) ** (-1.0 / (1.0 + 1.0 / alpha + eps))


def rate_lambda_smooth(m, alpha, scale=1.0, eps=0.0):
    """lambda = scale * M^(-1 / (2 + 1/alpha + 2 eps)), for targets in the smoother K~ space."""

    return scale * float(m) ** (-1.0 / (2.0 + 1.0 / alpha + 2 * eps))


def rate_points(m, alpha, delta, eps=0.0):
    """
    Smallest prime N >= M^(1 / (alpha/2 (1 + eps) + 1/2 - delta/2 (1 + 1/alpha + eps))).

    With this many lattice points the interpolation error does not spoil the
    statistical rate of :func:`rate_lambda`.
    """

    if not 0 < delta < alpha / 4:
        raise DomainError(f"delta must lie in (0, alpha/4), got {delta}")
    expo = alpha / 2 * (1 + eps) + 0.5 - delta / 2 * (1 + 1 / alpha + eps)
    return next_prime(float(m) ** (1.0 / expo))


def _configs(d, alpha, seed, triples, **kwargs):
    return [
        MiseConfig(d=d, alpha=alpha, n=n, lam=lam, m=m, seed=seed, **kwargs)
        for n, lam, m in triples
    ]


def preset_grid(name, d, alpha, seed=0, **kwargs):
    """
    MiseConfig list of a named experiment family.

    fig1: N in {5, 7, 11}, lambda in {0.8, ..., 0.01}, M in 10^3..10^6.
    fig3: N = 11, lambda in {0.1, 0.01, 0.001, 0.0001}, M in 10^3..10^6.
    fig5: N = 11, M = 10^4, lambda = 0.7^k for k = 0..70.
    fig7: N = 11, lambda = c M^(-1/(1+1/alpha)), c = 1000 (alpha=2) or 5000 (alpha=4),
          M = 10^k for k = 3..7 capped at 10^6.

    Extra keyword arguments (s_max, shifts, weights, ...) go to every MiseConfig.
    """

    if name == "fig1":
        triples = product((5, 7, 11), (0.8, 0.4, 0.2, 0.1, 0.05, 0.01), SAMPLE_SIZES)
    elif name == "fig3":
        triples = product((11,), (0.1, 0.01, 0.001, 0.0001), SAMPLE_SIZES)
    elif name == "fig5":
        triples = [(11, 0.7**k, 10**4) for k in range(71)]
    elif name == "fig7":
        if alpha not in RATE_LAMBDA_SCALE:
            raise ConfigurationError(
                f"Unsupported alpha {alpha} for fig7! Supported: {tuple(RATE_LAMBDA_SCALE)}"
            )
        sizes = [10**k for k in range(3, 8) if 10**k <= DESK_MAX_M]
        scale = RATE_LAMBDA_SCALE[alpha]
        triples = [(11, rate_lambda(m, alpha, scale), m) for m in sizes]
    else:
        raise ConfigurationError(f"Unsupported preset {name}! Supported: {PRESETS}")
    configs = _configs(d, alpha, seed, triples, **kwargs)
    _logger.info("Preset %s: %d grid points", name, len(configs))
    return configs


def read_grid_file(path, seed=0, **kwargs):
    """
    MiseConfig list from a CSV with columns d, alpha, N, lambda, M.

    Raises
    ------
    DomainError
        If the file has no rows or misses a column.
    """

    try:
        df = pd.read_csv(path)
    except pd.errors.EmptyDataError as e:
        raise DomainError(f"Grid file {path} is empty") from e
    missing = [c for c in GRID_COLUMNS if c not in df.columns]
    if missing:
        raise DomainError(f"Grid file {path} misses columns {missing}")
    if df.empty:
        raise DomainError(f"Grid file {path} contains no grid points")
    configs = []
    for rec in df.to_dict("records"):
        configs.append(
            MiseConfig(
                d=int(rec["d"]),
                alpha=float(rec["alpha"]),
                n=int(rec["N"]),
                lam=float(rec["lambda"]),
                m=int(rec["M"]),
                seed=seed,
                **kwargs,
            )
        )
    return configs
