"""
MISE harness

Monte-Carlo estimate of the mean integrated squared error of the lattice
density estimator. Each replication draws a fresh sample, fits, and averages
the squared error over the N * L points {x_n + p_l} of the shifted lattice.
Replications are doubled (8, 16, 32, ...) until the 95% half-width drops
below a fraction of the estimate or S_max is reached.
"""
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from alive_progress import alive_bar
from fire import Fire
from joblib import Parallel, delayed
from scipy import stats

from korobov_density.constants import (
    CI_LEVEL,
    DEFAULT_CI_RATIO,
    DEFAULT_S_INITIAL,
    DEFAULT_S_MAX,
    DEFAULT_SHIFTS,
    REPORT_COLUMNS,
)
from korobov_density.estimator import fit, fit_exact
from korobov_density.exceptions import DomainError, KorobovError
from korobov_density.kernels import KorobovKernel, ProductWeights
from korobov_density.lattice import LatticeRule, is_prime
from korobov_density.qmc import ShiftSet, generate_shifts
from korobov_density.sampling import TestDensity, make_rng

_logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MiseConfig:
    """
    One point of a MISE experiment.

    Attributes
    ----------
    d, alpha, n, lam, m : dimension, smoothness, lattice size, regularization, sample size
    shifts : int
        Number L of Sobol' shifts of the evaluation grid.
    s_max : int
        Replication cap.
    s_initial : int
        First batch of the doubling schedule, at least 2.
    ci_ratio_target : float
        Stop once the half-width is at most this fraction of the estimate.
    seed : int
        Root seed; replication k uses the stream (seed, k).
    weights : str
        Weight preset, see :meth:`ProductWeights.from_preset`.
    z : tuple, optional
        Generating vector; computed by CBC when omitted.
    method : str
        Sampler variant, ``factorized`` or ``joint``.
    """

    d: int
    alpha: float
    n: int
    lam: float
    m: int
    shifts: int = DEFAULT_SHIFTS
    s_max: int = DEFAULT_S_MAX
    s_initial: int = DEFAULT_S_INITIAL
    ci_ratio_target: float = DEFAULT_CI_RATIO
    seed: int = 0
    weights: str = "power"
    z: Optional[tuple] = None
    method: str = "factorized"

    def __post_init__(self):
        if self.d < 1:
            raise DomainError(f"Dimension must be positive, got {self.d}")
        if not is_prime(self.n):
            raise DomainError(f"N must be prime, got {self.n}")
        if not self.lam > 0:
            raise DomainError(f"Regularization lambda must be positive, got {self.lam}")
        if self.m < 1:
            raise DomainError(f"Sample size must be positive, got {self.m}")
        if self.shifts < 1:
            raise DomainError(f"Shift count must be positive, got {self.shifts}")
        if not 0 < self.ci_ratio_target < 1:
            raise DomainError(
                f"ci_ratio_target must lie in (0, 1), got {self.ci_ratio_target}"
            )
        if self.s_initial < 2 or self.s_max < self.s_initial:
            raise DomainError(
                f"Need 2 <= s_initial <= s_max, got {self.s_initial} and {self.s_max}"
            )
        if self.z is not None:
            object.__setattr__(self, "z", tuple(int(v) for v in self.z))

    def kernel(self):
        return KorobovKernel(
            self.alpha, ProductWeights.from_preset(self.weights, self.d, self.alpha)
        )

    def rule(self, kernel=None):
        if self.z is not None:
            return LatticeRule(self.n, self.z)
        kernel = kernel or self.kernel()
        return LatticeRule.cbc(self.n, self.d, self.alpha, kernel.weights)

    def as_dict(self):
        return asdict(self)


@dataclass
class MiseReport:
    config: MiseConfig
    mise: float
    ci_half_width: float
    s_used: int
    integral_mean: float
    wall_time: float
    converged: bool
    error: Optional[str] = None

    def as_row(self):
        """One CSV row, keys in ``REPORT_COLUMNS`` order."""

        cfg = self.config
        values = [
            cfg.d,
            cfg.alpha,
            cfg.n,
            cfg.lam,
            cfg.m,
            self.s_used,
            self.mise,
            self.ci_half_width,
            self.integral_mean,
            cfg.seed,
            self.wall_time,
        ]
        return dict(zip(REPORT_COLUMNS, values))

    def as_json(self):
        res = {k: v for k, v in asdict(self).items() if k != "config"}
        res["config"] = self.config.as_dict()
        return res


@dataclass
class BiasVarianceReport:
    """Grid estimates of ||E f^ - f||^2 and E ||f^ - E f^||^2 from S replications."""

    bias_squared: float
    variance: float
    variance_half_width: float
    mise: float
    mise_half_width: float
    replications: int
    per_replication: np.ndarray = field(repr=False, default=None)

    @property
    def total(self):
        return self.bias_squared + self.variance


def confidence_interval(values, level=CI_LEVEL):
    """Mean and normal-approximation half-width z_{(1+level)/2} * std / sqrt(S)."""

    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    if len(values) < 2:
        return mean, float("inf")
    z = stats.norm.ppf(0.5 + level / 2)
    return mean, float(z * values.std(ddof=1) / np.sqrt(len(values)))


class MiseExperiment:
    """
    Everything fixed for one configuration: lattice, kernel, density, shift
    grid and the exact density values on the grid.

    ``density`` defaults to the benchmark :class:`TestDensity`; anything with
    ``__call__(points)`` and ``sample(m, rng, method)`` works. ``fitter``
    defaults to :func:`korobov_density.estimator.fit` and must return a
    :class:`DensityEstimator`.
    """

    def __init__(self, config, density=None, fitter=None, shifts=None):
        self.config = config
        self.kernel = config.kernel()
        self.rule = config.rule(self.kernel)
        self.density = density if density is not None else TestDensity.benchmark(config.d)
        self.fitter = fitter if fitter is not None else fit
        if shifts is None:
            shifts = generate_shifts(config.shifts, config.d)
        elif not isinstance(shifts, ShiftSet):
            shifts = ShiftSet(np.atleast_2d(np.array(shifts, dtype=float)))
        self.shifts = shifts
        self._truth = None
        self._ideal = None

    def grid_points(self):
        """The (L, N, d) array {x_n + p_l}, column n in lattice order."""

        pts = self.rule.points()[None, :, :] + self.shifts.points[:, None, :]
        return np.mod(pts, 1.0)

    @property
    def truth(self):
        if self._truth is None:
            self._truth = np.asarray(self.density(self.grid_points()), dtype=float)
        return self._truth

    def grid_error(self, estimator):
        """(1 / (N L)) sum_{n, l} |f^(x_n + p_l) - f(x_n + p_l)|^2."""

        values = estimator.evaluate_shifted_grid(self.shifts)
        return float(np.mean((values - self.truth) ** 2))

    def fit_replication(self, k):
        rng = make_rng(self.config.seed, k)
        sample = self.density.sample(self.config.m, rng, self.config.method)
        return self.fitter(self.rule, self.kernel, self.config.lam, sample)

    def replicate(self, k):
        """Squared grid error and integral of replication k."""

        est = self.fit_replication(k)
        return self.grid_error(est), est.integral()

    def _run(self, indices, threads):
        if threads == 1 or len(indices) == 1:
            return [self.replicate(k) for k in indices]
        # results come back in submission order
        return Parallel(n_jobs=threads, prefer="threads")(
            delayed(self.replicate)(k) for k in indices
        )

    def estimate(self, threads=1):
        """Run the doubling schedule; returns a :class:`MiseReport`."""

        cfg = self.config
        start = time.perf_counter()
        _ = self.truth
        errors, integrals = [], []
        target = cfg.s_initial
        converged = False
        while True:
            batch = range(len(errors), min(target, cfg.s_max))
            for err, integral in self._run(list(batch), threads):
                errors.append(err)
                integrals.append(integral)
            mean, half = confidence_interval(errors)
            _logger.debug(
                "S=%d mise=%.6e half-width=%.3e", len(errors), mean, half
            )
            if half <= cfg.ci_ratio_target * mean:
                converged = True
                break
            if len(errors) >= cfg.s_max:
                _logger.warning(
                    "CI target not met after S_max=%d replications for N=%d lambda=%g M=%d",
                    cfg.s_max,
                    cfg.n,
                    cfg.lam,
                    cfg.m,
                )
                break
            target *= 2
        return MiseReport(
            config=cfg,
            mise=max(mean, 0.0),
            ci_half_width=half,
            s_used=len(errors),
            integral_mean=float(np.mean(integrals)),
            wall_time=time.perf_counter() - start,
            converged=converged,
        )

    def ideal_estimator(self):
        """f_N^lambda, the fit with the exact functional b_j = int K(x_j, y) f(y) dy."""

        if self._ideal is None:
            embedding = self.density.kernel_embedding(self.kernel)
            self._ideal = fit_exact(self.rule, self.kernel, self.config.lam, embedding)
        return self._ideal

    def decompose(self, replications=None, threads=1):
        """
        Split the grid MISE into squared bias of f_N^lambda and variance.

        Uses ``replications`` replications (default ``s_initial``). The sum of
        the two parts matches the MISE estimate up to Monte-Carlo error.
        """

        s = replications or self.config.s_initial
        ideal = self.ideal_estimator().evaluate_shifted_grid(self.shifts)
        bias_sq = float(np.mean((ideal - self.truth) ** 2))

        def one(k):
            values = self.fit_replication(k).evaluate_shifted_grid(self.shifts)
            return (
                float(np.mean((values - ideal) ** 2)),
                float(np.mean((values - self.truth) ** 2)),
            )

        if threads == 1:
            pairs = [one(k) for k in range(s)]
        else:
            pairs = Parallel(n_jobs=threads, prefer="threads")(
                delayed(one)(k) for k in range(s)
            )
        pairs = np.array(pairs)
        variance, variance_half = confidence_interval(pairs[:, 0])
        mise, mise_half = confidence_interval(pairs[:, 1])
        return BiasVarianceReport(
            bias_squared=bias_sq,
            variance=variance,
            variance_half_width=variance_half,
            mise=mise,
            mise_half_width=mise_half,
            replications=s,
            per_replication=pairs,
        )

    def exact_bias_squared(self):
        """
        ||f_N^lambda - f||_{L2}^2 = c^T K~ c - 2 c.b + ||f||^2 with the exact b.

        Only available for densities with a closed-form L2 norm.
        """

        ideal = self.ideal_estimator()
        b = self.density.kernel_embedding(self.kernel)(self.rule.points())
        value = (
            ideal.l2_norm_squared()
            - 2 * float(ideal.coefficients @ b)
            + self.density.l2_norm_squared()
        )
        return max(value, 0.0)


def estimate_mise(config, threads=1, density=None, fitter=None, shifts=None):
    """
    MISE of one configuration.

    Parameters
    ----------
    config : MiseConfig
    threads : int
        joblib workers for the replications.
    density, fitter, shifts
        Overrides passed to :class:`MiseExperiment`.

    Returns
    -------
    MiseReport
        ``converged`` is False when S_max was reached before the CI target.
    """

    return MiseExperiment(config, density, fitter, shifts).estimate(threads)


def _failed_report(config, err, wall_time):
    return MiseReport(
        config=config,
        mise=float("nan"),
        ci_half_width=float("nan"),
        s_used=0,
        integral_mean=float("nan"),
        wall_time=wall_time,
        converged=False,
        error=f"{type(err).__name__}: {err}",
    )


def append_report(report, out_csv=None, jsonl=None):
    """Append one report to the CSV (header on first write) and the JSON-lines mirror."""

    if out_csv is not None:
        out_csv = Path(out_csv)
        pd.DataFrame([report.as_row()], columns=REPORT_COLUMNS).to_csv(
            out_csv,
            mode="a",
            header=not out_csv.exists() or out_csv.stat().st_size == 0,
            index=False,
            float_format="%.10g",
        )
    if jsonl is not None:
        with open(jsonl, "a") as fp:
            fp.write(json.dumps(report.as_json()) + "\n")


def sweep(configs, out_csv=None, jsonl=None, threads=1):
    """
    Estimate every configuration, streaming reports to disk as they finish.

    A failing grid point is logged and recorded with its error message; the
    remaining points still run.
    """

    configs = list(configs)
    if not configs:
        raise DomainError("Empty sweep grid")
    reports = []
    with alive_bar(
        len(configs),
        length=10,
        title=f"MISE over {len(configs)} grid points...",
        bar="circles",
        disable=not sys.stdout.isatty(),
    ) as bar:
        for cfg in configs:
            bar.text = f"-> N={cfg.n} lambda={cfg.lam:g} M={cfg.m}"
            start = time.perf_counter()
            try:
                report = estimate_mise(cfg, threads)
            except (KorobovError, ValueError, np.linalg.LinAlgError) as e:
                _logger.error("Grid point %s failed: %s", cfg, e)
                report = _failed_report(cfg, e, time.perf_counter() - start)
            append_report(report, out_csv, jsonl)
            reports.append(report)
            bar()
    return reports


def loglog_slope(x, y):
    """Least-squares slope of log y against log x."""

    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def write_gnuplot_script(csv_path, x="M"):
    """Log-log plot script of mise against ``x``, one curve per lambda or N, beside the CSV."""

    csv_path = Path(csv_path)
    script = csv_path.with_suffix(".gp")
    script.write_text(
        "\n".join(
            [
                "set datafile separator ','",
                "set key autotitle columnhead",
                "set logscale xy",
                f"set xlabel '{x}'",
                "set ylabel 'MISE'",
                "set terminal pngcairo size 800,600",
                f"set output '{csv_path.with_suffix('.png').name}'",
                f"plot '{csv_path.name}' using '{x}':'mise' with linespoints title 'MISE'",
                "",
            ]
        )
    )
    return script


def _mise_main(
    d, alpha, n, lam, m, seed=0, shifts=DEFAULT_SHIFTS, weights="power", s_max=DEFAULT_S_MAX, threads=1
):
    cfg = MiseConfig(d, alpha, n, lam, m, shifts=shifts, s_max=s_max, seed=seed, weights=weights)
    return estimate_mise(cfg, threads).as_row()


if __name__ == "__main__":
    Fire(_mise_main)
