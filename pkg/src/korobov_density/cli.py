"""
Command line interface

Lattice construction, sampling, fitting, evaluation and the MISE sweeps.
"""
import functools
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import click

from korobov_density import __version__
from korobov_density.constants import (
    DEFAULT_OUTDIR,
    DEFAULT_S_MAX,
    DEFAULT_SHIFTS,
    OUTDIR_ENVVAR,
    WEIGHT_PRESETS,
)
from korobov_density.exceptions import ConfigurationError, DomainError, KorobovError

_logger = logging.getLogger(__name__)

PRESET_NAMES = ("fig1", "fig3", "fig5", "fig7")


def setup_logging(loglevel):
    """Setup basic logging

    Args:
      loglevel (int): minimum loglevel for emitting messages
    """
    logformat = "[%(asctime)s] %(levelname)s:%(name)s:%(message)s"
    logging.basicConfig(
        level=loglevel,
        stream=sys.stdout,
        format=logformat,
        datefmt="%Y-%m-%d %H:%M:%S",
        force=True,
    )


def _parameter_names(command):
    """Flag spellings (without dashes) and parameter names -> parameter name."""

    names = {}
    for param in command.params:
        names[param.name] = param.name
        for opt in (*param.opts, *param.secondary_opts):
            names[opt.lstrip("-").replace("-", "_")] = param.name
    return names


def read_config_file(path, commands):
    """
    Parse ``key=value`` lines into a click ``default_map``.

    A plain key applies to every subcommand that has it, ``command.key`` to
    one only. Keys are flag names (``d``, ``lambda``, ``out-csv``) or
    parameter names (``dim``, ``lam``); dashes are accepted for underscores.

    Raises
    ------
    click.BadParameter
        On malformed lines, unknown subcommands and keys no subcommand takes.
    """

    shared, scoped = {}, {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise click.BadParameter(
                f"{path}:{lineno}: expected key=value, got {line!r}", param_hint="--config"
            )
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if "." in key:
            cmd, key = key.split(".", 1)
            if cmd not in commands:
                raise click.BadParameter(
                    f"{path}:{lineno}: unknown subcommand {cmd!r}", param_hint="--config"
                )
            scoped.setdefault(cmd, []).append((lineno, key, value))
        else:
            shared[key] = (lineno, value)

    names = {cmd: _parameter_names(command) for cmd, command in commands.items()}
    for key, (lineno, _) in shared.items():
        if not any(key in n for n in names.values()):
            raise click.BadParameter(
                f"{path}:{lineno}: no subcommand takes {key!r}", param_hint="--config"
            )
    default_map = {}
    for cmd, known in names.items():
        defaults = {known[k]: v for k, (_, v) in shared.items() if k in known}
        for lineno, key, value in scoped.get(cmd, []):
            if key not in known:
                raise click.BadParameter(
                    f"{path}:{lineno}: {cmd} takes no {key!r}", param_hint="--config"
                )
            defaults[known[key]] = value
        default_map[cmd] = defaults
    return default_map


@dataclass
class RunManifest:
    """What produced an output file; written as ``<output>.manifest.json``."""

    subcommand: str
    parameters: dict
    seed: object = None
    outputs: list = field(default_factory=list)
    version: str = __version__

    def write(self, output):
        path = Path(f"{output}.manifest.json")
        path.write_text(json.dumps(asdict(self), indent=2, default=str) + "\n")
        return path


def _manifest(ctx, outputs, seed=None):
    manifest = RunManifest(
        subcommand=ctx.info_name,
        parameters=dict(ctx.params),
        seed=seed,
        outputs=[str(o) for o in outputs],
    )
    return manifest.write(outputs[0])


def _translate_errors(func):
    """Invalid input exits with 2, other failures with 1."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (DomainError, ConfigurationError) as e:
            raise click.UsageError(str(e)) from e
        except KorobovError as e:
            raise click.ClickException(str(e)) from e

    return wrapper


def _check_prime(ctx, param, value):
    from korobov_density.lattice import is_prime

    if value is not None and not is_prime(value):
        raise click.BadParameter(f"N must be prime, got {value}")
    return value


def _output_path(outdir, name):
    path = Path(name)
    if not path.is_absolute():
        path = Path(outdir) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


outdir_option = click.option(
    "--outdir",
    default=DEFAULT_OUTDIR,
    envvar=OUTDIR_ENVVAR,
    help=f"Directory for relative output paths (env {OUTDIR_ENVVAR}).",
    show_default=True,
)

weights_option = click.option(
    "--weights-preset",
    type=click.Choice(WEIGHT_PRESETS),
    default="power",
    help="Coordinate weights: power (gamma_j = j^-alpha) or unit.",
    show_default=True,
)


@click.group()
@click.version_option(version=__version__)
@click.option(
    "-v",
    "--verbose",
    "loglevel",
    flag_value=logging.INFO,
    help="Set loglevel to INFO.",
)
@click.option(
    "-vv",
    "--very-verbose",
    "loglevel",
    flag_value=logging.DEBUG,
    help="Set loglevel to DEBUG.",
)
@click.option(
    "--config",
    type=click.Path(exists=True, dir_okay=False),
    help="key=value defaults file; command.key=value scopes a key to one subcommand.",
)
@click.pass_context
def cli(ctx, loglevel, config):
    """
    Lattice-based kernel density estimation in weighted Korobov spaces
    """
    setup_logging(loglevel or logging.WARNING)
    if config is not None:
        ctx.default_map = read_config_file(config, cli.commands)


@cli.command()
@click.option("--n", type=int, required=True, callback=_check_prime, help="Prime number of lattice points.")
@click.option("--dim", type=int, required=True, help="Dimension d.")
@click.option("--alpha", type=int, default=2, help="Smoothness, 2 or 4.", show_default=True)
@weights_option
@click.option("--out", default="z.txt", help="Generating vector file.", show_default=True)
@outdir_option
@click.pass_context
@_translate_errors
def cbc(ctx, n, dim, alpha, weights_preset, out, outdir):
    """
    Component-by-component construction of a lattice generating vector
    """
    from korobov_density.kernels import ProductWeights
    from korobov_density.lattice import LatticeRule, write_generating_vector

    weights = ProductWeights.from_preset(weights_preset, dim, alpha)
    rule = LatticeRule.cbc(n, dim, alpha, weights)
    path = write_generating_vector(_output_path(outdir, out), rule)
    _manifest(ctx, [path])
    print(f"z = {' '.join(map(str, rule.z))}")
    print(f"Generating vector saved to {path}")


@cli.command()
@click.option("--d", "dim", type=int, required=True, help="Dimension d.")
@click.option("--m", type=int, required=True, help="Sample size M.")
@click.option("--seed", type=int, default=0, help="Random seed.", show_default=True)
@click.option(
    "--method",
    type=click.Choice(["factorized", "joint"]),
    default="factorized",
    help="Acceptance-rejection variant.",
    show_default=True,
)
@click.option("--out", default="sample.csv", help="Sample CSV.", show_default=True)
@outdir_option
@click.pass_context
@_translate_errors
def sample(ctx, dim, m, seed, method, out, outdir):
    """
    Draw an i.i.d. sample from the benchmark density prod_j (1 + j^-4 B_4(y_j))
    """
    from korobov_density.sampling import TestDensity, make_rng, write_sample_csv

    draw = TestDensity.benchmark(dim).draw(m, make_rng(seed), method)
    path = write_sample_csv(_output_path(outdir, out), draw.points)
    _manifest(ctx, [path], seed=seed)
    print(f"Acceptance rate per proposal stream: {m / draw.proposals}")
    print(f"Sample saved to {path}")


@cli.command()
@click.option(
    "--sample-csv",
    type=click.Path(exists=True, dir_okay=False),
    required=True,
    help="M rows x d columns in [0, 1].",
)
@click.option("--n", type=int, required=True, callback=_check_prime, help="Prime number of lattice points.")
@click.option(
    "--z-file",
    type=click.Path(exists=True, dir_okay=False),
    help="Generating vector file written by `cbc`.",
)
@click.option("--cbc/--no-cbc", "use_cbc", default=False, help="Construct the generating vector on the fly.", show_default=True)
@click.option("--alpha", type=float, default=2.0, help="Smoothness alpha > 1.", show_default=True)
@click.option("--lambda", "lam", type=float, default=0.01, help="Regularization parameter.", show_default=True)
@weights_option
@click.option("--out", default="estimator.txt", help="Estimator artifact.", show_default=True)
@outdir_option
@click.pass_context
@_translate_errors
def fit(ctx, sample_csv, n, z_file, use_cbc, alpha, lam, weights_preset, out, outdir):
    """
    Fit the lattice density estimator to a sample
    """
    from korobov_density import estimator
    from korobov_density.kernels import KorobovKernel, ProductWeights
    from korobov_density.lattice import LatticeRule, read_generating_vector
    from korobov_density.sampling import read_sample_csv

    if (z_file is None) == (not use_cbc):
        raise click.UsageError("Give exactly one of --z-file and --cbc")
    points = read_sample_csv(sample_csv)
    d = points.shape[1]
    kernel = KorobovKernel(alpha, ProductWeights.from_preset(weights_preset, d, alpha))
    if z_file is not None:
        rule = read_generating_vector(z_file)
        if rule.n != n:
            raise DomainError(f"--n {n} does not match N={rule.n} in {z_file}")
    else:
        rule = LatticeRule.cbc(n, d, alpha, kernel.weights)
    b = estimator.assemble_rhs(rule, kernel, points)
    est = estimator.fit_rhs(rule, kernel, lam, b)
    path = est.save(_output_path(outdir, out))
    _manifest(ctx, [path])
    print(f"Integral (sum of coefficients): {est.integral():.17g}")
    print(f"Galerkin residual: {est.galerkin_residual(b):.3e}")
    print(f"Estimator saved to {path}")


@cli.command(name="eval")
@click.option(
    "--estimator",
    "estimator_file",
    type=click.Path(exists=True, dir_okay=False),
    required=True,
    help="Estimator artifact written by `fit`.",
)
@click.option(
    "--points",
    type=click.Path(exists=True, dir_okay=False),
    help="CSV of evaluation points in [0, 1]^d.",
)
@click.option("--x", "coords", type=float, multiple=True, help="Coordinates of a single point (repeat per dimension).")
@_translate_errors
def evaluate(estimator_file, points, coords):
    """
    Evaluate a fitted estimator
    """
    import numpy as np

    from korobov_density.estimator import DensityEstimator
    from korobov_density.sampling import read_sample_csv

    if (points is None) == (not coords):
        raise click.UsageError("Give exactly one of --points and --x")
    est = DensityEstimator.load(estimator_file)
    x = read_sample_csv(points) if points is not None else np.array([coords])
    for value in np.atleast_1d(est(x)):
        print(format(float(value), ".17g"))


@cli.command()
@click.option("--preset", type=click.Choice(PRESET_NAMES), help="Experiment family.")
@click.option(
    "--grid-file",
    type=click.Path(exists=True, dir_okay=False),
    help="CSV with columns d, alpha, N, lambda, M.",
)
@click.option("--d", "dim", type=int, default=6, help="Dimension for presets.", show_default=True)
@click.option("--alpha", type=int, default=2, help="Smoothness for presets.", show_default=True)
@click.option("--seed", type=int, default=0, help="Root random seed.", show_default=True)
@click.option("--out-csv", default="mise.csv", help="Report CSV.", show_default=True)
@click.option("--jsonl", default=None, help="JSON-lines mirror [default: CSV name with .jsonl].")
@click.option("--gnuplot/--no-gnuplot", default=False, help="Write a gnuplot script beside the CSV.", show_default=True)
@click.option("--s-max", type=int, default=DEFAULT_S_MAX, help="Replication cap.", show_default=True)
@click.option("--shifts", type=int, default=DEFAULT_SHIFTS, help="Sobol' shifts of the evaluation grid.", show_default=True)
@click.option("--threads", type=int, default=1, help="Worker cap for replications.", show_default=True)
@weights_option
@outdir_option
@click.pass_context
@_translate_errors
def mise(ctx, preset, grid_file, dim, alpha, seed, out_csv, jsonl, gnuplot, s_max, shifts, threads, weights_preset, outdir):
    """
    Monte-Carlo MISE over a preset family or a grid file
    """
    import pandas as pd

    from korobov_density import mise as harness
    from korobov_density.presets import preset_grid, read_grid_file

    if (preset is None) == (grid_file is None):
        raise click.UsageError("Give exactly one of --preset and --grid-file")
    extra = dict(s_max=s_max, shifts=shifts, weights=weights_preset)
    if preset is not None:
        configs = preset_grid(preset, dim, alpha, seed, **extra)
    else:
        configs = read_grid_file(grid_file, seed, **extra)

    csv_path = _output_path(outdir, out_csv)
    jsonl_path = _output_path(outdir, jsonl) if jsonl else csv_path.with_suffix(".jsonl")
    # reports are appended; start from empty files
    for path in (csv_path, jsonl_path):
        if path.exists():
            _logger.info("Overwriting %s", path)
            path.unlink()
    reports = harness.sweep(configs, csv_path, jsonl_path, threads)
    outputs = [csv_path, jsonl_path]
    if gnuplot:
        outputs.append(harness.write_gnuplot_script(csv_path, x="lambda" if preset == "fig5" else "M"))
    _manifest(ctx, outputs, seed=seed)

    print(pd.DataFrame([r.as_row() for r in reports]).to_string(index=False))
    failed = [r for r in reports if r.error is not None]
    if failed:
        print(f"{len(failed)} grid point(s) failed, see {jsonl_path}")
    unconverged = sum(not r.converged for r in reports) - len(failed)
    if unconverged:
        print(f"{unconverged} grid point(s) reached S_max without meeting the CI target")
    print(f"Results saved to {csv_path}")


if __name__ == "__main__":
    cli()
