"""Command-line harness: ``qftail sweep | plan | compare | estimate``.

Exit status 0 on success, 1 on a numerical failure, 2 on bad input.
"""

from __future__ import annotations

import functools
import logging
import sys
from pathlib import Path

import click

from .errors import QFTailInputError, QFTailNumericalError
from .experiments import (
    ExperimentConfig,
    dumps_json,
    estimate_problem,
    read_problem_file,
    records_to_csv,
    run_compare,
    run_plan,
    run_sweep,
    timing_table,
)
from .genmat import db_to_linear

logger = logging.getLogger("qftail")


def _split(kind):
    def convert(ctx, param, value):
        if value is None:
            return None
        try:
            return [kind(tok) for tok in value.split(",") if tok.strip()]
        except ValueError as exc:
            raise click.BadParameter(str(exc)) from exc

    return convert


def _guard(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except QFTailInputError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except QFTailNumericalError as exc:
            click.echo(f"numerical failure: {exc}", err=True)
            sys.exit(1)

    return wrapper


def experiment_options(fn):
    opts = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), help="JSON experiment config."),
        click.option("--n", "n_values", callback=_split(int), help="Comma-separated dimensions, e.g. 10,20,30."),
        click.option("--gamma-db", "gamma_db", callback=_split(float), help="Comma-separated thresholds in dB."),
        click.option("--methods", callback=_split(str), help="Comma-separated subset of is,mc,imhof,spa,bounds."),
        click.option("--xi", type=float, help="Base of the form matrix xi^|i-j|."),
        click.option("--rho", type=float, help="Base of the covariance rho^|i-j|."),
        click.option("--mu", "mu_value", type=float, help="Common mean entry."),
        click.option("--problem-file", type=click.Path(dir_okay=False), help="Use a problem file instead of the Toeplitz family."),
        click.option("--samples-is", type=int),
        click.option("--samples-mc", type=int),
        click.option("--epsilon", type=float, help="Target relative error for planning."),
        click.option("--seed", type=int),
        click.option("--workers", type=int, help="Sampling threads (results do not depend on it)."),
        click.option("--timing/--no-timing", default=None, help="Write the seconds column (off gives reproducible bytes)."),
        click.option("--out", "output_path", type=click.Path(dir_okay=False), help="CSV destination (default stdout)."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _config(defaults: dict, config_path, **overrides) -> ExperimentConfig:
    if overrides.get("problem_file"):
        overrides["family"] = "file"
    if config_path:
        return ExperimentConfig.load(config_path, **{**defaults, **{k: v for k, v in overrides.items() if v is not None}})
    return ExperimentConfig.from_dict({**defaults, **{k: v for k, v in overrides.items() if v is not None}})


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        click.echo(text, nl=False)


@click.group()
@click.option("-v", "--verbose", count=True, help="Repeat for more log output.")
def main(verbose: int):
    """Left-tail probabilities of Gaussian quadratic forms."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@experiment_options
@_guard
def sweep(config_path, **overrides):
    """CDF over a grid of dimensions and thresholds."""
    cfg = _config({}, config_path, **overrides)
    _emit(records_to_csv(run_sweep(cfg)), cfg.output_path)


@main.command()
@experiment_options
@_guard
def plan(config_path, **overrides):
    """Runs needed by crude MC and IS for a target relative error."""
    cfg = _config({"methods": ["is", "mc"]}, config_path, **overrides)
    click.echo(f"IS run counts are pilot-based ({max(cfg.samples_is, 1000)} pilot samples)", err=True)
    _emit(records_to_csv(run_plan(cfg)), cfg.output_path)


@main.command()
@experiment_options
@click.option("--repeats", type=int, help="Timed evaluations per cell (after one warm-up).")
@_guard
def compare(config_path, repeats, **overrides):
    """Baselines against IS across dimensions, with a timing table."""
    defaults = {"n_values": [5, 10, 20, 40, 60, 80, 100], "gamma_db": [5.0], "methods": ["is", "imhof", "spa"]}
    cfg = _config(defaults, config_path, repeats=repeats, **overrides)
    records = run_compare(cfg)
    _emit(records_to_csv(records), cfg.output_path)
    if cfg.timing:
        click.echo(f"mean seconds per evaluation ({cfg.repeats} repeats)", err=True)
        click.echo(timing_table(r for r in records if not r.method.startswith("reference_")), err=True, nl=False)


@main.command()
@click.argument("problem_file", type=click.Path(dir_okay=False))
@click.option("--gamma-db", type=float, help="Threshold in dB.")
@click.option("--gamma-linear", type=float, help="Threshold on the linear scale.")
@click.option("--method", type=click.Choice(["is", "mc"]), default="is", show_default=True)
@click.option("--samples", type=int, help="Sample count (default 1e4 for is, 1e6 for mc).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=int)
@click.option("--out", "output_path", type=click.Path(dir_okay=False))
@_guard
def estimate(problem_file, gamma_db, gamma_linear, method, samples, seed, workers, output_path):
    """Estimate P(X^T Sigma X <= gamma0) for the problem in PROBLEM_FILE."""
    if (gamma_db is None) == (gamma_linear is None):
        raise click.UsageError("give exactly one of --gamma-db and --gamma-linear")
    gamma0 = db_to_linear(gamma_db) if gamma_db is not None else gamma_linear
    mu, sigma_x, sigma = read_problem_file(problem_file)
    result = estimate_problem(mu, sigma_x, sigma, gamma0, method, samples, seed, workers)
    _emit(dumps_json(result), output_path)


if __name__ == "__main__":
    main()
