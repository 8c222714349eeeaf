"""Experiment drivers behind the command line: sweeps, planning curves, baseline comparisons."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from . import baselines, bounds, planner, sampler
from .canonical import CanonicalForm, QuadFormProblem, reduce
from .errors import ConfigError, ProblemFileError, QFTailError
from .genmat import db_to_linear, toeplitz_problem

logger = logging.getLogger(__name__)

CSV_HEADER = ("method", "n", "gamma_db", "value", "rel_error", "runs", "seconds", "reliable")
METHODS = ("is", "mc", "imhof", "spa", "bounds")
FAMILIES = ("toeplitz", "file")
TIMING_REPEATS = 10


def fmt_float(x: float) -> str:
    return "%.17g" % x


@dataclass
class ExperimentConfig:
    family: str = "toeplitz"
    n_values: list[int] = field(default_factory=lambda: [10, 20, 30])
    xi: float = 0.4
    rho: float = 0.8
    mu_value: float = 1.0
    gamma_db: list[float] = field(default_factory=lambda: [-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0])
    methods: list[str] = field(default_factory=lambda: ["is"])
    samples_mc: int = 1_000_000
    samples_is: int = 10_000
    epsilon: float = 0.05
    seed: int = 0
    output_path: str | None = None
    problem_file: str | None = None
    workers: int | None = None
    timing: bool = True
    repeats: int = TIMING_REPEATS

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise ConfigError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.family == "file" and not self.problem_file:
            raise ConfigError("family 'file' needs problem_file")
        if self.family == "toeplitz" and not self.n_values:
            raise ConfigError("n_values must not be empty")
        if any(int(n) < 1 for n in self.n_values):
            raise ConfigError("n_values must be positive")
        if not self.gamma_db:
            raise ConfigError("gamma_db must not be empty")
        if not self.methods:
            raise ConfigError("methods must not be empty")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; choose from {METHODS}")
        if self.samples_mc < 1 or self.samples_is < 2:
            raise ConfigError("samples_mc must be >= 1 and samples_is >= 2")
        if not 0 < self.epsilon < 1:
            raise ConfigError("epsilon must lie in (0, 1)")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if self.family == "toeplitz":
            for name in ("xi", "rho"):
                if not 0 < getattr(self, name) < 1:
                    raise ConfigError(f"{name} must lie in (0, 1)")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path: str | Path, **overrides) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(data)


@dataclass(frozen=True)
class SweepRecord:
    method: str
    n: int
    gamma_db: float
    value: float | None
    rel_error: float | None = None
    runs: int | None = None
    seconds: float | None = None
    reliable: bool = True

    def row(self) -> list[str]:
        def f(x):
            return "" if x is None else fmt_float(x)

        return [
            self.method,
            str(self.n),
            fmt_float(self.gamma_db),
            f(self.value),
            f(self.rel_error),
            "" if self.runs is None else str(self.runs),
            f(self.seconds),
            "true" if self.reliable else "false",
        ]


def records_to_csv(records: Iterable[SweepRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rec in records:
        writer.writerow(rec.row())
    return buf.getvalue()


# ------------------------------------------------------------ problems

def read_problem_file(path: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Parse the plain-text problem format.

    Line 1 holds N; then N rows of Sigma_X, N rows of Sigma and one row of
    mu, whitespace separated.  Blank lines and ``#`` comments are ignored.
    Returns ``(mu, sigma_x, sigma)``.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ProblemFileError(f"cannot read problem file {path}: {exc}") from exc
    lines = [ln.split("#", 1)[0].split() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    try:
        if not lines or len(lines[0]) != 1:
            raise ValueError("first line must hold the dimension N")
        n = int(lines[0][0])
        if n < 1:
            raise ValueError("N must be positive")
        body = lines[1:]
        if len(body) != 2 * n + 1:
            raise ValueError(f"expected {2 * n + 1} data lines after N, found {len(body)}")
        rows = [[float(tok) for tok in ln] for ln in body]
    except ValueError as exc:
        raise ProblemFileError(f"{path}: {exc}") from exc
    if any(len(r) != n for r in rows):
        raise ProblemFileError(f"{path}: every data line must hold exactly {n} numbers")
    arr = np.array(rows)
    return arr[2 * n], arr[:n], arr[n : 2 * n]


def write_problem_file(path: str | Path, mu, sigma_x, sigma) -> None:
    mu = np.asarray(mu, dtype=float)
    lines = [str(mu.size)]
    for m in (sigma_x, sigma):
        lines += [" ".join(fmt_float(v) for v in row) for row in np.asarray(m, dtype=float)]
    lines.append(" ".join(fmt_float(v) for v in mu))
    Path(path).write_text("\n".join(lines) + "\n")


def _forms(cfg: ExperimentConfig) -> list[tuple[int, CanonicalForm]]:
    if cfg.family == "file":
        mu, sigma_x, sigma = read_problem_file(cfg.problem_file)
        return [(mu.size, reduce(QuadFormProblem(mu, sigma_x, sigma, 1.0)))]
    return [(n, reduce(toeplitz_problem(int(n), cfg.xi, cfg.rho, cfg.mu_value, 1.0))) for n in cfg.n_values]


# --------------------------------------------------------------- cells

def _evaluate(method: str, cf: CanonicalForm, gamma0: float, cfg: ExperimentConfig) -> SweepRecord:
    """One (method, threshold) cell; n and gamma_db are filled in by the caller."""
    if method == "is":
        r = sampler.importance_sampling(cf, gamma0, cfg.samples_is, cfg.seed, workers=cfg.workers)
        return SweepRecord("is", 0, 0.0, r.estimate, r.rel_error, r.samples, r.seconds, r.estimate > 0)
    if method == "mc":
        r = sampler.naive_mc(cf, gamma0, cfg.samples_mc, cfg.seed, workers=cfg.workers)
        return SweepRecord("mc", 0, 0.0, r.estimate, r.rel_error, r.samples, r.seconds, r.estimate > 0)
    start = time.perf_counter()
    if method == "imhof":
        value, info = baselines.imhof_cdf(cf, gamma0, full_output=True)
        return SweepRecord("imhof", 0, 0.0, value, None, None, time.perf_counter() - start, info.reliable)
    if method == "spa":
        value = baselines.spa_cdf(cf, gamma0)
        return SweepRecord("spa", 0, 0.0, value, None, None, time.perf_counter() - start, True)
    if method == "bounds":
        value = bounds.marcum_lower_bound(cf, gamma0)
        return SweepRecord("bounds", 0, 0.0, value, None, None, time.perf_counter() - start, True)
    raise ConfigError(f"unknown method {method!r}")


def _cell(method, n, db, cf, cfg, evaluate: Callable = _evaluate) -> SweepRecord:
    try:
        rec = evaluate(method, cf, db_to_linear(db), cfg)
    except QFTailError as exc:
        logger.warning("%s failed at n=%d, %g dB: %s", method, n, db, exc)
        rec = SweepRecord(method, n, db, None, reliable=False)
    seconds = rec.seconds if cfg.timing else None
    return SweepRecord(rec.method, n, float(db), rec.value, rec.rel_error, rec.runs, seconds, rec.reliable)


def run_sweep(cfg: ExperimentConfig) -> list[SweepRecord]:
    """Every (method, n, threshold) combination of ``cfg``."""
    records = []
    for n, cf in _forms(cfg):
        for db in cfg.gamma_db:
            for method in cfg.methods:
                records.append(_cell(method, n, db, cf, cfg))
    return records


def run_plan(cfg: ExperimentConfig) -> list[SweepRecord]:
    """Runs needed by crude MC and by IS for relative error ``cfg.epsilon``.

    One IS run of ``samples_is`` draws serves both as the probability plugged
    into the crude-MC formula and as the variance pilot for IS.
    """
    spec = planner.AccuracySpec(epsilon=cfg.epsilon)
    records = []
    for n, cf in _forms(cfg):
        for db in cfg.gamma_db:
            g = db_to_linear(db)
            try:
                start = time.perf_counter()
                runs_is, pilot = planner.is_runs_required(
                    cf, g, spec, pilot=max(cfg.samples_is, 1000), seed=cfg.seed, workers=cfg.workers, full_output=True
                )
                runs_mc = planner.mc_runs_required(pilot.estimate, spec) if pilot.estimate < 1 else 1
                elapsed = time.perf_counter() - start if cfg.timing else None
                records.append(SweepRecord("mc", n, float(db), pilot.estimate, None, runs_mc, elapsed, True))
                records.append(SweepRecord("is", n, float(db), pilot.estimate, pilot.rel_error, runs_is, elapsed, True))
            except QFTailError as exc:
                logger.warning("planning failed at n=%d, %g dB: %s", n, db, exc)
                records.append(SweepRecord("mc", n, float(db), None, reliable=False))
                records.append(SweepRecord("is", n, float(db), None, reliable=False))
    return records


def load_series_reference() -> list[dict]:
    text = resources.files("qftail").joinpath("data/series_reference.csv").read_text()
    rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    return [
        {k: float(v) for k, v in row.items()}
        for row in csv.DictReader(rows)
    ]


def _reference_rows(cfg: ExperimentConfig, n: int, db: float) -> list[SweepRecord]:
    if cfg.family != "toeplitz" or not math.isclose(db, 5.0):
        return []
    out = []
    for row in load_series_reference():
        if (
            int(row["n"]) == n
            and math.isclose(row["xi"], cfg.xi)
            and math.isclose(row["rho"], cfg.rho)
            and math.isclose(row["mu"], cfg.mu_value)
        ):
            out.append(SweepRecord("reference_m200", n, float(db), row["m200"]))
            out.append(SweepRecord("reference_m500", n, float(db), row["m500"]))
    return out


def _timed(method, cf, g, cfg) -> SweepRecord:
    # warm-up call excluded from the mean
    first = _evaluate(method, cf, g, cfg)
    total = 0.0
    for _ in range(cfg.repeats):
        start = time.perf_counter()
        _evaluate(method, cf, g, cfg)
        total += time.perf_counter() - start
    return SweepRecord(first.method, 0, 0.0, first.value, first.rel_error, first.runs, total / cfg.repeats, first.reliable)


def run_compare(cfg: ExperimentConfig) -> list[SweepRecord]:
    """Per-method values plus mean wall time over ``cfg.repeats`` evaluations.

    Rows for the m-term series approximation come from bundled reference
    data and are never recomputed.
    """
    records = []
    for n, cf in _forms(cfg):
        for db in cfg.gamma_db:
            for method in cfg.methods:
                records.append(_cell(method, n, db, cf, cfg, evaluate=_timed))
            records.extend(_reference_rows(cfg, n, db))
    return records


def timing_table(records: Iterable[SweepRecord]) -> str:
    """Plain-text table of mean seconds, one row per method and one column per n."""
    records = [r for r in records if r.seconds is not None]
    ns = sorted({r.n for r in records})
    methods = list(dict.fromkeys(r.method for r in records))
    cells = {(r.method, r.n): r.seconds for r in records}
    width = max([len(m) for m in methods] + [6])
    lines = [" " * width + "".join(f"{n:>12d}" for n in ns)]
    for m in methods:
        vals = "".join(f"{cells[(m, n)]:>12.5f}" if (m, n) in cells else f"{'':>12}" for n in ns)
        lines.append(f"{m:<{width}}{vals}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------ estimate

def estimate_problem(
    mu, sigma_x, sigma, gamma0: float, method: str = "is", samples: int | None = None, seed: int = 0,
    workers: int | None = None,
) -> dict:
    """Single estimate with its lower bound, as a flat dict ready for JSON."""
    cf = reduce(QuadFormProblem(mu, sigma_x, sigma, gamma0))
    if method == "is":
        res = sampler.importance_sampling(cf, gamma0, samples or 10_000, seed, workers=workers)
    elif method == "mc":
        res = sampler.naive_mc(cf, gamma0, samples or 1_000_000, seed, workers=workers)
    else:
        raise ConfigError(f"estimate supports methods 'is' and 'mc', got {method!r}")
    report = bounds.bound_report(cf, gamma0)
    out = res.as_dict()
    out.update(n=cf.n_original, d=cf.d, gamma0=float(gamma0), seed=seed)
    out.update(report.as_dict())
    return out


def dumps_json(obj: dict) -> str:
    """Flat JSON object with every float written to 17 significant digits."""
    parts = []
    for key, value in obj.items():
        if isinstance(value, float):
            text = fmt_float(value) if math.isfinite(value) else "null"
        else:
            text = json.dumps(value)
        parts.append(f"  {json.dumps(key)}: {text}")
    return "{\n" + ",\n".join(parts) + "\n}\n"
