"""Experiment runners and file formats.

Files written here are plain CSV (header row, LF endings, floats with 17
significant digits so they re-parse to the same double) and a JSON manifest.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import (
    check_monotone_in_b,
    check_monotone_in_t,
    first_crossing,
    fixed_point_lower_bound,
    log_zero_prob_sequence,
    scan_fixed_point_gap,
    tower_crosscheck,
    variance_track,
    zero_prob_sequence,
)
from .errors import InputError
from .model import ModelSpec, filter_series, one_step_predictive, propagate_prior
from .simulate import SAMPLERS, build_ensemble, summarize

OUTPUT_DIR_ENV = "PGSS_OUTPUT_DIR"
SUMMARY_COLUMNS = ("t", "mean", "q10", "q50", "q90", "max", "zero_rate",
                   "analytic_mean", "analytic_var", "exact_zero_prob")
PAPER_SPEC = ModelSpec(6.5, 1.2, 0.75)


def fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def default_output_dir():
    return Path(os.environ.get(OUTPUT_DIR_ENV, "pgss_output"))


def quantile_column(q):
    label = f"{100 * q:g}".replace(".", "_")
    return f"q{label}"


def write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="")


def read_csv_columns(path):
    """Parse a numeric CSV into {column: ndarray}; integer columns stay integer."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        raw = list(reader)
    out = {}
    for j, name in enumerate(header):
        col = [r[j] for r in raw]
        try:
            out[name] = np.array([int(v) for v in col], dtype=np.int64)
        except ValueError:
            out[name] = np.array([float(v) for v in col])
    return out


# ----------------------------------------------------------------------------
# observed series


@dataclass(frozen=True)
class ObservedSeries:
    counts: np.ndarray
    timestamps: list | None = None

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 1 or counts.size == 0:
            raise InputError("series must contain at least one count")
        if not np.issubdtype(counts.dtype, np.integer) or np.any(counts < 0):
            raise InputError("counts must be nonnegative integers")
        object.__setattr__(self, "counts", counts.astype(np.int64))
        if self.timestamps is not None and len(self.timestamps) != counts.size:
            raise InputError("timestamps and counts differ in length")


def parse_series(text):
    """Read a CSV with a required ``y`` column and an optional ``t`` column.

    Errors name the 1-based line of the file that failed.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise InputError("line 1: empty file, expected a header row") from None
    if "y" not in header:
        raise InputError(f"line 1: header must contain a 'y' column, got {header}")
    iy = header.index("y")
    it = header.index("t") if "t" in header else None
    counts, stamps = [], []
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise InputError(f"line {line}: expected {len(header)} fields, got {len(row)}")
        cell = row[iy].strip()
        try:
            y = int(cell)
        except ValueError:
            raise InputError(f"line {line}: count {cell!r} is not an integer") from None
        if y < 0:
            raise InputError(f"line {line}: count {y} is negative")
        counts.append(y)
        if it is not None:
            stamps.append(row[it].strip())
    if not counts:
        raise InputError("no observations after the header")
    return ObservedSeries(np.array(counts, dtype=np.int64), stamps if it is not None else None)


def read_series(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    return parse_series(text)


# ----------------------------------------------------------------------------
# figure 1


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    spec: ModelSpec = PAPER_SPEC
    horizon: int = 2000
    replicates: int = 50_000
    quantiles: tuple = (0.1, 0.5, 0.9)
    histogram_horizons: tuple = (50, 200)
    sampler: str = "chain"
    output_dir: Path | None = None
    n_jobs: int = 1
    chunk_size: int = 1 << 15

    def __post_init__(self):
        if self.horizon < 1:
            raise InputError("horizon must be >= 1")
        if self.replicates < 1:
            raise InputError("replicates must be >= 1")
        if any(not 0.0 < q < 1.0 for q in self.quantiles):
            raise InputError("quantile levels must lie strictly within (0, 1)")
        if any(not 1 <= h <= self.horizon for h in self.histogram_horizons):
            raise InputError("histogram horizons must lie in 1..horizon")
        if self.sampler not in SAMPLERS:
            raise InputError(f"sampler must be one of {SAMPLERS}")
        if not 0 <= self.seed < 2**64:
            raise InputError("seed must be a 64-bit unsigned integer")

    def to_dict(self):
        d = asdict(self)
        d["spec"] = asdict(self.spec)
        d["quantiles"] = list(self.quantiles)
        d["histogram_horizons"] = list(self.histogram_horizons)
        d.pop("output_dir")
        # scheduling only; never changes the output
        d.pop("n_jobs")
        d.pop("chunk_size")
        return d


@dataclass
class Figure1Result:
    columns: dict
    histograms: dict
    manifest: dict
    paths: list = field(default_factory=list)


def figure1_columns(summary, spec):
    T = summary.t.size
    moments = variance_track(spec, T)
    cols = {"t": summary.t, "mean": summary.mean}
    for q, v in summary.quantiles.items():
        cols[quantile_column(q)] = v
    cols["max"] = summary.max
    cols["zero_rate"] = summary.zero_rate
    cols["analytic_mean"] = moments.mean_y
    cols["analytic_var"] = moments.var_y
    cols["exact_zero_prob"] = zero_prob_sequence(spec, T)
    return cols


def run_figure1(config, write=True):
    """Simulate the marginal predictive and tabulate it next to the exact values."""
    start = time.perf_counter()
    ens = build_ensemble(config.spec, config.horizon, config.replicates, config.seed,
                         sampler=config.sampler, n_jobs=config.n_jobs, chunk_size=config.chunk_size)
    summary = summarize(ens, config.quantiles)
    cols = figure1_columns(summary, config.spec)
    hists = {h: summary.histogram(h) for h in config.histogram_horizons}
    manifest = {
        "config": config.to_dict(),
        "seed": config.seed,
        "version": __version__,
        "wall_time_s": time.perf_counter() - start,
    }
    result = Figure1Result(cols, hists, manifest)
    if write:
        out = Path(config.output_dir) if config.output_dir is not None else default_output_dir()
        result.paths = write_figure1(result, out)
    return result


def write_figure1(result, out):
    out.mkdir(parents=True, exist_ok=True)
    names = list(result.columns)
    summary_path = out / "summary.csv"
    write_csv(summary_path, names, zip(*(result.columns[n] for n in names)))
    paths = [summary_path]
    for h, (values, freq) in result.histograms.items():
        p = out / f"histogram_t{h}.csv"
        write_csv(p, ("count", "frequency"), zip(values, freq))
        paths.append(p)
    mp = out / "manifest.json"
    mp.write_text(json.dumps(result.manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    paths.append(mp)
    return paths


# ----------------------------------------------------------------------------
# filtering


@dataclass
class FilterReport:
    filtering: dict
    forecast: dict | None
    final_spec: ModelSpec


def run_filter(series, spec, h=0, replicates=10_000, seed=0, quantiles=(0.1, 0.5, 0.9),
               sampler="chain"):
    """Filter an observed series and forecast ``h`` steps past its end.

    The forecast restarts the model from the last posterior, Gamma(a_T, b_T).
    """
    if h < 0:
        raise InputError("forecast horizon must be >= 0")
    states = filter_series(spec, series.counts)
    rows = {k: [] for k in ("t", "y", "prior_a", "prior_b", "post_a", "post_b", "pred_mean")}
    for q in quantiles:
        rows[f"pred_{quantile_column(q)}"] = []
    for prev, post, y in zip(states[:-1], states[1:], series.counts):
        prior = propagate_prior(prev, spec)
        pred = one_step_predictive(prev, spec)
        rows["t"].append(post.t)
        rows["y"].append(int(y))
        rows["prior_a"].append(prior.a)
        rows["prior_b"].append(prior.b)
        rows["post_a"].append(post.a)
        rows["post_b"].append(post.b)
        rows["pred_mean"].append(pred.mean)
        for q in quantiles:
            rows[f"pred_{quantile_column(q)}"].append(pred.quantile(q))
    filtering = {k: np.asarray(v) for k, v in rows.items()}
    final = ModelSpec(states[-1].a, states[-1].b, spec.gamma)
    forecast = None
    if h > 0:
        summary = summarize(build_ensemble(final, h, replicates, seed, sampler=sampler), quantiles)
        cols = figure1_columns(summary, final)
        cols["h"] = cols.pop("t")
        forecast = {"h": cols.pop("h"), **cols}
    return FilterReport(filtering, forecast, final)


def write_filter_report(report, out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, table in (("filter.csv", report.filtering), ("forecast.csv", report.forecast)):
        if table is None:
            continue
        p = out / name
        write_csv(p, list(table), zip(*table.values()))
        paths.append(p)
    return paths


# ----------------------------------------------------------------------------
# diagnostics


DEFAULT_GAMMAS = (0.3, 0.5, 0.75, 0.9)
DEFAULT_A0S = (0.5, 1.0, 6.5)
DEFAULT_B0_FACTORS = (None, 1.0, 2.0)  # None: absolute b0 = 0.5; else multiple of b*
DEFAULT_TOWER_PAIRS = ((5, 5), (10, 20), (50, 10))


def grid_specs(gammas=DEFAULT_GAMMAS, a0s=DEFAULT_A0S, b0_factors=DEFAULT_B0_FACTORS):
    specs = []
    for g in gammas:
        bs = 1.0 / (1.0 - g)
        for f in b0_factors:
            b0 = 0.5 if f is None else f * bs
            for a0 in a0s:
                specs.append(ModelSpec(a0, b0, g))
    return specs


@dataclass
class DiagnosticsReport:
    entries: list = field(default_factory=list)

    def add(self, name, passed, **measured):
        self.entries.append({"check": name, "passed": bool(passed), **measured})

    @property
    def passed(self):
        return all(e["passed"] for e in self.entries)

    def to_json(self):
        return json.dumps({"passed": self.passed, "entries": self.entries}, indent=2, default=_jsonable)


def _jsonable(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x))


def run_diagnostics(spec=PAPER_SPEC, T=200, gammas=DEFAULT_GAMMAS, a0s=DEFAULT_A0S,
                    b0_factors=DEFAULT_B0_FACTORS, b_grid=(0.5, 1.0, 2.0, 4.0, 8.0),
                    level=0.99, tower_pairs=DEFAULT_TOWER_PAIRS, tower_n=10_000, seed=0,
                    tol=1e-12):
    """Numerical checks of the monotonicity, fixed-point and convergence results."""
    report = DiagnosticsReport()
    for g in gammas:
        bs = 1.0 / (1.0 - g)
        bound = fixed_point_lower_bound(g)
        fixed = np.exp(log_zero_prob_sequence(ModelSpec(1.0, bs, g), T))
        report.add("lower_bound", np.all(fixed >= bound), gamma=g, bound=bound,
                   min_p=float(fixed.min()), p1=float(fixed[0]), gamma_pow_gamma=g**g,
                   p1_error=abs(float(fixed[0]) - g**g))
        gap = scan_fixed_point_gap(g)
        report.add("fixed_point_gap", gap.ok, gamma=g, lower=gap.lower, min_gap=gap.min_gap,
                   argmin_p=gap.argmin_p, n_points=gap.n_points)
        for t in (1, 10, T):
            grid = sorted(set(b_grid) | {bs, 2 * bs})
            mb = check_monotone_in_b(g, t, grid, tol)
            report.add("monotone_in_b", mb.ok, gamma=g, t=t, b_grid=grid, strict=mb.strict,
                       violations=mb.violations)
    for s in grid_specs(gammas, a0s, b0_factors):
        mt = check_monotone_in_t(s, T, tol)
        cross = first_crossing(s, level)
        report.add("monotone_in_t", mt.ok, a0=s.a0, b0=s.b0, gamma=s.gamma, T=T,
                   strict=mt.strict, violations=mt.violations)
        report.add("zero_prob_crossing", cross is not None, a0=s.a0, b0=s.b0, gamma=s.gamma,
                   level=level, first_t=cross)
    for t, t0 in tower_pairs:
        tc = tower_crosscheck(spec, t, t0, tower_n, seed)
        report.add("tower_identity", tc.passes(), a0=spec.a0, b0=spec.b0, gamma=spec.gamma,
                   t=t, t0=t0, lhs=tc.lhs, rhs_estimate=tc.rhs_estimate, mc_se=tc.mc_se,
                   z=tc.z if math.isfinite(tc.z) else None)
    return report
