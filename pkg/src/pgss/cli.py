"""Command line front end.

Exit codes: 0 success, 1 usage error, 2 input data error, 3 numeric error,
4 diagnostic failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .analytics import log_zero_prob_sequence, variance_track
from .errors import InputError, InternalError, NumericError
from .harness import (
    OUTPUT_DIR_ENV,
    PAPER_SPEC,
    ExperimentConfig,
    default_output_dir,
    read_series,
    run_diagnostics,
    run_figure1,
    run_filter,
    write_csv,
    write_filter_report,
)
from .model import ModelSpec

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_NUMERIC, EXIT_DIAGNOSTIC = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_config(path):
    """Parse ``key = value`` lines; '#' starts a comment, quotes around values are dropped."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line or line.startswith("["):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        out[key.replace("-", "_")] = value.strip("'\"")
    return out


def _floats(text):
    return tuple(float(v) for v in str(text).strip("[]()").replace(",", " ").split())


def _ints(text):
    return tuple(int(v) for v in str(text).strip("[]()").replace(",", " ").split())


_CONVERT = {
    "a0": float, "b0": float, "gamma": float, "seed": int, "horizon": int,
    "replicates": int, "n_jobs": int, "h": int, "sampler": str, "output": str,
    "quantiles": _floats, "histograms": _ints, "tower_n": int, "level": float,
}


def _settings(args):
    """Config-file values overridden by any flag given on the command line."""
    values = read_config(args.config) if args.config else {}
    unknown = set(values) - set(_CONVERT)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    try:
        merged = {k: _CONVERT[k](v) for k, v in values.items()}
    except ValueError as exc:
        raise UsageError(f"bad config value: {exc}") from None
    for k, v in vars(args).items():
        if v is not None and k in _CONVERT:
            merged[k] = v
    return merged


def _spec(s):
    return ModelSpec(s.get("a0", PAPER_SPEC.a0), s.get("b0", PAPER_SPEC.b0), s.get("gamma", PAPER_SPEC.gamma))


def _output(s):
    return Path(s["output"]) if "output" in s else default_output_dir()


def cmd_figure1(args, s):
    if "seed" not in s:
        raise UsageError("figure1 requires --seed (or seed = ... in the config file)")
    cfg = ExperimentConfig(
        seed=s["seed"],
        spec=_spec(s),
        horizon=s.get("horizon", 2000),
        replicates=s.get("replicates", 50_000),
        quantiles=s.get("quantiles", (0.1, 0.5, 0.9)),
        histogram_horizons=s.get("histograms", (50, 200)),
        sampler=s.get("sampler", "chain"),
        output_dir=_output(s),
        n_jobs=s.get("n_jobs", 1),
    )
    result = run_figure1(cfg)
    for p in result.paths:
        print(p)
    return EXIT_OK


def cmd_filter(args, s):
    series = read_series(args.input)
    report = run_filter(series, _spec(s), h=s.get("h", 0), replicates=s.get("replicates", 10_000),
                        seed=s.get("seed", 0), quantiles=s.get("quantiles", (0.1, 0.5, 0.9)),
                        sampler=s.get("sampler", "chain"))
    for p in write_filter_report(report, _output(s)):
        print(p)
    return EXIT_OK


def cmd_diagnostics(args, s):
    report = run_diagnostics(spec=_spec(s), T=s.get("horizon", 200), level=s.get("level", 0.99),
                             tower_n=s.get("tower_n", 10_000), seed=s.get("seed", 0))
    text = report.to_json()
    if "output" in s:
        out = Path(s["output"])
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return EXIT_OK if report.passed else EXIT_DIAGNOSTIC


def _emit_table(s, header, rows):
    if "output" in s:
        write_csv(s["output"], header, rows)
    else:
        import csv
        from .harness import fmt

        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def cmd_zeroprob(args, s):
    import numpy as np

    spec = _spec(s)
    T = s.get("horizon", 200)
    lp = log_zero_prob_sequence(spec, T)
    _emit_table(s, ("t", "unit_zero_prob", "zero_prob"),
                zip(range(1, T + 1), np.exp(lp), np.exp(spec.a0 * lp)))
    return EXIT_OK


def cmd_moments(args, s):
    spec = _spec(s)
    T = s.get("horizon", 200)
    m = variance_track(spec, T)
    _emit_table(s, ("t", "mean", "var_a", "var_y", "b"),
                zip(m.t, m.mean_y, m.var_a, m.var_y, m.b_trace[1:]))
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="pgss", description="Poisson-gamma state space model tools.",
                     epilog=f"Output directory defaults to ${OUTPUT_DIR_ENV} or ./pgss_output.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, horizon=True):
        p.add_argument("--config", help="key = value file; flags override it")
        p.add_argument("--a0", type=float, help="initial gamma shape (default 6.5)")
        p.add_argument("--b0", type=float, help="initial gamma rate (default 1.2)")
        p.add_argument("--gamma", type=float, help="discount factor in (0, 1) (default 0.75)")
        p.add_argument("--output", help="output path")
        if horizon:
            p.add_argument("--horizon", type=int, help="number of forecast steps T")

    p = sub.add_parser("figure1", help="simulate the marginal predictive and tabulate it")
    common(p)
    p.add_argument("--seed", type=int, help="base seed (required)")
    p.add_argument("--replicates", type=int, help="Monte Carlo size N (default 50000)")
    p.add_argument("--sampler", choices=("path", "chain"))
    p.add_argument("--quantiles", type=_floats, help="comma separated levels (default 0.1,0.5,0.9)")
    p.add_argument("--histograms", type=_ints, help="comma separated horizons (default 50,200)")
    p.add_argument("--n-jobs", dest="n_jobs", type=int, help="worker threads")
    p.set_defaults(func=cmd_figure1)

    p = sub.add_parser("filter", help="filter a CSV of counts and forecast past its end")
    common(p, horizon=False)
    p.add_argument("input", help="CSV with a 'y' column")
    p.add_argument("--h", type=int, help="forecast steps after the last observation")
    p.add_argument("--seed", type=int)
    p.add_argument("--replicates", type=int)
    p.add_argument("--sampler", choices=("path", "chain"))
    p.add_argument("--quantiles", type=_floats)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("diagnostics", help="numerical checks of the theory")
    common(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--tower-n", dest="tower_n", type=int)
    p.add_argument("--level", type=float, help="zero-probability level for crossing times")
    p.set_defaults(func=cmd_diagnostics)

    p = sub.add_parser("zeroprob", help="exact P[y_t = 0] for t = 1..T")
    common(p)
    p.set_defaults(func=cmd_zeroprob)

    p = sub.add_parser("moments", help="exact predictive mean and variance for t = 1..T")
    common(p)
    p.set_defaults(func=cmd_moments)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, _settings(args))
    except UsageError as exc:
        print(f"pgss: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"pgss: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericError, InternalError) as exc:
        print(f"pgss: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"pgss: cannot write output: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
