"""Command-line front end: ``midasvol {summary,fit,eval,dm,simulate}``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .data import DataError, align, log_changes, read_daily_csv, read_monthly_csv
from .estimator import FitOptions, fit
from .evaluation import EvalReport, dm_matrix, dm_matrix_csv, rolling_forecast
from .model import GEPU, GEPU_CHANGE, RV, SIM_GEPU_LEVEL, ModelSpec, ParamSet, simulate
from .stats import describe, summary_table_csv

logger = logging.getLogger("midasvol")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NOT_CONVERGED = 4

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}
# flags that accumulate; a command-line occurrence replaces the config-file values
REPEATABLE = {"factor", "report", "theta", "returns"}


class UsageError(Exception):
    pass


def _shared(p):
    p.add_argument("--config", help="key = value file; command-line flags override it")
    p.add_argument("--returns", action="append", help="daily CSV (date,price or date,return)")
    p.add_argument("--macro", help="monthly CSV (month,value) of the policy-uncertainty index")
    p.add_argument("--model", help="numbered variant I..X; overrides --factor/--spec/--mode")
    p.add_argument("--factor", action="append", choices=[RV, GEPU, GEPU_CHANGE])
    p.add_argument("--spec", choices=["single", "two-factor"], default="single")
    p.add_argument("--mode", choices=["fixed", "rolling"], default="rolling")
    p.add_argument("--K", type=int, default=36)
    p.add_argument("--stride", type=int, default=22)
    p.add_argument("--window", type=int, default=22)
    p.add_argument("--link", choices=["linear", "exp"], default="linear")
    p.add_argument("--out", help="output file (directory for simulate); stdout if omitted")
    p.add_argument("--annualize", action="store_true", help="add annualized volatility to path output")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: CPU count)")
    p.add_argument("--strict", action="store_true", help="exit 4 when an optimization does not converge")
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--min-days", type=int, default=15)


def build_parser():
    parser = argparse.ArgumentParser(prog="midasvol", description="GARCH-MIDAS volatility toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("summary", help="descriptive statistics and ADF tests (CSV)")
    _shared(p)
    p.add_argument("--regression", choices=["n", "c", "ct"], default="c")

    p = sub.add_parser("fit", help="estimate a model (JSON)")
    _shared(p)
    p.add_argument("--sample-start", help="first date of the likelihood span")
    p.add_argument("--path-out", help="CSV of the filtered variance path")

    p = sub.add_parser("eval", help="rolling one-step-ahead evaluation (JSON)")
    _shared(p)
    p.add_argument("--split", help="first forecast date (default: start + calib years)")
    p.add_argument("--calib-years", type=int, default=13)
    p.add_argument("--refit-every", default="22", help="days between refits, or 'none'")
    p.add_argument("--forecasts-out", help="CSV of dates, actuals and predictions")

    p = sub.add_parser("dm", help="pairwise Diebold-Mariano matrix from eval reports (CSV)")
    _shared(p)
    p.add_argument("--report", action="append", help="eval JSON report (repeatable)")
    p.add_argument("--hac-lags", type=int, default=0)
    p.add_argument("--json", action="store_true", help="write JSON instead of the CSV matrix")

    p = sub.add_parser("simulate", help="simulate returns, macro index and variance path")
    _shared(p)
    p.add_argument("--months", type=int, default=216)
    p.add_argument("--days-per-month", type=int, default=21)
    p.add_argument("--start", default="2000-01")
    p.add_argument("--mu", type=float, default=3e-4)
    p.add_argument("--alpha", type=float, default=0.06)
    p.add_argument("--beta", type=float, default=0.92)
    p.add_argument("--theta", type=float, action="append", help="one per factor, in factor order")
    p.add_argument("--omega2", type=float, default=5.0)
    p.add_argument("--m", type=float, default=1e-4)
    return parser


def read_config(path):
    """Parse a flat ``key = value`` file into argv tokens.

    Blank lines and ``#`` comments are skipped. Keys are flag names without
    the leading dashes; a repeatable flag may appear on several lines or
    take a comma-separated list. ``true``/``false`` toggle boolean flags.
    """
    tokens = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("_", "-")
        values = [v.strip() for v in value.split(",")] if key in REPEATABLE else [value]
        for v in values:
            if v.lower() in ("true", "yes", "on"):
                tokens.append(f"--{key}")
            elif v.lower() in ("false", "no", "off"):
                continue
            else:
                tokens += [f"--{key}", v]
    return tokens


def _given(argv, key):
    flag = f"--{key}"
    return any(a == flag or a.startswith(flag + "=") for a in argv)


def _merge_config(argv):
    # config tokens go first so later command-line flags win
    if len(argv) < 1:
        return argv
    cfg = None
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            cfg = argv[i + 1]
        elif a.startswith("--config="):
            cfg = a.split("=", 1)[1]
    if cfg is None:
        return argv
    tokens = read_config(cfg)
    kept, i = [], 0
    while i < len(tokens):
        key = tokens[i][2:]
        has_value = i + 1 < len(tokens) and not tokens[i + 1].startswith("--")
        chunk = tokens[i:i + 2] if has_value else tokens[i:i + 1]
        if not (key in REPEATABLE and _given(argv, key)):
            kept += chunk
        i += len(chunk)
    return argv[:1] + kept + argv[1:]


def spec_from_args(args):
    common = dict(K=args.K, stride=args.stride, window=args.window, link=args.link)
    if args.model:
        try:
            return ModelSpec.from_model_id(args.model, **common)
        except KeyError:
            raise UsageError(f"unknown model id {args.model!r}") from None
    factors = list(args.factor or [])
    if args.spec == "two-factor":
        if RV not in factors:
            factors = [RV] + factors
        if len(factors) != 2:
            raise UsageError("two-factor spec needs exactly one macro --factor")
    else:
        factors = factors or [RV]
        if len(factors) != 1:
            raise UsageError("single spec takes one --factor; use --spec two-factor")
    try:
        return ModelSpec(factors=tuple(factors), mode=args.mode, **common)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def load_panel(args, spec=None):
    """Read and align all inputs before any computation."""
    if not args.returns:
        raise UsageError("--returns is required")
    if len(args.returns) > 1:
        raise UsageError("this command takes a single --returns file")
    returns = read_daily_csv(args.returns[0])
    factors = {}
    need_macro = spec is not None and spec.macro_factors
    if args.macro:
        level = read_monthly_csv(args.macro)
        factors[GEPU] = level
        factors[GEPU_CHANGE] = log_changes(level)
    elif need_macro:
        raise UsageError(f"--macro is required for factor(s) {list(spec.macro_factors)}")
    if spec is not None:
        factors = {k: v for k, v in factors.items() if k in spec.macro_factors}
    return align(returns, factors, min_days=args.min_days)


def _threads(args):
    return args.threads if args.threads else (os.cpu_count() or 1)


def _emit(text, path):
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _write_path_csv(path_obj, dest, annualize):
    df = path_obj.to_frame(annualize=annualize)
    df.to_csv(dest, index=False, float_format="%.10g", lineterminator="\n")


def cmd_summary(args):
    if not args.returns:
        raise UsageError("--returns is required")
    rows = []
    for p in args.returns:
        r = read_daily_csv(p)
        rows.append((Path(p).stem, "daily", describe(r.values, args.regression)))
    if args.macro:
        level = read_monthly_csv(args.macro)
        rows.append((Path(args.macro).stem, "monthly", describe(level.values, args.regression)))
        ch = log_changes(level)
        rows.append((Path(args.macro).stem + "-change", "monthly", describe(ch.values, args.regression)))
    _emit(summary_table_csv(rows), args.out)
    return EXIT_OK


def cmd_fit(args):
    spec = spec_from_args(args)
    panel = load_panel(args, spec)
    opts = FitOptions(n_restarts=args.restarts, seed=args.seed, n_jobs=_threads(args),
                      sample_start=args.sample_start)
    res = fit(panel, spec, opts)
    _emit(res.to_json(), args.out)
    if args.path_out:
        _write_path_csv(res.path, args.path_out, args.annualize)
    if not res.converged:
        logger.warning("optimizer did not converge; best point reported")
        if args.strict:
            return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_eval(args):
    spec = spec_from_args(args)
    panel = load_panel(args, spec)
    every = args.refit_every
    refit = None if str(every).lower() in ("none", "inf", "0") else int(every)
    opts = FitOptions(n_restarts=args.restarts, seed=args.seed, n_jobs=1)
    report = rolling_forecast(panel, spec, calib_years=args.calib_years, refit_every=refit,
                              split=args.split, options=opts, n_jobs=_threads(args))
    _emit(report.to_json(), args.out)
    if args.forecasts_out:
        report.to_frame().to_csv(args.forecasts_out, index=False, float_format="%.10g", lineterminator="\n")
    if not all(r.get("converged", True) for r in report.refits):
        logger.warning("some calibration windows did not converge")
        if args.strict:
            return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_dm(args):
    if not args.report or len(args.report) < 2:
        raise UsageError("dm needs at least two --report files")
    errors = {}
    for p in args.report:
        try:
            d = json.loads(Path(p).read_text(encoding="utf-8"))
        except OSError as exc:
            raise DataError(f"cannot read {p}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise DataError(f"{p}: invalid JSON ({exc.msg})", exc.lineno) from None
        rep = EvalReport.from_dict(d)
        label = rep.model_id
        if label in errors:
            label = Path(p).stem
        errors[label] = rep.errors
    first = next(iter(errors.values()))
    for k, e in errors.items():
        if not np.array_equal(e.dates, first.dates):
            raise DataError(f"report {k!r} covers different forecast dates")
    if args.json:
        res = dm_matrix(errors, args.hac_lags)
        out = {f"{a}|{b}": o.to_dict() for (a, b), o in res.items()}
        _emit(json.dumps(out, sort_keys=True, indent=2), args.out)
    else:
        _emit(dm_matrix_csv(errors, args.hac_lags), args.out)
    return EXIT_OK


def _levels_from_changes(months, changes):
    # one extra leading month so log changes of the written levels return the input
    level = SIM_GEPU_LEVEL * np.exp(np.concatenate([[0.0], np.cumsum(changes)]))
    return np.concatenate([[months[0] - 1], months]), level


def cmd_simulate(args):
    spec = spec_from_args(args)
    thetas = args.theta or ([0.015] if len(spec.factors) == 1 else [0.015, 5e-5])
    if len(thetas) != len(spec.factors):
        raise UsageError(f"need {len(spec.factors)} --theta value(s) for factors {list(spec.factors)}")
    try:
        params = ParamSet(args.mu, args.alpha, args.beta, tuple(thetas), args.omega2, args.m)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    panel, path = simulate(params, spec, args.months, args.days_per_month, seed=args.seed, start=args.start)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "returns.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("date,return\n")
        for d, v in zip(panel.dates, panel.returns.values):
            fh.write(f"{d},{v:.17g}\n")
    if spec.macro_factors:
        f = spec.macro_factors[0]
        series = panel.monthly_factors[f]
        if f == GEPU:
            months, level = series.months, series.values
        else:
            months, level = _levels_from_changes(series.months, series.values)
        with open(out / "macro.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("month,value\n")
            for m, v in zip(months, level):
                fh.write(f"{m},{v:.17g}\n")
    _write_path_csv(path, out / "path.csv", args.annualize)
    return EXIT_OK


COMMANDS = {"summary": cmd_summary, "fit": cmd_fit, "eval": cmd_eval, "dm": cmd_dm, "simulate": cmd_simulate}


def _configure_logging():
    level = os.environ.get("MIDASVOL_LOG", "warn").lower()
    logging.basicConfig(level=LOG_LEVELS.get(level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s", force=True)


def _error(kind, message, line=None, code=EXIT_DATA):
    payload = {"error": kind, "message": message}
    if line is not None:
        payload["line"] = line
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    return code


def main(argv=None):
    _configure_logging()
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _merge_config(argv)
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        return _error("usage", str(exc), code=EXIT_USAGE)
    except DataError as exc:
        return _error("data", str(exc), exc.line)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        return _error("usage", str(exc), code=EXIT_USAGE)
    except DataError as exc:
        return _error("data", str(exc), getattr(exc, "line", None))
    except FileNotFoundError as exc:
        return _error("data", f"no such file: {exc.filename}")
    except ValueError as exc:
        return _error("data", str(exc))


if __name__ == "__main__":
    sys.exit(main())
