"""Command-line front end.

Exit status 1 means the input was rejected before any work started; 2 means
the run itself failed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .coding import dp_budget_allocation, exhaustive_allocation
from .config import SweepSpec, parse_config
from .harness import ConfigError, averaged_bounds, estimate_error
from .selftest import run_selftest
from .sweep import SweepIOError, format_value, resolve_workers, run_sweep

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
ORACLE_LIMIT = 200_000  # largest search space the dp-demo brute force will enumerate


class InputError(ValueError):
    pass


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML file with settings and a [grid] table")
    p.add_argument("--out", help="output file (default: stdout; sweep default sweep.csv)")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--epsilon", nargs="+", help="epsilon grid (overrides the file)")
    p.add_argument("--L-q", dest="L_q", nargs="+", help="query-length grid")
    p.add_argument("--R", dest="R", nargs="+", help="design-rate grid; fractions like 1/2 allowed")
    p.add_argument("--n", dest="n", nargs="+", help="corpus-size grid")
    p.add_argument("--Q", dest="Q", type=int, help="queries averaged by the bounds")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="erasure-retrieval",
                                     description="Retrieval error under token erasures: simulation and bounds.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("sweep", "run every grid cell and write the result table"),
                            ("bounds", "query-averaged analytic bounds for one (n, L_q, R)"),
                            ("simulate", "Monte Carlo error estimate for one (n, L_q, R)")):
        _common(sub.add_parser(name, help=help_text))
    dp = sub.add_parser("dp-demo", help="optimal repetition allocation for a score file")
    dp.add_argument("--scores", required=True, help="file of non-negative scores")
    dp.add_argument("--budget", "-B", type=int, required=True)
    dp.add_argument("--epsilon", type=float, default=0.5)
    sub.add_parser("selftest", help="run the built-in oracle checks")
    return parser


def _spec(args, default_out: str | None = None) -> SweepSpec:
    overrides = {"seed": args.seed, "trials": args.trials, "Q": args.Q,
                 "epsilon": args.epsilon, "L_q": args.L_q, "R": args.R, "n": args.n}
    return parse_config(args.config, overrides, args.out or default_out, args.format)


def _single_group(spec: SweepSpec):
    groups = spec.groups
    if len(groups) != 1:
        raise ConfigError("grid", f"this command takes one (n, L_q, R) combination, got {len(groups)}")
    return groups[0]


def _emit(rows: list[dict], fields: Sequence[str], out: Path | None, fmt: str) -> None:
    if fmt == "json":
        text = json.dumps([{k: (None if isinstance(r[k], float) and math.isnan(r[k]) else r[k])
                            for k in fields} for r in rows], indent=1) + "\n"
    else:
        lines = [",".join(fields)] + [",".join(format_value(r[k]) for k in fields) for r in rows]
        text = "\n".join(lines) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def read_scores(path: str | Path) -> np.ndarray:
    """Numbers separated by whitespace or commas; ``#`` starts a comment."""
    values = []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None
    for lineno, line in enumerate(lines, start=1):
        for token in line.split("#", 1)[0].replace(",", " ").split():
            try:
                x = float(token)
            except ValueError:
                raise InputError(f"{path}:{lineno}: cannot parse {token!r} as a number") from None
            if not math.isfinite(x) or x < 0:
                raise InputError(f"{path}:{lineno}: score {token!r} must be finite and non-negative")
            values.append(x)
    if not values:
        raise InputError(f"{path}: no scores found")
    return np.array(values)


def _cmd_sweep(args):
    spec = _spec(args, default_out="sweep.csv")
    workers = resolve_workers(args.workers)
    cells = len(spec.cells)

    def run():
        summary = run_sweep(spec, workers, log=lambda m: print(m, file=sys.stderr))
        print(f"{cells} cells: {summary.computed} computed, {summary.skipped} already present; "
              f"{summary.seconds:.1f}s; wrote {summary.path}")
    return run


def _cmd_bounds(args):
    spec = _spec(args)
    cfg = _single_group(spec)
    fields = ["epsilon", "L_q", "R", "n", "Q"]
    for name in ("pe_mvn", "b1", "b1_clipped", "b3", "sidak", "combined"):
        fields += [name, f"{name}_se"]
    fields += ["sidak_valid_frac", "resampled_queries"]

    def run():
        rows = []
        for ab in averaged_bounds(cfg, cfg.corpus()):
            row = {"epsilon": ab.epsilon, "L_q": cfg.L_q, "R": float(cfg.R), "n": cfg.n, "Q": ab.Q,
                   "sidak_valid_frac": ab.sidak_valid_frac, "resampled_queries": ab.resampled}
            for name, value in ab.mean.items():
                row[name] = value
                row[f"{name}_se"] = ab.std_error[name]
            rows.append(row)
        _emit(rows, fields, spec.out, spec.format)
    return run


def _cmd_simulate(args):
    spec = _spec(args)
    cfg = _single_group(spec)
    fields = ["epsilon", "L_q", "R", "n", "trials", "pe_mc", "ci_lo", "ci_hi", "resampled_queries"]

    def run():
        rows = [{"epsilon": e.epsilon, "L_q": cfg.L_q, "R": float(cfg.R), "n": cfg.n,
                 "trials": e.trials, "pe_mc": e.p_hat, "ci_lo": e.ci_low, "ci_hi": e.ci_high,
                 "resampled_queries": e.resampled} for e in estimate_error(cfg, cfg.corpus())]
        _emit(rows, fields, spec.out, spec.format)
    return run


def _cmd_dp_demo(args):
    scores = read_scores(args.scores)
    if args.budget < 0:
        raise InputError(f"--budget: must be >= 0, got {args.budget}")
    if not 0.0 <= args.epsilon <= 1.0:
        raise InputError(f"--epsilon: must lie in [0, 1], got {args.epsilon}")

    def run():
        alloc = dp_budget_allocation(scores, args.budget, args.epsilon)
        print(f"scores    = {[float(s) for s in scores]}")
        print(f"B         = {args.budget}, epsilon = {args.epsilon}")
        print(f"r         = {tuple(int(x) for x in alloc.r)}")
        print(f"objective = {alloc.objective!r}")
        space = math.comb(args.budget + scores.size - 1, scores.size - 1)
        if space > ORACLE_LIMIT:
            print(f"oracle: skipped ({space} allocations exceed {ORACLE_LIMIT})")
            return
        ex = exhaustive_allocation(scores, args.budget, args.epsilon)
        if ex.objective == alloc.objective:
            print("oracle: match")
        else:
            print(f"oracle: MISMATCH (exhaustive {ex.objective!r} at r={tuple(int(x) for x in ex.r)})")
            raise RuntimeError("dynamic program disagrees with exhaustive search")
    return run


def _cmd_selftest(args):
    def run():
        results = run_selftest()
        for res in results:
            print(f"{'PASS' if res.passed else 'FAIL'}  {res.name}: {res.detail}")
        if not all(r.passed for r in results):
            raise RuntimeError("self-test failed")
    return run


COMMANDS = {"sweep": _cmd_sweep, "bounds": _cmd_bounds, "simulate": _cmd_simulate,
            "dp-demo": _cmd_dp_demo, "selftest": _cmd_selftest}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    # validation happens while building the job; anything raised later is a runtime failure
    try:
        job = COMMANDS[args.command](args)
    except (ConfigError, InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        job()
    except (SweepIOError, OSError, RuntimeError, ArithmeticError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
