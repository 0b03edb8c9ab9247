"""Command line interface.

Exit codes: 0 all checks pass, 1 some check failed, 2 invalid config or
arguments (including CFL refusal), 3 non-finite values detected.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor

from .config import load_config
from .errors import ConfigError, DomainError, PreconditionError, ValidationError
from .report import Report, to_jsonable
from .runner import _Context, causal_metrics, green_metrics, output_root, run_scenario
from .suites import DEFAULT_SEED, SUITES, run_suite

__all__ = ["main", "EXIT_OK", "EXIT_CHECK", "EXIT_CONFIG", "EXIT_NONFINITE"]

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NONFINITE = 0, 1, 2, 3
_USER_ERRORS = (ConfigError, ValidationError, DomainError, PreconditionError)


def _formats(flag: str | None):
    if flag is None:
        return None
    return ["csv", "bin"] if flag == "both" else [flag]


def _status(report) -> int:
    if report.nonfinite:
        return EXIT_NONFINITE
    return EXIT_OK if report.passed else EXIT_CHECK


def _run_one(path: str, out, formats, plot: bool, seed) -> tuple:
    """Worker for ``run``: returns ``(path, code, lines)`` so output order stays fixed."""
    try:
        cfg = load_config(path)
        report, out_dir = run_scenario(cfg, out, formats, plot, seed)
    except _USER_ERRORS as exc:
        return path, EXIT_CONFIG, [f"error: {path}: {exc}"]
    code = _status(report)
    lines = [f"== {report.name} ({report.kind}) -> {out_dir}"] + report.summary_lines()
    if report.nonfinite:
        lines.append("non-finite values detected")
    return path, code, lines


def cmd_run(args) -> int:
    jobs = max(1, args.jobs)
    work = [(p, args.out, _formats(args.format), args.plot, args.seed) for p in args.configs]
    if jobs == 1 or len(work) == 1:
        results = [_run_one(*w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, *zip(*work)))
    for _, _, lines in results:
        for line in lines:
            print(line, file=sys.stderr if line.startswith("error:") else sys.stdout)
    return max(code for _, code, _ in results)


def cmd_check(args) -> int:
    report = run_suite(args.suite, args.seed)
    out = output_root(args.out) / report.name
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json())
    for line in report.summary_lines():
        print(line)
    print(f"report: {out / 'report.json'}")
    return _status(report)


def _context(args, kind: str):
    cfg = load_config(args.config)
    name = f"{cfg['name']}-{kind}"
    out = output_root(args.out, cfg) / name
    out.mkdir(parents=True, exist_ok=True)
    report = Report(name, kind, args.seed)
    return _Context(cfg, out, _formats(args.format) or ["bin"], False, DEFAULT_SEED if args.seed is None else args.seed, report), out


def cmd_green(args) -> int:
    try:
        point = [float(v) for v in args.point.split(",")]
    except ValueError:
        raise ConfigError(f"bad --point {args.point!r}; expected t,x[,y]") from None
    ctx, out = _context(args, "green")
    metrics = green_metrics(ctx, point, args.direction, args.tests)
    block = {"metrics": metrics, "artifacts": ctx.report.artifacts, "output": str(out)}
    (out / "metrics.json").write_text(json.dumps(to_jsonable(block), indent=2) + "\n")
    print(json.dumps(to_jsonable(block), indent=2))
    if ctx.report.nonfinite:
        return EXIT_NONFINITE
    return EXIT_OK if metrics["pairing_defect"] <= args.tolerance else EXIT_CHECK


def cmd_causal(args) -> int:
    ctx, out = _context(args, "causal")
    metrics = causal_metrics(ctx, args.set, args.relation)
    block = {"metrics": metrics, "artifacts": ctx.report.artifacts, "output": str(out)}
    (out / "metrics.json").write_text(json.dumps(to_jsonable(block), indent=2) + "\n")
    summary = {k: v for k, v in metrics.items() if k != "slice_cells"}
    print(json.dumps(to_jsonable(summary), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wavelab", description="Wave equations on warped spacetime slabs.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="execute scenario configs")
    r.add_argument("configs", nargs="+", help="JSON scenario files")
    r.add_argument("--out", help="output root (default: $WAVELAB_OUT or ./wavelab-out)")
    r.add_argument("--format", choices=["csv", "bin", "both"], help="field file format")
    r.add_argument("--plot", action="store_true", help="also write per-slice CSV series")
    r.add_argument("--jobs", type=int, default=1, help="scenarios run in parallel")
    r.add_argument("--seed", type=int, default=None)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("check", help="run a randomized invariant suite")
    c.add_argument("suite", choices=sorted(SUITES) + ["all"])
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--out")
    c.set_defaults(func=cmd_check)

    g = sub.add_parser("green", help="fundamental solution at a point")
    g.add_argument("--config", required=True)
    g.add_argument("--point", required=True, help="t,x[,y]")
    g.add_argument("--direction", choices=["+", "-"], default="+")
    g.add_argument("--tests", type=int, default=50, help="random test sections for the pairing check")
    g.add_argument("--tolerance", type=float, default=1e-11)
    g.add_argument("--format", choices=["csv", "bin", "both"])
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out")
    g.set_defaults(func=cmd_green)

    k = sub.add_parser("causal", help="rasterized causal relation of an event set")
    k.add_argument("--config", required=True)
    k.add_argument("--set", required=True, help="point:t,x | points:t,x;... | nodes:n,i;... | slice:t | box:t0,t1,x0,x1")
    k.add_argument("--relation", choices=["J+", "J-", "I+", "I-", "J"], default="J+")
    k.add_argument("--format", choices=["csv", "bin", "both"])
    k.add_argument("--seed", type=int, default=None)
    k.add_argument("--out")
    k.set_defaults(func=cmd_causal)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return args.func(args)
    except _USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FloatingPointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONFINITE


if __name__ == "__main__":
    sys.exit(main())
