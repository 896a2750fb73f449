"""``mct`` command line: run, sweep, report, dump-defaults.

Exit codes: 0 all binding checks pass, 1 a check failed, 2 config or runtime error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import _kernels
from .config import ScenarioConfig, dump_config, load_config
from .errors import ConfigInvalid, MCTError
from .harness import report, run_scenario, run_sweep
from .scenarios import BUILTIN, builtin


def _load(ref: str) -> ScenarioConfig:
    if ref in BUILTIN and not Path(ref).exists():
        return builtin(ref)
    return load_config(ref)


def _cmd_run(args) -> int:
    cfg = _load(args.config)
    rep = run_scenario(cfg, output_dir=args.output)
    sys.stdout.write(rep.summary())
    return rep.exit_code


def _cmd_sweep(args) -> int:
    cfg = _load(args.config)
    res = run_sweep(cfg, output_dir=args.output)
    for r in res.rows:
        print("  ".join(f"{k}={v:.6g}" for k, v in r.items()))
    for c in res.checks:
        print(c.line())
    for rep in res.reports:
        sys.stdout.write(rep.summary())
    return res.exit_code


def _cmd_report(args) -> int:
    text, code = report(args.output_dir)
    sys.stdout.write(text)
    return code


def _cmd_dump(args) -> int:
    cfg = builtin(args.scenario) if args.scenario else ScenarioConfig()
    sys.stdout.write(dump_config(cfg))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mct", description="Phase-field mean curvature flow with transport.")
    p.add_argument("--version", action="version", version=f"mct 0.1.0 ({_kernels.backend()} kernels)")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario (config file or built-in name)")
    r.add_argument("config")
    r.add_argument("-o", "--output", help="output directory (overrides output_dir)")
    r.set_defaults(func=_cmd_run)

    s = sub.add_parser("sweep", help="run an epsilon sweep and write convergence.csv")
    s.add_argument("config")
    s.add_argument("-o", "--output", help="output directory (overrides output_dir)")
    s.set_defaults(func=_cmd_sweep)

    rp = sub.add_parser("report", help="re-render summaries from the CSVs of a finished run")
    rp.add_argument("output_dir")
    rp.set_defaults(func=_cmd_report)

    d = sub.add_parser("dump-defaults", help="print every config key with its default value")
    d.add_argument("scenario", nargs="?", choices=sorted(BUILTIN), help="print a built-in scenario instead")
    d.set_defaults(func=_cmd_dump)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigInvalid as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2
    except (MCTError, FileNotFoundError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
