"""Command-line entry point.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 internal
invariant breach.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .commands import (
    COMMANDS,
    InvariantBreach,
    cmd_simulate,
    cmd_sweep,
    record_csv,
    scalar_outputs,
)
from .config import ConfigError, RunConfig, from_mapping, parse_config
from .fockoracle import LeakageError
from .report import figure_for

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_INVARIANT = 0, 2, 3, 4


def load_config(path: str) -> RunConfig:
    """Read a config file, or the ``inputs_echo`` of a saved JSON record."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"--config: {exc}") from None
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        return from_mapping(data.get("inputs_echo", data))
    return parse_config(text)


def summary(rec: dict) -> str:
    sc = scalar_outputs(rec["outputs"])
    width = max((len(k) for k in sc), default=0)
    lines = [f"== {rec['command']} =="]
    for k, v in sc.items():
        lines.append(f"  {k:<{width}}  {v:.6g}" if isinstance(v, float) else f"  {k:<{width}}  {v}")
    if rec["command"] == "sweep":
        lines.append(f"  rows: {len(rec['outputs']['rows'])} over {rec['outputs']['parameter']}")
    for w in rec["warnings"]:
        lines.append(f"  warning: {w}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hybridion", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("design", "plan", "simulate", "noise", "sweep"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out")
        sp.add_argument("--format", choices=("records", "csv"),
                        default="csv" if name == "sweep" else "records")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--no-figures", action="store_true")
        if name in ("simulate", "sweep"):
            sp.add_argument("--engine", choices=("phasespace", "fock", "both"), default="phasespace")
        if name == "sweep":
            sp.add_argument("--workers", type=int, default=1)
    return p


def run(argv=None) -> dict:
    args = build_parser().parse_args(argv)
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_value("motional.seed", args.seed) if cfg.has("motional") else cfg
    if args.command == "simulate":
        rec = cmd_simulate(cfg, args.engine)
    elif args.command == "sweep":
        if args.workers < 1:
            raise ConfigError("--workers: must be >= 1")
        rec = cmd_sweep(cfg, args.workers, args.engine)
    else:
        rec = COMMANDS[args.command](cfg)
    payload = record_csv(rec) if args.format == "csv" else json.dumps(rec, sort_keys=True) + "\n"
    if args.out:
        out = Path(args.out)
        out.write_text(payload)
        print(summary(rec))
        if args.format == "csv" and not args.no_figures:
            fig = figure_for(rec, out)
            if fig is not None:
                print(f"  figure: {fig}")
    else:
        sys.stdout.write(payload)
        print(summary(rec), file=sys.stderr)
    return rec


def main(argv=None) -> int:
    try:
        run(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except LeakageError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InvariantBreach as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
