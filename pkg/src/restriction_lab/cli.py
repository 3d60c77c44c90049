"""Command line entry point: ``restriction-lab <subcommand> --config <path> ...``.

Exit codes: 0 success, 2 configuration error, 3 numerical precondition
failure (aliasing, support or grid preconditions).
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, load_config
from .experiments import EXPERIMENTS
from .extension import AliasingError, SupportError

log = logging.getLogger("restriction_lab")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="restriction-lab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"restriction-lab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn in EXPERIMENTS.items():
        sp = sub.add_parser(name, help=(fn.__doc__ or "").strip().splitlines()[0])
        sp.add_argument("--config", help="experiment config file ([section] key = value)")
        sp.add_argument("--out", help="output directory (overrides [output] out)")
        sp.add_argument("--seed", type=int, help="unsigned 64-bit seed")
        sp.add_argument("--dim", type=int, choices=(1, 2), help="spatial dimension d")
        sp.add_argument("--pad", type=int, help="spatial zero-padding factor (power of two)")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config) if args.config else load_config(text="")
        cfg = cfg.with_overrides(name=args.command, out=args.out, seed=args.seed, dim=args.dim, pad=args.pad)
        result = EXPERIMENTS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (AliasingError, SupportError, ValueError) as exc:
        print(f"numerical precondition failed: {exc}", file=sys.stderr)
        return 3
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{args.command}.csv"
    csv_path.write_text(result.csv_text(cfg), encoding="utf-8")
    if result.plot:
        (out / f"{args.command}.gp").write_text(result.plot, encoding="utf-8")
    if args.command == "exponents":
        for q, v, st in result.rows:
            print(f"{q:<44} {v:<16} {st}")
    for k, v in result.summary.items():
        print(f"{k} = {v}")
    print(f"wrote {csv_path}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
