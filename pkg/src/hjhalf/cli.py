"""Command line entry point ``hjhalf``.

Exit codes: 0 success, 1 verification failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import RunConfig, load_function, parse_config
from .errors import HJHalfError, ParseError, UnknownPreset
from .presets import PRESETS
from .harness import run_converge, run_limiter, run_solve, run_testfn, run_verify

RUNNERS = {
    "limiter": run_limiter,
    "testfn": run_testfn,
    "solve": run_solve,
    "converge": run_converge,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hjhalf",
        description="Effective boundary conditions for 1D Hamilton-Jacobi equations on a half-line.")
    sub = ap.add_subparsers(dest="mode", required=True)
    for name in ("limiter", "testfn", "solve", "converge", "verify"):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="INI run configuration")
        p.add_argument("--out", type=Path, help="output directory (overrides run.out_dir)")
        p.add_argument("--seed", type=int, help="seed for randomized suites")
        p.add_argument("--hamiltonian", help="preset name or PL CSV (overrides config)")
        p.add_argument("--flux", help="preset name or PL CSV (overrides config)")
        if name == "verify":
            p.add_argument("--break", dest="breaks", action="append", default=[],
                           choices=["sandwich"], help="sabotage hook (negative control)")
    return ap


def _load(args) -> RunConfig:
    cfg = parse_config(args.config) if args.config else RunConfig()
    errors = []
    for which in ("hamiltonian", "flux"):
        spec = getattr(args, which)
        if spec is None:
            continue
        try:
            load_function(spec)
        except (UnknownPreset, OSError, ValueError) as exc:
            errors.append(f"--{which}: {exc}")
            continue
        if spec not in PRESETS:
            spec = str(Path(spec).resolve())
        setattr(cfg, which, spec)
    if errors:
        raise ParseError(errors)
    if args.seed is not None:
        cfg.seed = args.seed
    cfg.mode = args.mode
    if args.out is not None:
        cfg.out_dir = str(args.out)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
    except ParseError as exc:
        print("configuration error:", file=sys.stderr)
        for e in exc.errors:
            print(f"  {e}", file=sys.stderr)
        return 2
    out = Path(cfg.out_dir)
    try:
        if args.mode == "verify":
            status, text = run_verify(cfg, out, breaks=args.breaks)
            sys.stdout.write(text)
            return status
        return RUNNERS[args.mode](cfg, out)
    except HJHalfError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
