"""Command-line entry point: ``obstruction-lab {run,audit,sweep}``.

Exit codes: 0 when every check and verdict matches its expectation, 2 when
some check deviates, 1 on an execution error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import ObstructionLabError
from .scenarios import SCENARIOS, ScenarioConfig, emit_report, run_scenario

log = logging.getLogger("obstruction_lab")

EXIT_OK, EXIT_ERROR, EXIT_DEVIATION = 0, 1, 2


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="obstruction-lab",
                                     description="Almost-flat bundles over tori from almost "
                                                 "representations of Z^d.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario from a JSON config")
    run.add_argument("config", type=Path)
    run.add_argument("--out", type=Path, help="output directory (overrides config.output)")

    audit = sub.add_parser("audit", help="run the property audit")
    audit.add_argument("--seed", type=int, default=42)
    audit.add_argument("--scalar-samples", type=int, default=100_000)
    audit.add_argument("--matrix-samples", type=int, default=1_000)
    audit.add_argument("--out", type=Path)

    sweep = sub.add_parser("sweep", help="run a scenario with command-line overrides")
    sweep.add_argument("--scenario", choices=SCENARIOS, default="z2-voiculescu-sweep")
    sweep.add_argument("--n", type=_int_list, help="comma-separated representation sizes")
    sweep.add_argument("--grid", type=int)
    sweep.add_argument("--overhang", type=float)
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--threads", type=int)
    sweep.add_argument("--out", type=Path, required=True)
    return parser


def _finish(report, out: Path | None) -> int:
    if out is not None:
        for path in emit_report(report, out):
            log.info("wrote %s", path)
    for c in report.checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status}  {c.name}: measured {c.measured} (expected {c.expected})")
    print(f"{report.config['scenario']}: {'as expected' if report.ok else 'DEVIATION'}")
    return EXIT_OK if report.ok else EXIT_DEVIATION


def _config_for(args) -> ScenarioConfig:
    if args.command == "run":
        cfg = ScenarioConfig.load(args.config)
        return cfg
    if args.command == "audit":
        return ScenarioConfig.for_scenario(
            "property-audit", seed=args.seed,
            extra={"scalar_samples": args.scalar_samples,
                   "matrix_samples": args.matrix_samples})
    overrides = {}
    if args.n:
        family = "voiculescu-z4" if args.scenario == "z4-chern-class" else "voiculescu"
        overrides["rep"] = {"family": family, "n": args.n if len(args.n) > 1 else args.n[0]}
    for key in ("grid", "overhang", "seed", "threads"):
        if getattr(args, key) is not None:
            overrides[key] = getattr(args, key)
    return ScenarioConfig.for_scenario(args.scenario, **overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _config_for(args)
        out = args.out if args.out is not None else (
            Path(cfg.output) if cfg.output else None)
        report = run_scenario(cfg)
        return _finish(report, out)
    except (ObstructionLabError, OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
