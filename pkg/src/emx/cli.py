"""Command-line entry point: ``emx {simulate,stability,equilibrium,dispatch,run}``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .continuous import SimulationBlowUp
from .scenario import ScenarioError, parse_scenario, produce, run_scenario

log = logging.getLogger("emx")

ARTIFACT = {
    "simulate": "trajectory",
    "stability": "spectrum",
    "equilibrium": "equilibrium",
    "dispatch": "dispatch",
}


def _job(command: str, path: str, out_dir: str, variant: str | None) -> tuple[int, str]:
    try:
        sc = parse_scenario(path)
        if command == "run":
            written = run_scenario(sc, out_dir)
        else:
            written = produce(sc, ARTIFACT[command], out_dir, variant)
    except ScenarioError as exc:
        return 1, f"error: {exc}"
    except SimulationBlowUp as exc:
        return 3, f"error: {path}: simulation aborted: {exc}"
    except (ValueError, ArithmeticError) as exc:
        return 3, f"error: {path}: {exc}"
    return 0, "\n".join(str(p) for p in written)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="emx", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("simulate", "time-step the scenario model and write its trajectory CSV"),
                        ("stability", "write the matrix-pencil spectrum report"),
                        ("equilibrium", "write the equilibrium report"),
                        ("dispatch", "write the merit-order dispatch report"),
                        ("run", "write every output listed in the scenario")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--scenario", required=True, nargs="+", metavar="PATH")
        p.add_argument("--out", default=None, metavar="DIR",
                       help="output directory (default: $EMX_OUT_DIR or .)")
        p.add_argument("--jobs", type=int, default=1, metavar="N",
                       help="run several scenarios in parallel")
        if name == "stability":
            p.add_argument("--variant", choices=["full_constant", "full_sloped", "balanced_dae"],
                           default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    out_dir = args.out or os.environ.get("EMX_OUT_DIR", ".")
    variant = getattr(args, "variant", None)
    jobs = [(args.command, path, out_dir, variant) for path in args.scenario]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_job, *zip(*jobs)))
    else:
        results = [_job(*j) for j in jobs]
    status = 0
    for code, message in results:
        if code:
            print(message, file=sys.stderr)
            status = max(status, code)
        elif message:
            print(message)
    return status


if __name__ == "__main__":
    sys.exit(main())
