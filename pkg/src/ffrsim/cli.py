"""Command-line entry point: ``ffrsim run | compare | sweep``.

Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, SweepSpec, build_case, load_config
from .harness import run_compare, run_single, sweep_availability

log = logging.getLogger("ffrsim")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; bad flags are invalid input here
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def _scales(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", required=True, help="scenario JSON file")
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--dt", type=float, default=None, help="override integration step (s)")
    common.add_argument("--horizon", type=float, default=None, help="override simulated horizon (s)")
    common.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="ffrsim", description="Service-oriented fast frequency response simulator.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = sub.add_parser("run", parents=[common], help="simulate one case")
    run.add_argument("--case", type=int, required=True, help="case id 1-4")
    sub.add_parser("compare", parents=[common], help="simulate cases 1-4 and tabulate metrics")
    sw = sub.add_parser("sweep", parents=[common], help="scale availability of one resource class")
    sw.add_argument("--class", dest="target_class", required=True, help="bess, datacenter or ev")
    sw.add_argument("--scales", type=_scales, default=[1.0, 0.75, 0.5, 0.25, 0.0],
                    help="comma-separated availability factors in [0, 1]")
    sw.add_argument("--case", type=int, default=4, help="case id used for every sweep point")
    return p


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config).with_overrides(dt=args.dt, horizon=args.horizon)
        if args.command == "run":
            cfg = build_case(cfg, args.case)
        elif args.command == "sweep":
            spec = SweepSpec(args.target_class, tuple(args.scales), args.case)
    except (ConfigError, ValueError) as exc:
        print(f"ffrsim: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID

    try:
        if args.command == "run":
            res = run_single(cfg, args.out)
            print(f"case {cfg.case_id}: nadir {res.report.nadir_hz:.4f} Hz")
        elif args.command == "compare":
            for res in run_compare(cfg, args.out, jobs=args.jobs):
                r = res.report
                print(f"case {r.case_id}: nadir {r.nadir_hz:.4f} Hz, max RoCoF {r.max_rocof:.3f} Hz/s, "
                      f"recovery {'-' if r.recovery_time is None else f'{r.recovery_time:.2f} s'}")
        else:
            for scale, rep in sweep_availability(cfg, spec, args.out, jobs=args.jobs):
                print(f"scale {scale:g}: nadir {rep.nadir_hz:.4f} Hz")
    except Exception as exc:  # noqa: BLE001 - any runtime failure maps to exit 2
        log.debug("run failed", exc_info=True)
        print(f"ffrsim: run failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
