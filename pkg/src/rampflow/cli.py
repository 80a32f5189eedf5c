"""Command-line experiment runner.

Subcommands: train, evaluate, compare, sweep.  Exit codes: 0 on success,
2 for configuration problems (bad scenario file, unknown controller, ...),
3 for runtime failures.  Set RAMPFLOW_LOG=debug|info|warning for verbosity.
All randomness derives from --seed.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .errors import ConfigurationError
from .runner import compare, evaluate, make_controller, sweep, train
from .scenarios import load_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

log = logging.getLogger("rampflow")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rampflow",
        description="Train and evaluate ramp-metering / speed-limit controllers "
        "on macroscopic freeway scenarios.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, controller_default=None) -> None:
        p.add_argument(
            "--scenario",
            required=True,
            help="built-in scenario name (three_ramp, dsl) or a JSON file",
        )
        p.add_argument("--seed", type=int, default=None, help="base RNG seed")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument(
            "--oracle",
            action="store_true",
            help="cross-check every max-plus decision against brute force",
        )

    p_train = sub.add_parser("train", help="train one controller")
    common(p_train)
    p_train.add_argument("--controller", required=True)
    p_train.add_argument("--episodes", type=int, default=None)
    p_train.add_argument(
        "--snapshot-every",
        type=int,
        default=0,
        help="also write Q-table snapshots every N episodes",
    )

    p_eval = sub.add_parser(
        "evaluate", help="greedy rollout of previously trained Q-tables"
    )
    common(p_eval)
    p_eval.add_argument("--controller", required=True)
    p_eval.add_argument(
        "--tables",
        required=True,
        help="directory holding the Q-table snapshots written by train",
    )

    p_cmp = sub.add_parser(
        "compare", help="train+evaluate several controllers on shared seeds"
    )
    common(p_cmp)
    p_cmp.add_argument(
        "--controllers",
        required=True,
        help="comma-separated controller names; the first is the baseline",
    )
    p_cmp.add_argument("--episodes", type=int, default=None)
    p_cmp.add_argument("--seeds", type=int, default=1, help="number of seeds")

    p_sweep = sub.add_parser(
        "sweep", help="train+evaluate one controller over many seeds"
    )
    common(p_sweep)
    p_sweep.add_argument("--controller", required=True)
    p_sweep.add_argument("--episodes", type=int, default=None)
    p_sweep.add_argument("--seeds", type=int, default=1)
    p_sweep.add_argument("--jobs", type=int, default=1)

    return parser


def _setup_logging() -> None:
    level = os.environ.get("RAMPFLOW_LOG", "warning").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def run(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    cfg = load_scenario(args.scenario)
    seed = cfg.seed if args.seed is None else args.seed
    episodes = getattr(args, "episodes", None)
    if episodes is None:
        episodes = cfg.episodes

    if args.command == "train":
        os.makedirs(args.out, exist_ok=True)
        _, curve, mismatches = train(
            cfg,
            args.controller,
            episodes,
            seed,
            out_dir=args.out,
            snapshot_every=args.snapshot_every,
            oracle=args.oracle,
        )
        log.info("trained %s for %d episodes", args.controller, len(curve))
        if args.oracle:
            print(f"oracle mismatches: {mismatches}")
        print(f"final TTS {curve[-1][2]:.2f} veh.h -> {args.out}")
    elif args.command == "evaluate":
        controller = make_controller(cfg, args.controller)
        if controller is not None:
            try:
                controller.load(args.tables)
            except OSError as exc:
                raise ConfigurationError(
                    f"cannot load Q-tables from {args.tables!r}: {exc}"
                )
        res = evaluate(
            cfg, args.controller, controller, seed, out_dir=args.out,
            oracle=args.oracle,
        )
        if args.oracle:
            print(f"oracle mismatches: {res.oracle_mismatches}/{res.oracle_checks}")
        print(
            f"TTS {res.tts:.2f} veh.h, "
            f"avg speed {res.metrics.average_speed:.2f} km/h -> {args.out}"
        )
    elif args.command == "compare":
        names = [n.strip() for n in args.controllers.split(",") if n.strip()]
        rows = compare(
            cfg, names, episodes, seed, args.seeds, args.out, oracle=args.oracle
        )
        for name, tts, _, speed, imp in rows:
            print(
                f"{name:>16}: TTS {tts:10.2f} veh.h  speed {speed:6.2f} km/h  "
                f"improvement {imp:+.2f}%"
            )
    elif args.command == "sweep":
        rows = sweep(
            cfg, args.controller, episodes, seed, args.seeds, args.out,
            jobs=args.jobs,
        )
        for row in rows:
            print(f"seed {row[1]}: TTS {row[2]:.2f} veh.h")
    return EXIT_OK


def main(argv=None) -> int:
    try:
        return run(argv)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
