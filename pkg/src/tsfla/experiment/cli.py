"""Command-line entry point: ``tsfla <command> ...``."""

from __future__ import annotations

import argparse
import logging
import sys

from ..errors import TsflaError
from ..problems import BASE_FUNCTIONS, DEFAULT_BASES, build_suite
from .config import ExperimentConfig
from .pipeline import PREDICT_MODES, cmd_features, cmd_predict, cmd_report, cmd_run, cmd_stats
from .store import ResultStore


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tsfla", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    suite = sub.add_parser("suite", help="inspect the problem suite")
    suite_sub = suite.add_subparsers(dest="suite_command", required=True)
    listing = suite_sub.add_parser("list", help="print problem ids")
    listing.add_argument("--config", help="experiment config (JSON); defaults to the four default bases")
    listing.add_argument("--bases", nargs="+", choices=sorted(BASE_FUNCTIONS))
    listing.add_argument("--same-base-pairs", action="store_true")

    run = sub.add_parser("run", help="execute optimisation runs and static samples")
    run.add_argument("--config", required=True)
    run.add_argument("--resume", action="store_true", help="continue an interrupted experiment")
    run.add_argument("--workers", type=int, help="override the configured worker count")

    for name, text in (("features", "extract landscape features"), ("stats", "statistical comparison grids"),
                       ("report", "summarise result tables")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--store", help="result directory (default: the config's output)")
        p.add_argument("--config", help="experiment config used to locate the store")
        if name == "features":
            p.add_argument("--workers", type=int)

    predict = sub.add_parser("predict", help="fit performance prediction models")
    predict.add_argument("--mode", choices=sorted(PREDICT_MODES), default="both")
    predict.add_argument("--store")
    predict.add_argument("--config")
    return parser


def _store(args) -> ResultStore:
    if args.store:
        return ResultStore(args.store)
    if args.config:
        return ResultStore(ExperimentConfig.load(args.config).output)
    raise TsflaError("pass --store or --config")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    try:
        if args.command == "suite":
            if args.config:
                problems = ExperimentConfig.load(args.config).problems()
            else:
                problems = build_suite(args.bases or DEFAULT_BASES, 2, same_base_pairs=args.same_base_pairs)
            for problem in problems:
                print(problem.id)
        elif args.command == "run":
            config = ExperimentConfig.load(args.config)
            store = cmd_run(config, resume=args.resume, workers=args.workers)
            print(f"runs written to {store.root}")
        elif args.command == "features":
            frame = cmd_features(_store(args), workers=args.workers)
            print(f"{len(frame)} median feature rows")
        elif args.command == "stats":
            table = cmd_stats(_store(args))
            print(f"{len(table)} statistics cells")
        elif args.command == "predict":
            models, _ = cmd_predict(_store(args), args.mode)
            print(f"{(models['status'] == 'ok').sum()} of {len(models)} models fitted")
        elif args.command == "report":
            print(cmd_report(_store(args)), end="")
    except TsflaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
