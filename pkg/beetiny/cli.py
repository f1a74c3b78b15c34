"""
Command line interface
----------------------

.. code-block:: text

    bee-tiny explore --config bee.yaml --seed 0 --out runs/bee
    bee-tiny eval --dataset runs/bee/dataset.bin --task drawer_open --trials 100
    bee-tiny ablate --config bee.yaml --sweep reward_mode=max,mean_plus_variance,single
    bee-tiny report --runs runs/a runs/b --out report.csv
"""
import argparse
import logging
import sys
import typing

from .bee import Bee
from .extensions.ablation import build_report, write_report
from .extensions.datasets import load_dataset
from .models.config import ExperimentConfig
from .utils.conf import load_config
from .utils.errors import BeeError


def _config(args: argparse.Namespace) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        config = config._replace(seed=args.seed)
    return config.validate()


def explore(args: argparse.Namespace) -> int:
    result = Bee(_config(args)).exploration.run(out_dir=args.out)
    print(f"Collected {len(result.dataset.episodes)} episodes into {args.out}")
    return 0


def evaluate(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.dataset)
    result = Bee(_config(args)).downstream.run_eval(dataset, args.task, trials=args.trials)
    print(f"{result.task}: success rate {result.success_rate:.3f} over {result.trials} trials")
    return 0


def ablate(args: argparse.Namespace) -> int:
    result = Bee(_config(args)).ablation.run(args.sweep, seeds=args.seeds, out_dir=args.out,
                                             workers=args.workers, window=args.window)
    for row in result.report:
        print(f"{row.setting}\twindow {row.window}\t{row.mean:.3f} +- {row.stderr:.3f}")
    return 0


def report(args: argparse.Namespace) -> int:
    rows = build_report(args.runs, window=args.window)
    write_report(rows, args.out)
    print(f"Wrote {len(rows)} rows to {args.out}")
    return 0


def get_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bee-tiny",
                                     description="Weakly-supervised batch exploration.")
    parser.add_argument("--verbose", "-v", action="count", default=0,
                        help="Log progress (-v) or debug output (-vv)")
    commands = parser.add_subparsers(dest="command", required=True)

    command = commands.add_parser("explore", help="Collect a dataset")
    command.add_argument("--config", help="YAML or JSON config file")
    command.add_argument("--seed", type=int, help="Override the configured seed")
    command.add_argument("--out", required=True, help="Output directory")
    command.set_defaults(func=explore)

    command = commands.add_parser("eval", help="Evaluate a dataset on a downstream task")
    command.add_argument("--config", help="YAML or JSON config file")
    command.add_argument("--dataset", required=True, help="Dataset file")
    command.add_argument("--task", required=True, help="Task name, e.g. drawer_open")
    command.add_argument("--trials", type=int, help="Number of trials")
    command.set_defaults(func=evaluate)

    command = commands.add_parser("ablate", help="Sweep one config key over several seeds")
    command.add_argument("--config", help="YAML or JSON config file")
    command.add_argument("--sweep", required=True, help="e.g. latent_dim=8,16,32,64")
    command.add_argument("--seeds", type=int, nargs="+", default=[0, 1], help="Seeds per value")
    command.add_argument("--out", default="ablation", help="Output directory")
    command.add_argument("--workers", type=int, default=1, help="Parallel processes")
    command.add_argument("--window", type=int, help="Interaction frequency window")
    command.set_defaults(func=ablate)

    command = commands.add_parser("report", help="Compare finished runs")
    command.add_argument("--runs", nargs="+", required=True, help="Run directories")
    command.add_argument("--out", required=True, help="Report CSV file")
    command.add_argument("--window", type=int, default=100, help="Interaction frequency window")
    command.set_defaults(func=report)
    return parser


def main(argv: typing.Optional[typing.Sequence[str]] = None) -> int:
    args = get_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except (BeeError, FileNotFoundError) as error:
        print(f"Error: {error}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
