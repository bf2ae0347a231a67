"""Command-line entry point: `ccm train|eval|cuts|env info|compare|verify-report`."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from typing import NoReturn, Optional, Sequence

import pandas as pd

from ccm import __version__
from ccm.const import DEFAULT_LOG_LEVEL, LOG_LEVEL_ENV_VAR
from ccm.cuts import brute_force_min_cuts, enumerate_min_cuts, features
from ccm.envs import UnknownScenarioError, load_scenario
from ccm.exceptions import CcmError, ConfigError
from ccm.graph import NoiseKind
from ccm.harness import compare, load_config, noise_regime, run_eval, run_train, verify_report
from ccm.harness.const import DEFAULT_COHORT_SIZE, DEFAULT_EVAL_EPISODES

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _print_table(frame: pd.DataFrame) -> None:
    print(frame.to_string(index=False))
    print()
    frame.to_csv(sys.stdout, index=False)


def _cut_table(name: str) -> pd.DataFrame:
    graph = load_scenario(name).build_graph()
    catalog = enumerate_min_cuts(graph)
    rows = [dict(row, **feats.as_dict()) for row, feats in zip(catalog.to_rows(), features(graph, catalog))]
    return pd.DataFrame(rows)


def cmd_train(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.workers is not None:
        config = replace(config, workers=args.workers)
    report = run_train(config, args.output_dir)
    print(f"reward {report.mean('reward'):.4f} +/- {report.sd('reward'):.4f} over seeds {list(report.seeds)}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    noise = noise_regime(args.noise, args.trigger_prob) if args.noise else None
    report = run_eval(
        args.checkpoint,
        scenario=args.scenario,
        episodes=args.episodes,
        noise=noise,
        seed=args.seed,
        output_dir=args.output_dir,
        cohort_size=args.cohort,
    )
    frame = pd.DataFrame.from_dict(report.per_seed, orient="index").sort_index()
    frame.index.name = "seed"
    _print_table(frame.reset_index())
    return EXIT_OK


def cmd_cuts(args: argparse.Namespace) -> int:
    table = _cut_table(args.scenario)
    _print_table(table)
    if args.check:
        graph = load_scenario(args.scenario).build_graph()
        expected = {cut.nodes for cut in brute_force_min_cuts(graph)}
        found = {cut.nodes for cut in enumerate_min_cuts(graph)}
        if expected != found:
            logger.error(f"Catalog differs from the exhaustive search: {sorted(found ^ expected)}")
            return EXIT_RUNTIME
        logger.info(f"Catalog matches the exhaustive search ({len(found)} cuts)")
    return EXIT_OK


def cmd_env_info(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.name)
    graph = scenario.build_graph()
    nodes = pd.DataFrame(
        [
            {
                "id": node,
                "name": graph.spec(node).name,
                "role": graph.spec(node).role.value,
                "equation": type(graph.spec(node).equation).__name__,
                "lo": graph.spec(node).bounds[0],
                "hi": graph.spec(node).bounds[1],
            }
            for node in graph.node_ids
        ]
    )
    print(f"scenario: {scenario.name}")
    print(f"goal: center={list(scenario.goal_center)} half_width={scenario.goal_half_width}")
    print(f"episode_len: {scenario.episode_len}  noise: {scenario.noise.kind.value}  digest: {scenario.digest[:12]}")
    print()
    _print_table(nodes)
    print()
    _print_table(_cut_table(args.name))
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    _print_table(compare(args.report_a, args.report_b, args.output_dir))
    return EXIT_OK


def cmd_verify_report(args: argparse.Namespace) -> int:
    verify_report(args.run_dir)
    print(f"{args.run_dir}: report matches its episode log")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ccm", description="Hierarchical control of causal graph dynamics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help=f"Logging level (default: ${LOG_LEVEL_ENV_VAR} or {DEFAULT_LOG_LEVEL})")
    commands = parser.add_subparsers(dest="command", required=True)

    train = commands.add_parser("train", help="Train an agent from a JSON experiment config")
    train.add_argument("config", help="Path to the experiment config")
    train.add_argument("--output-dir", default=None, help="Override the config's output directory")
    train.add_argument("--workers", type=int, default=None, help="Seed jobs run in parallel")
    train.set_defaults(handler=cmd_train)

    evaluate = commands.add_parser("eval", help="Evaluate a checkpoint or every checkpoint of a run")
    evaluate.add_argument("checkpoint", help="Checkpoint file or training run directory")
    evaluate.add_argument("--scenario", default=None, help="Scenario name (default: the one recorded in the checkpoint)")
    evaluate.add_argument("--episodes", type=int, default=DEFAULT_EVAL_EPISODES)
    evaluate.add_argument("--noise", choices=[kind.value for kind in NoiseKind], default=None)
    evaluate.add_argument("--trigger-prob", type=float, default=None)
    evaluate.add_argument("--seed", type=int, default=0)
    evaluate.add_argument("--cohort", type=int, nargs="?", const=DEFAULT_COHORT_SIZE, default=0, help="Cohort sweep size")
    evaluate.add_argument("--output-dir", default=None)
    evaluate.set_defaults(handler=cmd_eval)

    cuts = commands.add_parser("cuts", help="Print a scenario's minimum cut catalog")
    cuts.add_argument("scenario")
    cuts.add_argument("--check", action="store_true", help="Cross-check against the exhaustive search")
    cuts.set_defaults(handler=cmd_cuts)

    env = commands.add_parser("env", help="Scenario information")
    env_commands = env.add_subparsers(dest="env_command", required=True)
    info = env_commands.add_parser("info", help="Roles, goal and cut catalog of a scenario")
    info.add_argument("name")
    info.set_defaults(handler=cmd_env_info)

    diff = commands.add_parser("compare", help="Compare two reports seed by seed")
    diff.add_argument("report_a")
    diff.add_argument("report_b")
    diff.add_argument("--output-dir", default=None, help="Write compare.csv here")
    diff.set_defaults(handler=cmd_compare)

    verify = commands.add_parser("verify-report", help="Re-derive a run's report from its episode log")
    verify.add_argument("run_dir")
    verify.set_defaults(handler=cmd_verify_report)
    return parser


def _configure_logging(level: Optional[str]) -> None:
    level = (level or os.environ.get(LOG_LEVEL_ENV_VAR) or DEFAULT_LOG_LEVEL).upper()
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI; returns 0 on success, 1 on a configuration error and 2 on a runtime failure."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as e:
        print(f"ccm: error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        _configure_logging(args.log_level)
    except ValueError as e:
        print(f"ccm: error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return int(args.handler(args))
    except (ConfigError, UnknownScenarioError) as e:
        logger.error(str(e))
        return EXIT_CONFIG
    except CcmError as e:
        logger.error(str(e))
        return EXIT_RUNTIME
    except Exception as e:
        logger.exception(f"Unexpected failure: {e}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
