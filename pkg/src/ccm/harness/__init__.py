"""Experiment plumbing: training and evaluation runs, their artifacts, and the reports derived from them."""

from __future__ import annotations

import json
import logging
import pathlib
from typing import Any, Optional, Union

import numpy as np
import pandas as pd
from scipy.stats import binomtest

from ccm.agent import rollout, to_frame, train_seed
from ccm.envs import (
    ScenarioEnv,
    ScenarioName,
    UnknownScenarioError,
    base_individual,
    build_glucose,
    load_scenario,
    make_cohort,
    verify_fixture,
)
from ccm.envs._utils import scenario_name
from ccm.exceptions import ConfigError
from ccm.graph import NoiseKind, NoiseRegime
from ccm.graph._utils import noise_to_dict, read_json, write_json
from ccm.jobs import JobBoard, SeedJobFailed, run_seed_jobs
from ccm.nn import load_checkpoint, save_checkpoint
from ccm.utils import spawn_rngs

from ._utils import (
    aggregate,
    checkpoint_path,
    cohort_metrics,
    concat_logs,
    curves,
    cut_histogram,
    diff_numbers,
    eval_log_path,
    find_checkpoints,
    frame_or_empty,
    read_log,
    restore_agent,
    seed_log_path,
    seed_metrics,
    tir_table,
    write_log,
)
from .base import ExperimentConfig, MetricsReport
from .const import (
    CHECKPOINTS_DIR_NAME,
    COHORT_LOG_FILE_NAME,
    COMPARE_FILE_NAME,
    CONFIG_FILE_NAME,
    CURVES_FCR_FILE_NAME,
    CURVES_HIGH_FILE_NAME,
    CURVES_LOW_FILE_NAME,
    CUT_HISTOGRAM_FILE_NAME,
    DEFAULT_EVAL_EPISODES,
    DEFAULT_NOISE_TRIGGER_PROB,
    EPISODE_LOG_FILE_NAME,
    EVAL_LOG_FILE_NAME,
    JOBS_FILE_NAME,
    METRICS_AGGREGATE_FILE_NAME,
    METRICS_PER_SEED_FILE_NAME,
    REPORT_FILE_NAME,
    REPORT_RTOL,
    SCENARIO_MISMATCH_ERROR_MSG,
    SEED_LOGS_DIR_NAME,
    SEEDS_MISMATCH_ERROR_MSG,
    TIR_TABLE_FILE_NAME,
)
from .exceptions import IncompatibleCheckpointError, MismatchError, ReportMismatchError

logger = logging.getLogger(__name__)

__all__ = (
    "ConfigError",
    "ExperimentConfig",
    "IncompatibleCheckpointError",
    "MetricsReport",
    "MismatchError",
    "ReportMismatchError",
    "compare",
    "derive_report",
    "load_config",
    "load_report",
    "noise_regime",
    "relative_degradation",
    "run_eval",
    "run_train",
    "verify_report",
)

PathLike = Union[str, pathlib.Path]
ReportLike = Union[MetricsReport, PathLike]


def load_config(file_path: PathLike) -> ExperimentConfig:
    """Read an experiment config from a JSON file.

    Raises:
        ConfigError: If the file is missing, is not JSON, or describes an invalid experiment.
    """
    try:
        with open(file_path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {file_path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{file_path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{file_path}: config must be a JSON object")
    return ExperimentConfig.from_dict(data)


def noise_regime(kind: Union[str, NoiseKind], trigger_prob: Optional[float] = None) -> NoiseRegime:
    """Noise regime for an override flag; `random_large` defaults to a 5% trigger probability."""
    kind = NoiseKind(kind)
    if kind is NoiseKind.none:
        return NoiseRegime()
    return NoiseRegime(kind=kind, trigger_prob=DEFAULT_NOISE_TRIGGER_PROB if trigger_prob is None else trigger_prob)


def load_report(source: PathLike) -> MetricsReport:
    """Read `report.json` from a file or a run directory."""
    path = pathlib.Path(source)
    if path.is_dir():
        path = path / REPORT_FILE_NAME
    return MetricsReport.from_dict(read_json(path))


def _write_report(output_dir: pathlib.Path, report: MetricsReport, frame: pd.DataFrame) -> None:
    write_json(output_dir / REPORT_FILE_NAME, report.to_dict())
    per_seed = pd.DataFrame.from_dict(report.per_seed, orient="index").sort_index()
    per_seed.index.name = "seed"
    per_seed.to_csv(output_dir / METRICS_PER_SEED_FILE_NAME)
    totals = pd.DataFrame.from_dict(report.aggregate, orient="index").sort_index()
    totals.index.name = "metric"
    totals.to_csv(output_dir / METRICS_AGGREGATE_FILE_NAME)
    tables = curves(frame)
    tables["low"].to_csv(output_dir / CURVES_LOW_FILE_NAME, index=False)
    tables["high"].to_csv(output_dir / CURVES_HIGH_FILE_NAME, index=False)
    tables["updates"].to_csv(output_dir / CURVES_FCR_FILE_NAME, index=False)
    tables["cuts"].to_csv(output_dir / CUT_HISTOGRAM_FILE_NAME, index=False)


def derive_report(
    frame: pd.DataFrame,
    scenario: str,
    agent: str,
    seeds: tuple[int, ...],
    metrics: tuple[str, ...] = ("reward",),
    cohort: Optional[pd.DataFrame] = None,
    evaluation: Optional[pd.DataFrame] = None,
    **provenance: Any,
) -> MetricsReport:
    """Build a report from an episode log (plus cohort and greedy evaluation logs) and nothing else.

    Args:
        frame (pd.DataFrame): Episode log of every seed.
        scenario (str): Scenario name.
        agent (str): Agent kind.
        seeds (tuple[int, ...]): Seeds the run was asked for; seeds without rows get NaN metrics.
        metrics (tuple[str, ...]): Scenario metrics; `tir` adds time-in-range figures.
        cohort (Optional[pd.DataFrame]): Cohort rollouts, one `seed` value per individual, read
            together with `provenance["extra"]["cohort"]`.
        evaluation (Optional[pd.DataFrame]): Greedy rollouts made right after training; adds
            `eval_reward` (and `eval_tir`) per seed.
        **provenance: `config_hash`, `fixture_digests`, `failed_seeds` and `extra`, copied as is.
    """
    with_tir = "tir" in metrics
    per_seed = {seed: seed_metrics(frame[frame["seed"] == seed], with_tir) for seed in seeds}
    extra = dict(provenance.pop("extra", {}) or {})
    if cohort is not None and len(seeds) == 1:
        per_seed[seeds[0]].update(cohort_metrics(cohort, extra.get("cohort", [])))
    if evaluation is not None:
        for seed in seeds:
            greedy = seed_metrics(evaluation[evaluation["seed"] == seed], with_tir)
            per_seed[seed]["eval_reward"] = greedy["reward"]
            if with_tir:
                per_seed[seed]["eval_tir"] = greedy["tir"]
    return MetricsReport(
        scenario=scenario,
        agent=agent,
        seeds=tuple(seeds),
        per_seed=per_seed,
        aggregate=aggregate(per_seed),
        cut_histogram=cut_histogram(frame),
        metrics=tuple(metrics),
        extra=extra,
        **provenance,
    )


def _train_seed_job(seed: int, payload: dict[str, Any]) -> dict[str, int]:
    config = ExperimentConfig.from_dict(payload["config"])
    output_dir = pathlib.Path(payload["output_dir"])
    scenario = load_scenario(config.scenario)
    run = train_seed(
        scenario,
        config.hyperparams,
        seed,
        config.training_budget,
        kind=config.agent,
        noise=config.noise,
        baseline_episodes=config.baseline_episodes,
    )
    run.final.meta["scenario"] = config.scenario
    save_checkpoint(checkpoint_path(output_dir, seed), run.final)
    write_log(to_frame(run.rows), seed_log_path(output_dir, seed))
    if config.eval_episodes:
        env_rng, agent_rng = spawn_rngs(seed, 5)[3:]
        env = ScenarioEnv(scenario, env_rng, config.noise)
        agent = restore_agent(run.final, env.graph, scenario, agent_rng)
        write_log(to_frame(rollout(env, agent, config.eval_episodes, seed)), eval_log_path(output_dir, seed))
    return {"steps": run.steps, "episodes": run.episodes}


def run_train(config: ExperimentConfig, output_dir: Optional[PathLike] = None) -> MetricsReport:
    """Train the configured agent once per seed and write every artifact of the run.

    The output directory receives `config.json`, one checkpoint per seed, the merged episode log,
    `report.json` and the metric, curve and cut-histogram CSVs. Each seed then plays
    `config.eval_episodes` greedy episodes from its final checkpoint; they go to `eval_log.csv` and
    the `eval_reward` metric. Seeds run as jobs on a board in
    the same directory, `config.workers` at a time.

    Raises:
        SeedJobFailed: If any seed failed. The artifacts of the other seeds are written first.
    """
    out = pathlib.Path(output_dir or config.output_dir)
    for directory in (out, out / CHECKPOINTS_DIR_NAME, out / SEED_LOGS_DIR_NAME):
        directory.mkdir(parents=True, exist_ok=True)
    write_json(out / CONFIG_FILE_NAME, config.to_dict())
    digests = {config.scenario: verify_fixture(config.scenario)}
    config_hash = config.config_hash()
    logger.info(f"Training {config.agent.value} on {config.scenario} for seeds {list(config.seeds)} (config {config_hash})")

    JobBoard(out / JOBS_FILE_NAME, "train").delete()
    payload = {"config": config.to_dict(), "output_dir": str(out)}
    failures: dict[int, str] = {}
    try:
        run_seed_jobs(_train_seed_job, config.seeds, out / JOBS_FILE_NAME, payload, workers=config.workers, board_name="train")
    except SeedJobFailed as e:
        failures = e.failures
        logger.error(f"Config {config_hash}: seeds {sorted(failures)} failed, keeping the results of the others")

    completed = [seed for seed in sorted(config.seeds) if seed not in failures]
    write_log(concat_logs([read_log(seed_log_path(out, seed)) for seed in completed]), out / EPISODE_LOG_FILE_NAME)
    frame = read_log(out / EPISODE_LOG_FILE_NAME)
    evaluation: Optional[pd.DataFrame] = None
    if config.eval_episodes:
        write_log(concat_logs([read_log(eval_log_path(out, seed)) for seed in completed]), out / EVAL_LOG_FILE_NAME)
        evaluation = read_log(out / EVAL_LOG_FILE_NAME)
    scenario = load_scenario(config.scenario)
    report = derive_report(
        frame,
        config.scenario,
        config.agent.value,
        tuple(sorted(config.seeds)),
        scenario.metrics,
        evaluation=evaluation,
        config_hash=config_hash,
        fixture_digests=digests,
        failed_seeds=tuple(sorted(failures)),
        extra={"mode": "train", "budget": config.training_budget},
    )
    _write_report(out, report, frame)
    if failures:
        raise SeedJobFailed(failures)
    logger.info(f"Run written to {out}: reward {report.mean('reward'):.3f} +/- {report.sd('reward'):.3f}")
    return report


def _evaluate(
    checkpoint_file: pathlib.Path,
    scenario_key: ScenarioName,
    episodes: int,
    noise: Optional[NoiseRegime],
    seed: int,
) -> pd.DataFrame:
    checkpoint = load_checkpoint(checkpoint_file)
    scenario = load_scenario(scenario_key)
    env_rng, agent_rng = spawn_rngs(seed, 2)
    env = ScenarioEnv(scenario, env_rng, noise)
    agent = restore_agent(checkpoint, env.graph, scenario, agent_rng)
    return to_frame(rollout(env, agent, episodes, seed))


def _cohort_sweep(
    checkpoint_file: pathlib.Path, size: int, noise: Optional[NoiseRegime], seed: int
) -> tuple[pd.DataFrame, list[dict[str, Any]]]:
    checkpoint = load_checkpoint(checkpoint_file)
    cohort_rng, *member_rngs = spawn_rngs(seed, 1 + 2 * size)
    cohort = make_cohort(base_individual(), size, cohort_rng)
    frames, members = [], []
    for i, individual in enumerate(cohort):
        scenario = build_glucose(individual)
        env = ScenarioEnv(scenario, member_rngs[2 * i], noise)
        agent = restore_agent(checkpoint, env.graph, scenario, member_rngs[2 * i + 1])
        frames.append(to_frame(rollout(env, agent, 1, seed=i)))
        members.append({"seed": i, "id": individual.id, "group": individual.group.value})
        logger.debug(f"Cohort member {individual.id} done")
    return concat_logs(frames), members


def run_eval(
    checkpoint: PathLike,
    scenario: Optional[str] = None,
    episodes: int = DEFAULT_EVAL_EPISODES,
    noise: Optional[NoiseRegime] = None,
    seed: int = 0,
    output_dir: Optional[PathLike] = None,
    cohort_size: int = 0,
) -> MetricsReport:
    """Roll out frozen policies and report their reward (and time in range on glucose).

    `checkpoint` is a checkpoint file, evaluated with `seed`, or a training run directory whose
    checkpoints are each evaluated with their training seed. A positive `cohort_size` adds a
    sweep over that many perturbed individuals (glucose only, single checkpoint), written to
    `tir_table.csv`.

    Raises:
        IncompatibleCheckpointError: If a checkpoint does not fit the scenario.
        ConfigError: On a cohort sweep outside the glucose scenario or a bad episode count.
    """
    if episodes < 1:
        raise ConfigError(f"episodes must be >= 1, got {episodes}")
    source = pathlib.Path(checkpoint)
    files = find_checkpoints(source) if source.is_dir() else {seed: source}
    if not files:
        raise IncompatibleCheckpointError(f"no checkpoints found under {source}")
    if scenario is None:
        scenario = load_checkpoint(next(iter(files.values()))).meta.get("scenario")
        if scenario is None:
            raise ConfigError("checkpoint does not record its scenario, pass one explicitly")
    try:
        scenario_key = scenario_name(scenario)
    except UnknownScenarioError as e:
        raise ConfigError(str(e)) from e
    if cohort_size and (scenario_key is not ScenarioName.glucose or len(files) != 1):
        raise ConfigError("cohort sweeps need the glucose scenario and a single checkpoint")
    meta = load_checkpoint(next(iter(files.values()))).meta

    frame = concat_logs([_evaluate(path, scenario_key, episodes, noise, s) for s, path in files.items()])
    cohort_frame: Optional[pd.DataFrame] = None
    extra: dict[str, Any] = {
        "mode": "eval",
        "episodes": episodes,
        "noise": None if noise is None else noise_to_dict(noise),
        "checkpoint": str(source),
    }
    if cohort_size:
        cohort_frame, members = _cohort_sweep(next(iter(files.values())), cohort_size, noise, seed)
        extra["cohort"] = members

    loaded = load_scenario(scenario_key)
    report = derive_report(
        frame,
        scenario_key.value,
        str(meta.get("interface", {}).get("kind", "")),
        tuple(files),
        loaded.metrics,
        cohort=cohort_frame,
        fixture_digests={scenario_key.value: loaded.digest},
        extra=extra,
    )
    if output_dir is not None:
        out = pathlib.Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_log(frame, out / EPISODE_LOG_FILE_NAME)
        if cohort_frame is not None:
            write_log(cohort_frame, out / COHORT_LOG_FILE_NAME)
            tir_table(cohort_frame, extra["cohort"]).to_csv(out / TIR_TABLE_FILE_NAME, index=False)
        _write_report(out, report, frame)
        logger.info(f"Evaluation written to {out}")
    return report


def _as_report(report: ReportLike) -> MetricsReport:
    return report if isinstance(report, MetricsReport) else load_report(report)


def compare(report_a: ReportLike, report_b: ReportLike, output_dir: Optional[PathLike] = None) -> pd.DataFrame:
    """Per-metric deltas `a - b` over paired seeds, with a one-sided sign test in favor of `a`.

    Returns:
        pd.DataFrame: One row per metric with both means, the mean delta, win/tie counts and the
            sign-test p-value (1.0 when every seed ties).

    Raises:
        MismatchError: If the reports come from different scenarios or seeds.
    """
    a, b = _as_report(report_a), _as_report(report_b)
    if a.scenario != b.scenario:
        raise MismatchError(f"{SCENARIO_MISMATCH_ERROR_MSG}: '{a.scenario}' vs '{b.scenario}'")
    if sorted(a.seeds) != sorted(b.seeds):
        raise MismatchError(f"{SEEDS_MISMATCH_ERROR_MSG}: {list(a.seeds)} vs {list(b.seeds)}")
    rows = []
    for metric in sorted(set(a.aggregate) & set(b.aggregate)):
        values_a, values_b = a.values(metric), b.values(metric)
        deltas = np.array(
            [values_a[s] - values_b[s] for s in sorted(a.seeds) if s in values_a and s in values_b], dtype=float
        )
        deltas = deltas[np.isfinite(deltas)]
        wins_a, wins_b = int((deltas > 0).sum()), int((deltas < 0).sum())
        p_value = binomtest(wins_a, wins_a + wins_b, 0.5, alternative="greater").pvalue if wins_a + wins_b else 1.0
        rows.append(
            {
                "metric": metric,
                "mean_a": a.mean(metric),
                "mean_b": b.mean(metric),
                "delta": float(deltas.mean()) if deltas.size else float("nan"),
                "wins_a": wins_a,
                "wins_b": wins_b,
                "ties": int(deltas.size - wins_a - wins_b),
                "p_value": float(p_value),
            }
        )
    table = pd.DataFrame(rows, columns=["metric", "mean_a", "mean_b", "delta", "wins_a", "wins_b", "ties", "p_value"])
    if output_dir is not None:
        out = pathlib.Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        table.to_csv(out / COMPARE_FILE_NAME, index=False)
    return table


def relative_degradation(clean: ReportLike, noisy: ReportLike, metric: str = "reward") -> dict[int, float]:
    """Per-seed `(clean - noisy) / |clean|` of one metric, for paired evaluations of the same checkpoints."""
    a, b = _as_report(clean), _as_report(noisy)
    if a.scenario != b.scenario:
        raise MismatchError(f"{SCENARIO_MISMATCH_ERROR_MSG}: '{a.scenario}' vs '{b.scenario}'")
    values_a, values_b = a.values(metric), b.values(metric)
    return {
        seed: (values_a[seed] - values_b[seed]) / abs(values_a[seed])
        for seed in sorted(values_a)
        if seed in values_b and values_a[seed] != 0
    }


def verify_report(run_dir: PathLike) -> MetricsReport:
    """Re-derive a run's report from its logs and check it against `report.json`.

    Returns:
        MetricsReport: The re-derived report.

    Raises:
        ReportMismatchError: If any number differs.
    """
    out = pathlib.Path(run_dir)
    stored = load_report(out)
    frame = read_log(out / EPISODE_LOG_FILE_NAME)
    derived = derive_report(
        frame,
        stored.scenario,
        stored.agent,
        stored.seeds,
        stored.metrics,
        cohort=frame_or_empty(out / COHORT_LOG_FILE_NAME),
        evaluation=frame_or_empty(out / EVAL_LOG_FILE_NAME),
        config_hash=stored.config_hash,
        fixture_digests=stored.fixture_digests,
        failed_seeds=stored.failed_seeds,
        extra=stored.extra,
    )
    expected, actual = stored.to_dict(), derived.to_dict()
    differences = diff_numbers(expected, actual, REPORT_RTOL)
    if differences:
        raise ReportMismatchError(differences)
    logger.info(f"{out}: report matches its episode log")
    return derived

