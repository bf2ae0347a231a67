import json
import math
import os
import pathlib
import shutil
import tempfile

import numpy as np
import pandas as pd
import pytest

from ccm.const import EPISODE_LOG_COLUMNS
from ccm.graph import NoiseKind, NoiseRegime
from ccm.harness import (
    ConfigError,
    ExperimentConfig,
    IncompatibleCheckpointError,
    MetricsReport,
    MismatchError,
    ReportMismatchError,
    compare,
    derive_report,
    load_config,
    load_report,
    noise_regime,
    relative_degradation,
    run_eval,
    run_train,
    verify_report,
)
from ccm.harness.const import (
    CHECKPOINTS_DIR_NAME,
    COMPARE_FILE_NAME,
    CONFIG_FILE_NAME,
    CURVES_FCR_FILE_NAME,
    CURVES_HIGH_FILE_NAME,
    CURVES_LOW_FILE_NAME,
    CUT_HISTOGRAM_FILE_NAME,
    EPISODE_LOG_FILE_NAME,
    EVAL_LOG_FILE_NAME,
    METRICS_AGGREGATE_FILE_NAME,
    METRICS_PER_SEED_FILE_NAME,
    REPORT_FILE_NAME,
    SCENARIO_MISMATCH_ERROR_MSG,
    SEEDS_MISMATCH_ERROR_MSG,
)

SMALL_HYPERPARAMS = {"C": 5, "hidden": [8], "fcr_hidden": 4, "fcr_window": 5, "explore_steps": 500}


def small_config(**overrides) -> ExperimentConfig:
    data = {
        "scenario": "fork_join",
        "hyperparams": SMALL_HYPERPARAMS,
        "seeds": [0, 1],
        "budget": 200,
        "baseline_episodes": 1,
        "eval_episodes": 1,
    }
    data.update(overrides)
    return ExperimentConfig.from_dict(data)


@pytest.fixture(scope="module")
def trained_run():
    with tempfile.TemporaryDirectory() as run_dir:
        report = run_train(small_config(), run_dir)
        yield pathlib.Path(run_dir), report


def write_config(directory: str, data) -> str:
    path = os.path.join(directory, "experiment.json")
    with open(path, "w", encoding="utf-8") as f:
        f.write(data if isinstance(data, str) else json.dumps(data))
    return path


def test_load_config(temp_dir):
    path = write_config(temp_dir, {"scenario": "glucose", "agent": "flat", "seeds": [3, 1]})
    config = load_config(path)
    assert config.scenario == "glucose"
    assert config.agent.value == "flat"
    assert config.seeds == (3, 1)
    assert config.budget == 500_000
    assert ExperimentConfig("env1").budget == 200_000


@pytest.mark.parametrize(
    "data",
    [
        "{not json",
        "[1, 2]",
        {"agent": "ccm"},
        {"scenario": "env9"},
        {"scenario": "env1", "agent": "random"},
        {"scenario": "env1", "seeds": []},
        {"scenario": "env1", "seeds": [1, 1]},
        {"scenario": "env1", "budget": -1},
        {"scenario": "env1", "workers": 0},
        {"scenario": "env1", "learning_rate": 0.1},
        {"scenario": "env1", "hyperparams": {"C": 0}},
        {"scenario": "env1", "noise": {"kind": "random_large", "trigger_prob": 2.0}},
    ],
)
def test_invalid_configs(temp_dir, data):
    with pytest.raises(ConfigError):
        load_config(write_config(temp_dir, data))


def test_missing_config_file(temp_dir):
    with pytest.raises(ConfigError):
        load_config(os.path.join(temp_dir, "absent.json"))


def test_config_round_trip_and_hash():
    config = small_config(noise={"kind": "random_large", "trigger_prob": 0.05})
    assert ExperimentConfig.from_dict(config.to_dict()) == config
    assert config.with_output_dir("elsewhere").config_hash() == config.config_hash()
    assert small_config(budget=300).config_hash() != config.config_hash()
    assert len(config.config_hash()) == 16


def test_noise_regime():
    assert noise_regime("none") == NoiseRegime()
    regime = noise_regime("random_large")
    assert regime.kind is NoiseKind.random_large
    assert regime.trigger_prob == 0.05
    assert noise_regime(NoiseKind.random_large, 0.2).trigger_prob == 0.2


def log_frame(rows) -> pd.DataFrame:
    return pd.DataFrame(rows, columns=list(EPISODE_LOG_COLUMNS))


def test_derive_report():
    frame = log_frame(
        [
            {"seed": 0, "episode": 0, "t": 0, "level": "high", "view": -1, "cut_id": 2, "reward": 5.0},
            {"seed": 0, "episode": 0, "t": 0, "level": "low", "view": 0, "reward": 1.0, "target_value": 2.0},
            {"seed": 0, "episode": 0, "t": 1, "level": "low", "view": 0, "reward": 3.0, "target_value": 2.5},
            {"seed": 0, "episode": 0, "t": 1, "level": "low", "view": 1, "reward": 7.0},
            {"seed": 0, "episode": 0, "t": 1, "level": "update", "view": 0, "loss_fcr": 0.4},
            {"seed": 0, "episode": 0, "t": 0, "level": "random", "view": 0, "reward": 0.5},
        ]
    )
    report = derive_report(frame, "fork_join", "ccm", (0, 1), config_hash="abc", extra={"mode": "train"})
    metrics = report.per_seed[0]
    assert metrics["reward"] == 2.0
    assert metrics["reward_view_1"] == 7.0
    assert metrics["high_reward"] == 5.0
    assert metrics["fcr_loss"] == pytest.approx(0.4)
    assert metrics["random_reward"] == 0.5
    assert math.isnan(report.per_seed[1]["reward"])
    assert report.aggregate["reward"]["mean"] == 2.0
    assert report.aggregate["reward"]["count"] == 1.0
    assert math.isnan(report.sd("reward"))
    assert report.cut_histogram == {2: 1}
    assert report.config_hash == "abc"
    assert report.extra == {"mode": "train"}


def test_report_round_trip():
    report = MetricsReport(
        scenario="env1",
        agent="ccm",
        seeds=(0, 1),
        per_seed={0: {"reward": 1.0}, 1: {"reward": math.nan}},
        aggregate={"reward": {"mean": 1.0, "sd": math.nan, "count": 1.0}},
        cut_histogram={0: 4},
    )
    data = json.loads(json.dumps(report.to_dict()))
    assert data["per_seed"]["1"]["reward"] is None
    loaded = MetricsReport.from_dict(data)
    assert loaded.per_seed[0] == {"reward": 1.0}
    assert math.isnan(loaded.per_seed[1]["reward"])
    assert loaded.cut_histogram == {0: 4}


def test_run_train_writes_artifacts(trained_run):
    run_dir, report = trained_run
    for name in (
        CONFIG_FILE_NAME,
        REPORT_FILE_NAME,
        EPISODE_LOG_FILE_NAME,
        METRICS_PER_SEED_FILE_NAME,
        METRICS_AGGREGATE_FILE_NAME,
        CURVES_LOW_FILE_NAME,
        CURVES_HIGH_FILE_NAME,
        CURVES_FCR_FILE_NAME,
        CUT_HISTOGRAM_FILE_NAME,
    ):
        assert (run_dir / name).exists(), name
    assert sorted(p.name for p in (run_dir / CHECKPOINTS_DIR_NAME).iterdir()) == ["seed_0.npz", "seed_1.npz"]
    assert report.seeds == (0, 1)
    assert report.failed_seeds == ()
    assert report.config_hash == small_config().config_hash()
    assert set(report.per_seed) == {0, 1}
    assert np.isfinite(report.mean("reward"))
    assert np.isfinite(report.mean("random_reward"))
    assert sum(report.cut_histogram.values()) == 2 * 200 // 5
    assert load_report(run_dir).to_dict() == report.to_dict()


def test_run_train_plays_greedy_episodes_per_seed(trained_run):
    run_dir, report = trained_run
    evaluation = pd.read_csv(run_dir / EVAL_LOG_FILE_NAME)
    assert sorted(evaluation["seed"].unique()) == [0, 1]
    assert set(evaluation["episode"]) == {0}
    assert (evaluation["level"] != "update").all()
    for seed in (0, 1):
        assert np.isfinite(report.per_seed[seed]["eval_reward"])


def test_run_train_without_greedy_episodes(temp_dir):
    report = run_train(small_config(seeds=[0], budget=50, eval_episodes=0), temp_dir)
    assert not (pathlib.Path(temp_dir) / EVAL_LOG_FILE_NAME).exists()
    assert "eval_reward" not in report.per_seed[0]
    assert verify_report(temp_dir).to_dict() == report.to_dict()


def test_verify_report(trained_run):
    run_dir, report = trained_run
    assert verify_report(run_dir).to_dict() == report.to_dict()


def test_verify_report_detects_tampering(trained_run, temp_dir):
    run_dir, _ = trained_run
    copy = pathlib.Path(temp_dir) / "run"
    shutil.copytree(run_dir, copy)
    with open(copy / REPORT_FILE_NAME, "r", encoding="utf-8") as f:
        data = json.load(f)
    data["per_seed"]["0"]["reward"] += 1.0
    with open(copy / REPORT_FILE_NAME, "w", encoding="utf-8") as f:
        json.dump(data, f)
    with pytest.raises(ReportMismatchError) as excinfo:
        verify_report(copy)
    assert "per_seed.0.reward" in excinfo.value.differences


def test_eval_run_directory(trained_run, temp_dir):
    run_dir, _ = trained_run
    report = run_eval(run_dir, episodes=2, output_dir=temp_dir)
    assert report.scenario == "fork_join"
    assert report.agent == "ccm"
    assert report.seeds == (0, 1)
    assert report.extra["mode"] == "eval"
    assert np.isfinite(report.mean("reward"))
    assert verify_report(temp_dir).to_dict() == report.to_dict()


def test_eval_is_reproducible(trained_run):
    run_dir, _ = trained_run
    checkpoint = run_dir / CHECKPOINTS_DIR_NAME / "seed_0.npz"
    first = run_eval(checkpoint, episodes=1, seed=4)
    second = run_eval(checkpoint, episodes=1, seed=4)
    assert first.to_dict() == second.to_dict()
    assert first.seeds == (4,)


def test_eval_rejects_other_scenarios(trained_run):
    run_dir, _ = trained_run
    checkpoint = run_dir / CHECKPOINTS_DIR_NAME / "seed_0.npz"
    with pytest.raises(IncompatibleCheckpointError):
        run_eval(checkpoint, scenario="env1", episodes=1)


def test_eval_argument_errors(trained_run, temp_dir):
    run_dir, _ = trained_run
    with pytest.raises(ConfigError):
        run_eval(run_dir, episodes=0)
    with pytest.raises(ConfigError):
        run_eval(run_dir / CHECKPOINTS_DIR_NAME / "seed_0.npz", episodes=1, cohort_size=3)
    with pytest.raises(ConfigError):
        run_eval(run_dir, scenario="env9", episodes=1)
    with pytest.raises(IncompatibleCheckpointError):
        run_eval(temp_dir, episodes=1)


def test_compare_identical_reports(trained_run, temp_dir):
    run_dir, report = trained_run
    table = compare(run_dir, report, temp_dir)
    reward = table.set_index("metric").loc["reward"]
    assert reward["delta"] == 0.0
    assert reward["ties"] == 2
    assert reward["p_value"] == 1.0
    assert os.path.exists(os.path.join(temp_dir, COMPARE_FILE_NAME))


def report_with(scenario="env1", seeds=(0, 1), rewards=(1.0, 1.0)) -> MetricsReport:
    per_seed = {seed: {"reward": reward} for seed, reward in zip(seeds, rewards)}
    return MetricsReport(scenario=scenario, agent="ccm", seeds=seeds, per_seed=per_seed, aggregate={"reward": {"mean": 1.0}})


def test_compare_counts_wins():
    table = compare(report_with(rewards=(3.0, 2.0)), report_with(rewards=(1.0, 1.0)))
    reward = table.set_index("metric").loc["reward"]
    assert reward["delta"] == 1.5
    assert reward["wins_a"] == 2
    assert reward["p_value"] == pytest.approx(0.25)


def test_compare_mismatches():
    with pytest.raises(MismatchError, match=SCENARIO_MISMATCH_ERROR_MSG):
        compare(report_with("env1"), report_with("env3"))
    with pytest.raises(MismatchError, match=SEEDS_MISMATCH_ERROR_MSG):
        compare(report_with(seeds=(0, 1)), report_with(seeds=(0, 2)))


def test_relative_degradation():
    clean = report_with(rewards=(2.0, 0.0))
    noisy = report_with(rewards=(1.0, 1.0))
    assert relative_degradation(clean, noisy) == {0: 0.5}
    with pytest.raises(MismatchError):
        relative_degradation(clean, report_with("env3"))
