from __future__ import annotations

import math
import pathlib
import re
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from ccm._enums import LogLevel
from ccm.agent import HyperParams, global_goal, make_agent, to_frame
from ccm.base import Agent
from ccm.const import EPISODE_LOG_COLUMNS
from ccm.envs import Scenario, tir
from ccm.exceptions import ConfigError
from ccm.graph import CausalGraphDynamic
from ccm.nn import Checkpoint, CheckpointError

from .const import CHECKPOINTS_DIR_NAME, FINAL_EPISODES, SEED_LOGS_DIR_NAME
from .exceptions import IncompatibleCheckpointError

_CHECKPOINT_PATTERN = re.compile(r"^seed_(-?\d+)\.npz$")


def checkpoint_path(output_dir: pathlib.Path, seed: int) -> pathlib.Path:
    return output_dir / CHECKPOINTS_DIR_NAME / f"seed_{seed}.npz"


def seed_log_path(output_dir: pathlib.Path, seed: int) -> pathlib.Path:
    return output_dir / SEED_LOGS_DIR_NAME / f"seed_{seed}.csv"


def eval_log_path(output_dir: pathlib.Path, seed: int) -> pathlib.Path:
    return output_dir / SEED_LOGS_DIR_NAME / f"eval_seed_{seed}.csv"


def find_checkpoints(run_dir: pathlib.Path) -> dict[int, pathlib.Path]:
    """Seed -> checkpoint file for every `seed_<n>.npz` in a run's checkpoint directory."""
    found = {}
    for path in sorted((run_dir / CHECKPOINTS_DIR_NAME).glob("seed_*.npz")):
        match = _CHECKPOINT_PATTERN.match(path.name)
        if match:
            found[int(match.group(1))] = path
    return dict(sorted(found.items()))


def read_log(file_path: pathlib.Path) -> pd.DataFrame:
    """Read an episode log CSV so that floats come back bit-for-bit."""
    frame = pd.read_csv(file_path, float_precision="round_trip")
    missing = set(EPISODE_LOG_COLUMNS) - set(frame.columns)
    if missing:
        raise ValueError(f"{file_path} lacks episode log columns {sorted(missing)}")
    if frame.empty:
        return to_frame([])
    frame["level"] = frame["level"].astype(str)
    return frame


def write_log(frame: pd.DataFrame, file_path: pathlib.Path) -> None:
    frame.to_csv(file_path, index=False)


def concat_logs(frames: Sequence[pd.DataFrame]) -> pd.DataFrame:
    frames = [frame for frame in frames if not frame.empty]
    if not frames:
        return to_frame([])
    return pd.concat(frames, ignore_index=True)


def restore_agent(
    checkpoint: Checkpoint, graph: CausalGraphDynamic, scenario: Scenario, rng: np.random.Generator
) -> Agent:
    """Rebuild the agent a checkpoint was written by, on `graph`, and load its weights.

    Raises:
        IncompatibleCheckpointError: If the checkpoint lacks an agent description or does not fit `graph`.
    """
    interface = checkpoint.meta.get("interface") or {}
    if "kind" not in interface or "hp" not in checkpoint.meta:
        raise IncompatibleCheckpointError("checkpoint does not describe a trainable agent")
    try:
        hp = HyperParams.from_dict(checkpoint.meta["hp"])
    except ConfigError as e:
        raise IncompatibleCheckpointError(f"checkpoint hyperparameters are unusable: {e}") from e
    try:
        agent = make_agent(interface["kind"], graph, global_goal(scenario, hp), hp, rng)
        agent.load_checkpoint(checkpoint)
    except (CheckpointError, ValueError) as e:
        raise IncompatibleCheckpointError(f"checkpoint does not fit scenario '{scenario.name}': {e}") from e
    return agent


def _mean(values: pd.Series) -> float:
    values = values.dropna()
    return float(values.mean()) if len(values) else math.nan


def tail_episodes(frame: pd.DataFrame, count: int = FINAL_EPISODES) -> pd.DataFrame:
    """Rows of the last `count` distinct episodes in `frame`."""
    if frame.empty:
        return frame
    episodes = np.sort(frame["episode"].unique())[-count:]
    return frame[frame["episode"].isin(episodes)]


def seed_metrics(frame: pd.DataFrame, with_tir: bool = False, final_episodes: int = FINAL_EPISODES) -> dict[str, float]:
    """Summary metrics of one seed's log.

    `reward` is the mean single-step reward of the target-facing view (view 0 of the low level, scored
    against the global goal) over the last `final_episodes` episodes; `reward_view_<k>` is the same per view, `high_reward`
    averages the high-level rewards and `fcr_loss` the reconstruction losses over those episodes.
    `random_reward` averages the baseline rows.
    """
    level = frame["level"]
    low = tail_episodes(frame[level == LogLevel.low.value], final_episodes)
    target_facing = low[low["view"] == 0]
    metrics = {"reward": _mean(target_facing["reward"])}
    for view, group in low.groupby("view"):
        metrics[f"reward_view_{int(view)}"] = _mean(group["reward"])
    high = tail_episodes(frame[level == LogLevel.high.value], final_episodes)
    metrics["high_reward"] = _mean(high["reward"])
    updates = tail_episodes(frame[(level == LogLevel.update.value) & (frame["view"] == 0)], final_episodes)
    metrics["fcr_loss"] = _mean(updates["loss_fcr"])
    baseline = frame[level == LogLevel.random.value]
    metrics["random_reward"] = _mean(baseline["reward"])
    if with_tir:
        metrics["tir"] = tir(target_facing["target_value"]) if len(target_facing) else math.nan
        metrics["random_tir"] = tir(baseline["target_value"]) if len(baseline) else math.nan
    return metrics


def aggregate(per_seed: Mapping[int, Mapping[str, float]]) -> dict[str, dict[str, float]]:
    """Mean and sample standard deviation of every metric over the seeds where it is finite."""
    keys = sorted({key for metrics in per_seed.values() for key in metrics})
    result = {}
    for key in keys:
        values = np.array([metrics[key] for metrics in per_seed.values() if key in metrics], dtype=float)
        values = values[np.isfinite(values)]
        mean = float(values.mean()) if values.size else math.nan
        sd = float(values.std(ddof=1)) if values.size > 1 else math.nan
        result[key] = {"mean": mean, "sd": sd, "count": float(values.size)}
    return result


def cut_histogram(frame: pd.DataFrame) -> dict[int, int]:
    high = frame[frame["level"] == LogLevel.high.value]
    if high.empty:
        return {}
    counts = high.groupby("cut_id").size()
    return {int(cut): int(count) for cut, count in counts.items()}


def cohort_metrics(cohort: pd.DataFrame, members: Iterable[Mapping[str, object]]) -> dict[str, float]:
    """Mean time in range over a cohort log, overall and per group.

    Args:
        cohort (pd.DataFrame): Rollout log with one `seed` value per individual.
        members (Iterable[Mapping[str, object]]): `{"seed", "id", "group"}` records of the cohort.
    """
    table = tir_table(cohort, members)
    if table.empty:
        return {}
    metrics = {"cohort_tir": float(table["tir"].mean())}
    for group, rows in table.groupby("group"):
        metrics[f"cohort_tir_{group}"] = float(rows["tir"].mean())
    return metrics


def tir_table(cohort: pd.DataFrame, members: Iterable[Mapping[str, object]]) -> pd.DataFrame:
    """Per-individual time in range and mean reward of the target-facing view."""
    rows = []
    target_facing = cohort[(cohort["level"] == LogLevel.low.value) & (cohort["view"] == 0)]
    for member in members:
        trace = target_facing[target_facing["seed"] == member["seed"]]
        if trace.empty:
            continue
        rows.append(
            {
                "individual": member["id"],
                "group": member["group"],
                "tir": tir(trace["target_value"]),
                "reward": _mean(trace["reward"]),
            }
        )
    return pd.DataFrame(rows, columns=["individual", "group", "tir", "reward"])


def curves(frame: pd.DataFrame) -> dict[str, pd.DataFrame]:
    """Per-episode curves: low-level reward per view, high-level reward, update losses and cut counts."""
    level = frame["level"]
    low = frame[level == LogLevel.low.value].groupby(["seed", "episode", "view"], as_index=False)["reward"].mean()
    high = frame[level == LogLevel.high.value].groupby(["seed", "episode"], as_index=False)["reward"].mean()
    updates = frame[(level == LogLevel.update.value)][["seed", "episode", "view", "loss_policy", "loss_value", "loss_fcr"]]
    cuts = frame[level == LogLevel.high.value].groupby(["seed", "cut_id"]).size().reset_index(name="count")
    return {"low": low, "high": high, "updates": updates.reset_index(drop=True), "cuts": cuts}


def diff_numbers(
    expected: Mapping[str, object], actual: Mapping[str, object], rtol: float, prefix: str = ""
) -> dict[str, tuple[object, object]]:
    """Flattened differences between two nested mappings of numbers (NaN equals NaN)."""
    differences: dict[str, tuple[object, object]] = {}
    for key in sorted(set(expected) | set(actual), key=str):
        path = f"{prefix}{key}"
        a, b = expected.get(key), actual.get(key)
        if isinstance(a, Mapping) and isinstance(b, Mapping):
            differences.update(diff_numbers(a, b, rtol, prefix=f"{path}."))
        elif isinstance(a, (int, float)) and isinstance(b, (int, float)):
            if not (math.isnan(a) and math.isnan(b)) and not math.isclose(a, b, rel_tol=rtol, abs_tol=rtol):
                differences[path] = (a, b)
        elif a != b:
            differences[path] = (a, b)
    return differences


def frame_or_empty(file_path: pathlib.Path) -> Optional[pd.DataFrame]:
    return read_log(file_path) if file_path.exists() else None
