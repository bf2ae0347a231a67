from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Optional, Union

from ccm._enums import AgentKind
from ccm.agent import HyperParams
from ccm.const import CONFIG_HASH_LENGTH
from ccm.envs import ScenarioName, UnknownScenarioError
from ccm.envs._utils import scenario_name
from ccm.exceptions import ConfigError
from ccm.graph import GraphSpecError, NoiseRegime
from ccm.graph._utils import noise_from_dict, noise_to_dict
from ccm.utils import canonical_json, sha256_hex

from .const import (
    AGENT_KIND_ERROR_MSG,
    BUDGET_NEGATIVE_ERROR_MSG,
    DEFAULT_BASELINE_EPISODES,
    DEFAULT_BUDGET,
    DEFAULT_EVAL_EPISODES,
    DEFAULT_SEEDS,
    SCENARIO_BUDGETS,
    SEEDS_EMPTY_ERROR_MSG,
)

__all__ = ("ExperimentConfig", "MetricsReport")

_HASH_EXCLUDED = ("output_dir", "workers")


@dataclass(frozen=True)
class ExperimentConfig:
    """One training experiment: which agent, on which scenario, for which seeds and budget.

    A missing `budget` resolves to the scenario's default (200k steps, 500k for glucose).
    """

    scenario: str
    agent: AgentKind = AgentKind.ccm
    hyperparams: HyperParams = field(default_factory=HyperParams)
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    budget: Optional[int] = None
    eval_episodes: int = DEFAULT_EVAL_EPISODES
    baseline_episodes: int = DEFAULT_BASELINE_EPISODES
    noise: Optional[NoiseRegime] = None
    output_dir: str = "runs"
    workers: int = 1

    def __post_init__(self) -> None:
        try:
            name = scenario_name(self.scenario)
        except UnknownScenarioError as e:
            raise ConfigError(str(e)) from e
        object.__setattr__(self, "scenario", name.value)
        try:
            agent = AgentKind(self.agent)
        except ValueError:
            agent = AgentKind.random
        if agent is AgentKind.random:
            raise ConfigError(f"{AGENT_KIND_ERROR_MSG}, got '{self.agent}'")
        object.__setattr__(self, "agent", agent)

        seeds = tuple(self.seeds) if not isinstance(self.seeds, (str, bytes)) else ()
        if not seeds or any(isinstance(s, bool) or not isinstance(s, int) for s in seeds) or len(set(seeds)) != len(seeds):
            raise ConfigError(f"{SEEDS_EMPTY_ERROR_MSG}, got {self.seeds!r}")
        object.__setattr__(self, "seeds", seeds)

        budget = SCENARIO_BUDGETS.get(name, DEFAULT_BUDGET) if self.budget is None else int(self.budget)
        if budget < 0:
            raise ConfigError(f"{BUDGET_NEGATIVE_ERROR_MSG}, got {budget}")
        object.__setattr__(self, "budget", budget)

        for key in ("eval_episodes", "baseline_episodes"):
            if int(getattr(self, key)) < 0:
                raise ConfigError(f"{key} must be >= 0, got {getattr(self, key)}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")

    @property
    def scenario_name(self) -> ScenarioName:
        return ScenarioName(self.scenario)

    @property
    def training_budget(self) -> int:
        assert self.budget is not None
        return self.budget

    def with_output_dir(self, output_dir: str) -> "ExperimentConfig":
        return replace(self, output_dir=output_dir)

    def to_dict(self) -> dict[str, Any]:
        return {
            "scenario": self.scenario,
            "agent": self.agent.value,
            "hyperparams": self.hyperparams.to_dict(),
            "seeds": list(self.seeds),
            "budget": self.budget,
            "eval_episodes": self.eval_episodes,
            "baseline_episodes": self.baseline_episodes,
            "noise": None if self.noise is None else noise_to_dict(self.noise),
            "output_dir": self.output_dir,
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        """Build a config from parsed JSON.

        Raises:
            ConfigError: On unknown keys, a missing scenario or any invalid value.
        """
        data = dict(data)
        known = {"scenario", "agent", "hyperparams", "seeds", "budget", "eval_episodes", "baseline_episodes", "noise", "output_dir", "workers"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        if "scenario" not in data:
            raise ConfigError("config needs a 'scenario'")
        hyperparams = data.pop("hyperparams", None) or {}
        if not isinstance(hyperparams, Mapping):
            raise ConfigError("'hyperparams' must be an object")
        data["hyperparams"] = HyperParams.from_dict(hyperparams)
        noise = data.pop("noise", None)
        try:
            data["noise"] = None if noise is None else noise_from_dict(noise)
            return cls(**data)
        except (GraphSpecError, TypeError, ValueError) as e:
            raise ConfigError(f"invalid config: {e}") from e

    def config_hash(self) -> str:
        """Short SHA-256 of the canonical JSON of every field that affects results."""
        data = {key: value for key, value in self.to_dict().items() if key not in _HASH_EXCLUDED}
        return sha256_hex(canonical_json(data))[:CONFIG_HASH_LENGTH]


def _to_json_number(value: float) -> Optional[float]:
    return None if value is None or math.isnan(value) else float(value)


def _from_json_number(value: Optional[Union[int, float]]) -> float:
    return math.nan if value is None else float(value)


@dataclass
class MetricsReport:
    """Summary numbers of a run, every one of them derived from the run's episode log.

    `per_seed` maps a seed to its metrics, `aggregate` maps a metric to the mean and sample standard
    deviation over the seeds that report it (NaN sd for a single seed).
    """

    scenario: str
    agent: str
    seeds: tuple[int, ...]
    per_seed: dict[int, dict[str, float]] = field(default_factory=dict)
    aggregate: dict[str, dict[str, float]] = field(default_factory=dict)
    cut_histogram: dict[int, int] = field(default_factory=dict)
    metrics: tuple[str, ...] = ("reward",)
    config_hash: str = ""
    fixture_digests: dict[str, str] = field(default_factory=dict)
    failed_seeds: tuple[int, ...] = ()
    extra: dict[str, Any] = field(default_factory=dict)

    def mean(self, metric: str) -> float:
        return self.aggregate.get(metric, {}).get("mean", math.nan)

    def sd(self, metric: str) -> float:
        return self.aggregate.get(metric, {}).get("sd", math.nan)

    def values(self, metric: str) -> dict[int, float]:
        return {seed: metrics[metric] for seed, metrics in self.per_seed.items() if metric in metrics}

    def to_dict(self) -> dict[str, Any]:
        return {
            "scenario": self.scenario,
            "agent": self.agent,
            "seeds": list(self.seeds),
            "metrics": list(self.metrics),
            "config_hash": self.config_hash,
            "fixture_digests": dict(self.fixture_digests),
            "failed_seeds": list(self.failed_seeds),
            "per_seed": {
                str(seed): {key: _to_json_number(value) for key, value in sorted(values.items())}
                for seed, values in sorted(self.per_seed.items())
            },
            "aggregate": {
                key: {stat: _to_json_number(value) for stat, value in stats.items()} for key, stats in sorted(self.aggregate.items())
            },
            "cut_histogram": {str(cut): count for cut, count in sorted(self.cut_histogram.items())},
            "extra": dict(self.extra),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "MetricsReport":
        return cls(
            scenario=data["scenario"],
            agent=data["agent"],
            seeds=tuple(int(s) for s in data["seeds"]),
            per_seed={
                int(seed): {key: _from_json_number(value) for key, value in values.items()}
                for seed, values in data.get("per_seed", {}).items()
            },
            aggregate={
                key: {stat: _from_json_number(value) for stat, value in stats.items()}
                for key, stats in data.get("aggregate", {}).items()
            },
            cut_histogram={int(cut): int(count) for cut, count in data.get("cut_histogram", {}).items()},
            metrics=tuple(data.get("metrics", ("reward",))),
            config_hash=data.get("config_hash", ""),
            fixture_digests=dict(data.get("fixture_digests", {})),
            failed_seeds=tuple(int(s) for s in data.get("failed_seeds", ())),
            extra=dict(data.get("extra", {})),
        )

    def __repr__(self) -> str:
        return f"MetricsReport<(scenario='{self.scenario}', agent='{self.agent}', seeds={list(self.seeds)})>"
