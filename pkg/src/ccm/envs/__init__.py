from __future__ import annotations

import logging
from dataclasses import replace
from typing import Any, Iterable, Mapping, Optional, Union

import numpy as np

from ccm.graph import CausalGraphDynamic, HillDelay, NoiseRegime

from ._enums import PatientGroup, ScenarioName
from ._utils import (
    fixture_path,
    override_noise_sd,
    read_fixture,
    scenario_from_dict,
    scenario_name,
    verify_fixture,
    with_individual,
)
from .base import IndividualParams, MealSchedule, Scenario, StepResult
from .const import COHORT_GROUP_ORDER, FIXED_PARAMS, GROUP_SPREADS, MAX_SPREAD, TIR_HIGH, TIR_LOW
from .exceptions import FixtureDigestError, ParamError, UnknownScenarioError

logger = logging.getLogger(__name__)

__all__ = (
    "FixtureDigestError",
    "IndividualParams",
    "MealSchedule",
    "ParamError",
    "PatientGroup",
    "Scenario",
    "ScenarioEnv",
    "ScenarioName",
    "StepResult",
    "UnknownScenarioError",
    "base_individual",
    "build_env1",
    "build_env2",
    "build_env3",
    "build_fork_join",
    "build_glucose",
    "fixture_path",
    "load_scenario",
    "make_cohort",
    "tir",
    "verify_fixture",
)


def _load(name: ScenarioName, noise_sd: Optional[float] = None) -> Scenario:
    data, digest = read_fixture(name.value)
    scenario = scenario_from_dict(name.value, data, digest)
    if noise_sd is not None:
        scenario = replace(scenario, specs=tuple(override_noise_sd(spec, noise_sd) for spec in scenario.specs))
    return scenario


def build_env1(noise_sd: Optional[float] = None) -> Scenario:
    """Five-variable linear-gaussian graph: x0 drives the target x4 through the cut vertex x2 and the collider x1."""
    return _load(ScenarioName.env1, noise_sd)


def build_env2(
    noise_sd: Optional[float] = None, delay_override: Optional[int] = None, gain_override: Optional[float] = None
) -> Scenario:
    """Env 1's topology with delayed hill regulation on every non-root node.

    Args:
        noise_sd (Optional[float]): Replace every node's noise standard deviation.
        delay_override (Optional[int]): Replace every hill term's delay, 0 gives memoryless dynamics.
        gain_override (Optional[float]): Replace every hill term's gain.
    """
    scenario = _load(ScenarioName.env2, noise_sd)
    if delay_override is None and gain_override is None:
        return scenario
    specs = []
    for spec in scenario.specs:
        equation = spec.equation
        if isinstance(equation, HillDelay):
            terms = tuple(
                replace(
                    term,
                    delay=term.delay if delay_override is None else delay_override,
                    beta=term.beta if gain_override is None else gain_override,
                )
                for term in equation.terms
            )
            spec = replace(spec, equation=replace(equation, terms=terms))
        specs.append(spec)
    return replace(scenario, specs=tuple(specs))


def build_env3(noise_sd: Optional[float] = None) -> Scenario:
    """Nine-variable hill graph with two parallel routes from x0 to x8, so every minimum cut has two vertices."""
    return _load(ScenarioName.env3, noise_sd)


def build_fork_join(noise_sd: Optional[float] = None) -> Scenario:
    return _load(ScenarioName.fork_join, noise_sd)


def base_individual() -> IndividualParams:
    data, _ = read_fixture(ScenarioName.glucose.value)
    return IndividualParams.from_dict(data["individual"])


def build_glucose(individual: Optional[IndividualParams] = None) -> Scenario:
    """Reduced glucose-insulin model for one individual, one step per simulated minute.

    Insulin infusion (node 0) raises plasma insulin, which builds insulin action and lowers plasma
    glucose (node 4, the target). Meals arrive as impulses on the gut node.
    """
    scenario = _load(ScenarioName.glucose)
    individual = individual or scenario.individual
    assert individual is not None
    specs = tuple(with_individual(spec, individual) for spec in scenario.specs)
    return replace(scenario, specs=specs, individual=individual)


_BUILDERS = {
    ScenarioName.env1: build_env1,
    ScenarioName.env2: build_env2,
    ScenarioName.env3: build_env3,
    ScenarioName.fork_join: build_fork_join,
}


def load_scenario(name: Union[str, ScenarioName], noise: Optional[NoiseRegime] = None) -> Scenario:
    """Build a scenario by name, optionally replacing its noise regime.

    Raises:
        UnknownScenarioError: If no scenario has that name.
    """
    key = scenario_name(name)
    scenario = build_glucose() if key is ScenarioName.glucose else _BUILDERS[key]()
    return scenario if noise is None else replace(scenario, noise=noise)


def make_cohort(
    base: IndividualParams,
    count: int,
    rng: np.random.Generator,
    spreads: Optional[Mapping[PatientGroup, float]] = None,
) -> list[IndividualParams]:
    """Perturb a base individual into a heterogeneous cohort.

    Individuals are split as evenly as possible over adolescent, adult and child groups (in that
    order, ids `<group>#001` onwards). Each parameter is scaled by a log-uniform factor within the
    group's spread, capped at +/-50% of the base value.

    Args:
        base (IndividualParams): The reference individual.
        count (int): Cohort size, at least 1.
        rng (np.random.Generator): Source of the perturbations.
        spreads (Optional[Mapping[PatientGroup, float]]): Relative spread per group. Defaults to
            10% for adults, 25% for adolescents and 45% for children.

    Returns:
        list[IndividualParams]: The cohort, grouped in the order above.
    """
    if count < 1:
        raise ValueError(f"cohort size must be >= 1, got {count}")
    spreads = GROUP_SPREADS if spreads is None else spreads
    n_groups = len(COHORT_GROUP_ORDER)
    cohort = []
    for g, group in enumerate(COHORT_GROUP_ORDER):
        size = count // n_groups + (1 if g < count % n_groups else 0)
        spread = min(float(spreads.get(group, 0.0)), MAX_SPREAD)
        for k in range(1, size + 1):
            params = {}
            for key, value in base.params.items():
                if spread <= 0 or key in FIXED_PARAMS:
                    params[key] = value
                    continue
                factor = float(np.exp(rng.uniform(np.log(1.0 - spread), np.log(1.0 + spread))))
                params[key] = value * min(max(factor, 1.0 - MAX_SPREAD), 1.0 + MAX_SPREAD)
            cohort.append(IndividualParams(params=params, group=group, id=f"{group.value}#{k:03d}"))
    return cohort


def tir(trace: Iterable[float], lo: float = TIR_LOW, hi: float = TIR_HIGH) -> float:
    """Fraction of the trace that lies inside `[lo, hi]`."""
    values = np.asarray(list(trace), dtype=float)
    if not values.size:
        raise ValueError("time in range needs a non-empty trace")
    return float(((values >= lo) & (values <= hi)).mean())


class ScenarioEnv:
    """Episode wrapper around a scenario's graph: clips actions, injects meals and noise, counts steps."""

    def __init__(
        self,
        scenario: Scenario,
        rng: Optional[np.random.Generator] = None,
        noise: Optional[NoiseRegime] = None,
    ) -> None:
        self.scenario = scenario
        self.graph: CausalGraphDynamic = scenario.build_graph()
        self.noise = scenario.noise if noise is None else noise
        self._rng = rng
        self._meals: dict[int, float] = {}
        self.t = 0
        self.reset()

    @property
    def episode_len(self) -> int:
        return self.scenario.episode_len

    @property
    def done(self) -> bool:
        return self.t >= self.episode_len

    @property
    def goal_center(self) -> np.ndarray:
        return np.asarray(self.scenario.goal_center, dtype=float)

    @property
    def goal_half_width(self) -> float:
        return self.scenario.goal_half_width

    @property
    def meals(self) -> dict[int, float]:
        return dict(self._meals)

    def reset(self) -> np.ndarray:
        self.t = 0
        self._meals = self.scenario.meals.draw(self._rng) if self.scenario.meals else {}
        return self.graph.reset()

    def target_values(self) -> np.ndarray:
        return self.graph.values(self.graph.targets)

    def clip(self, interventions: Mapping[int, float]) -> dict[int, float]:
        clipped = {}
        for node, value in interventions.items():
            lo, hi = self.graph.spec(node).bounds
            clipped[node] = float(np.clip(value, lo, hi))
        return clipped

    def step(self, interventions: Optional[Mapping[int, float]] = None) -> StepResult:
        """Advance one step.

        Raises:
            RuntimeError: If the episode is already over.
        """
        if self.done:
            raise RuntimeError("episode is over, call reset() first")
        info: dict[str, Any] = {"t": self.t}
        meal = self._meals.get(self.t)
        if meal and self.scenario.meals is not None:
            node = self.scenario.meals.node
            self.graph.set_value(node, self.graph.value(node) + meal)
            info["meal"] = meal
            logger.debug(f"Meal of {meal} at step {self.t}")
        state = self.graph.step(self.clip(interventions or {}), self._rng, self.noise)
        self.t += 1
        return StepResult(state=state, done=self.done, info=info)

    def __repr__(self) -> str:
        return f"ScenarioEnv<(scenario={self.scenario.name}, t={self.t}/{self.episode_len})>"
