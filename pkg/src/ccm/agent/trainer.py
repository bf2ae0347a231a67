from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ccm._enums import AgentKind, LogLevel
from ccm.base import Agent, EpisodeRow
from ccm.const import EPISODE_LOG_COLUMNS
from ccm.envs import Scenario, ScenarioEnv
from ccm.exceptions import CcmError
from ccm.graph import CausalGraphDynamic, NoiseRegime
from ccm.nn import Checkpoint
from ccm.utils import spawn_rngs

from .base import GoalBox, HyperParams
from .ccm import CcmAgent
from .flat import FlatAgent, RandomAgent

logger = logging.getLogger(__name__)

__all__ = ("SeedRun", "TrainResult", "make_agent", "global_goal", "run_episode", "rollout", "train_seed", "train", "to_frame")


@dataclass
class SeedRun:
    seed: int
    initial: Checkpoint
    final: Checkpoint
    rows: list[EpisodeRow] = field(default_factory=list)
    steps: int = 0
    episodes: int = 0


@dataclass
class TrainResult:
    runs: list[SeedRun]

    @property
    def checkpoints(self) -> dict[int, Checkpoint]:
        return {run.seed: run.final for run in self.runs}

    @property
    def log(self) -> pd.DataFrame:
        return to_frame(row for run in self.runs for row in run.rows)


def to_frame(rows: Iterable[EpisodeRow]) -> pd.DataFrame:
    """EpisodeLog frame with the canonical column order, empty but typed when there are no rows."""
    records = [row.to_dict() for row in rows]
    frame = pd.DataFrame.from_records(records, columns=list(EPISODE_LOG_COLUMNS))
    if frame.empty:
        return frame.astype({"seed": int, "episode": int, "t": int, "level": str, "view": int, "cut_id": int})
    return frame


def global_goal(scenario: Scenario, hp: HyperParams) -> GoalBox:
    half_width = scenario.goal_half_width if hp.epsilon is None else hp.epsilon
    return GoalBox(center=np.asarray(scenario.goal_center), half_width=half_width)


def make_agent(
    kind: Union[str, AgentKind],
    graph: CausalGraphDynamic,
    goal: GoalBox,
    hp: HyperParams,
    rng: np.random.Generator,
) -> Agent:
    kind = AgentKind(kind)
    if kind is AgentKind.ccm:
        return CcmAgent(graph, goal, hp, rng)
    if kind is AgentKind.flat:
        return FlatAgent(graph, goal, hp, rng)
    return RandomAgent(graph, goal, hp, rng, level=LogLevel.low)


def run_episode(env: ScenarioEnv, agent: Agent, max_steps: Optional[int] = None) -> list[EpisodeRow]:
    """Play one episode, truncated at `max_steps`, and return its log rows (seed/episode unset)."""
    limit = env.episode_len if max_steps is None else min(env.episode_len, max_steps)
    state = env.reset()
    agent.begin_episode(state)
    rows: list[EpisodeRow] = []
    for t in range(limit):
        result = env.step(agent.act(state))
        state = result.state
        rows.extend(agent.observe(state, result.done or t == limit - 1))
    rows.extend(agent.end_episode())
    return rows


def _stamp(rows: Sequence[EpisodeRow], seed: int, episode: int) -> list[EpisodeRow]:
    for row in rows:
        row.seed = seed
        row.episode = episode
    return list(rows)


def rollout(
    env: ScenarioEnv, agent: Agent, episodes: int, seed: int = 0, max_steps: Optional[int] = None
) -> list[EpisodeRow]:
    """Frozen-policy evaluation: `agent` is switched to eval mode for the duration."""
    training = agent.training
    agent.eval()
    rows: list[EpisodeRow] = []
    try:
        for episode in range(episodes):
            rows.extend(_stamp(run_episode(env, agent, max_steps), seed, episode))
    finally:
        if training:
            agent.train()
    return rows


def train_seed(
    scenario: Scenario,
    hp: HyperParams,
    seed: int,
    budget: int,
    kind: Union[str, AgentKind] = AgentKind.ccm,
    noise: Optional[NoiseRegime] = None,
    baseline_episodes: int = 0,
) -> SeedRun:
    """Train one agent for `budget` environment steps.

    Separate random streams drive the environment, the agent and the random baseline. Episodes run
    back to back; the last one is truncated when the budget runs out. `baseline_episodes` episodes
    of a uniform-random policy are appended as `random` rows.

    Raises:
        CcmError: Any failure, re-raised with the seed and episode it happened in.
    """
    if budget < 0:
        raise ValueError(f"budget must be >= 0, got {budget}")
    env_rng, agent_rng, baseline_rng = spawn_rngs(seed, 3)
    env = ScenarioEnv(scenario, env_rng, noise)
    goal = global_goal(scenario, hp)
    agent = make_agent(kind, env.graph, goal, hp, agent_rng)
    initial = agent.checkpoint()
    run = SeedRun(seed=seed, initial=initial, final=initial)
    episode_cap = scenario.episode_len if hp.T is None else min(scenario.episode_len, hp.T * hp.C)
    try:
        while run.steps < budget:
            steps = min(episode_cap, budget - run.steps)
            rows = run_episode(env, agent, steps)
            run.rows.extend(_stamp(rows, seed, run.episodes))
            run.steps += steps
            run.episodes += 1
            if run.episodes % 50 == 0:
                logger.info(f"Seed {seed}: {run.episodes} episodes, {run.steps}/{budget} steps")
    except CcmError as e:
        raise type(e)(f"seed {seed}, episode {run.episodes}: {e}") from e
    run.final = agent.checkpoint()
    if baseline_episodes:
        baseline_env = ScenarioEnv(scenario, baseline_rng, noise)
        baseline = RandomAgent(baseline_env.graph, goal, hp, baseline_rng)
        run.rows.extend(rollout(baseline_env, baseline, baseline_episodes, seed))
    logger.info(f"Seed {seed}: trained {kind} for {run.steps} steps over {run.episodes} episodes")
    return run


def train(
    scenario: Scenario,
    hp: HyperParams,
    seeds: Sequence[int],
    budget: int,
    kind: Union[str, AgentKind] = AgentKind.ccm,
    noise: Optional[NoiseRegime] = None,
    baseline_episodes: int = 0,
) -> TrainResult:
    """Train one agent per seed, in seed order, and merge their logs."""
    return TrainResult(runs=[train_seed(scenario, hp, seed, budget, kind, noise, baseline_episodes) for seed in sorted(seeds)])
