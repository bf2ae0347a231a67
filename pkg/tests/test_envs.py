import numpy as np
import pytest

from ccm.cuts import enumerate_min_cuts
from ccm.envs import (
    FixtureDigestError,
    IndividualParams,
    MealSchedule,
    ParamError,
    PatientGroup,
    ScenarioEnv,
    ScenarioName,
    UnknownScenarioError,
    base_individual,
    build_env1,
    build_env2,
    build_env3,
    build_fork_join,
    build_glucose,
    load_scenario,
    make_cohort,
    tir,
    verify_fixture,
)
from ccm.envs._utils import recorded_digests
from ccm.envs.const import GLUCOSE_EPISODE_LEN, SYNTHETIC_EPISODE_LEN
from ccm.graph import HillDelay, NoiseKind, NoiseRegime


@pytest.mark.parametrize("name", [member.value for member in ScenarioName])
def test_fixture_digests(name):
    assert verify_fixture(name) == recorded_digests()[name]
    assert load_scenario(name).digest == recorded_digests()[name]


def test_modified_fixture_is_detected(monkeypatch):
    monkeypatch.setattr("ccm.envs._utils.recorded_digests", lambda: {"env1": "0" * 64})
    with pytest.raises(FixtureDigestError):
        build_env1()


def test_unknown_scenario():
    with pytest.raises(UnknownScenarioError, match="env1"):
        load_scenario("env9")


@pytest.mark.parametrize(
    "build, cuts",
    [
        (build_env1, [(2,)]),
        (build_env2, [(2,)]),
        (build_fork_join, [(1, 2), (1, 4), (2, 3), (3, 4)]),
        (build_glucose, [(1,), (2,)]),
    ],
)
def test_scenario_catalogs(build, cuts):
    catalog = enumerate_min_cuts(build().build_graph())
    assert [cut.nodes for cut in catalog] == cuts


def test_env3_has_mirrored_mechanisms():
    scenario = build_env3()
    graph = scenario.build_graph()
    assert graph.spec(2).equation == graph.spec(5).equation
    assert enumerate_min_cuts(graph).cut_size == 2
    assert scenario.goal_center == (3.0,)
    assert scenario.goal_half_width == 0.25


def test_synthetic_scenarios_are_noise_free_by_default():
    for build in (build_env1, build_env2, build_env3, build_fork_join):
        scenario = build()
        assert scenario.episode_len == SYNTHETIC_EPISODE_LEN
        assert scenario.noise.kind is NoiseKind.none
    assert build_glucose().episode_len == GLUCOSE_EPISODE_LEN


def test_noise_sd_override():
    scenario = build_env1(noise_sd=0.0)
    graph = scenario.build_graph()
    assert all(spec.equation.noise_sd == 0.0 for spec in graph.specs)


def test_env2_overrides():
    scenario = build_env2(delay_override=0, gain_override=3.0)
    terms = [term for spec in scenario.specs if isinstance(spec.equation, HillDelay) for term in spec.equation.terms]
    assert terms
    assert all(term.delay == 0 and term.beta == 3.0 for term in terms)
    assert scenario.build_graph().history_capacity == 1


def test_load_scenario_replaces_noise():
    regime = NoiseRegime(kind=NoiseKind.random_large, trigger_prob=0.05)
    assert load_scenario("env1", noise=regime).noise == regime


def test_env_clips_interventions_and_ends():
    scenario = build_env1()
    env = ScenarioEnv(scenario, np.random.default_rng(0))
    lo, hi = env.graph.spec(0).bounds
    result = env.step({0: hi + 100.0})
    assert result.state[env.graph.index(0)] == hi
    for _ in range(scenario.episode_len - 1):
        result = env.step()
    assert result.done
    with pytest.raises(RuntimeError):
        env.step()
    env.reset()
    assert env.t == 0


def glucose_trace(infusion: float, steps: int) -> tuple[list[float], list[dict]]:
    env = ScenarioEnv(build_glucose())
    values, infos = [], []
    for _ in range(steps):
        result = env.step({0: infusion})
        values.append(float(result.state[env.graph.index(4)]))
        infos.append(result.info)
    return values, infos


def test_glucose_rises_after_a_meal():
    values, infos = glucose_trace(0.0, 560)
    meal_step = next(info["t"] for info in infos if "meal" in info)
    assert meal_step == 420
    assert max(values[meal_step : meal_step + 120]) > values[meal_step - 1] + 20.0


def test_insulin_lowers_glucose():
    untreated, _ = glucose_trace(0.0, 300)
    treated, _ = glucose_trace(100.0, 300)
    assert treated[-1] < untreated[-1] - 50.0
    assert min(treated) > 0.0


def test_meal_schedule_jitter():
    schedule = MealSchedule(node=3, times=(100, 200), amounts=(1.0, 2.0), jitter=5)
    assert schedule.draw() == {100: 1.0, 200: 2.0}
    drawn = schedule.draw(np.random.default_rng(0))
    assert sorted(drawn.values()) == [1.0, 2.0]
    assert all(abs(step - base) <= 5 for step, base in zip(sorted(drawn), (100, 200)))
    with pytest.raises(ValueError):
        MealSchedule(node=3, times=(1,), amounts=(1.0, 2.0))


def test_cohort_groups_and_spread():
    base = base_individual()
    cohort = make_cohort(base, 30, np.random.default_rng(0))
    assert len(cohort) == 30
    assert [member.group for member in cohort[:10]] == [PatientGroup.adolescent] * 10
    assert cohort[10].id == "adult#001"
    assert len({member.id for member in cohort}) == 30
    for member in cohort:
        assert member.params["f"] == base.params["f"]
        for key, value in member.params.items():
            assert 0.5 * base.params[key] <= value <= 1.5 * base.params[key]
    spread = {
        group: np.mean([member.distance(base) for member in cohort if member.group is group]) for group in PatientGroup
    }
    assert spread[PatientGroup.adult] < spread[PatientGroup.child]


def test_cohort_sizes():
    cohort = make_cohort(base_individual(), 4, np.random.default_rng(0))
    assert [member.group for member in cohort] == [
        PatientGroup.adolescent,
        PatientGroup.adolescent,
        PatientGroup.adult,
        PatientGroup.child,
    ]
    with pytest.raises(ValueError):
        make_cohort(base_individual(), 0, np.random.default_rng(0))


def test_individual_parameters_reach_the_graph():
    member = make_cohort(base_individual(), 3, np.random.default_rng(1))[2]
    graph = build_glucose(member).build_graph()
    assert graph.spec(4).equation.params["p1"] == member.params["p1"]
    assert graph.spec(1).equation.params["v_i"] == member.params["v_i"]


def test_individual_parameters_must_be_positive():
    with pytest.raises(ParamError):
        IndividualParams(params={"p1": -1.0})


def test_tir():
    assert tir([60.0, 70.0, 100.0, 180.0, 181.0]) == pytest.approx(0.6)
    assert tir([1.0, 2.0], lo=0.0, hi=1.5) == 0.5
    with pytest.raises(ValueError):
        tir([])
