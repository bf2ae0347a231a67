import os
import re

import numpy as np
import pytest

from ccm.const import CYCLE_ERROR_MSG, HILL_DOMAIN_ERROR_MSG
from ccm.graph import (
    ArityError,
    CausalGraphDynamic,
    CycleError,
    DomainError,
    GraphSpecError,
    HillDelay,
    HillSign,
    HillTerm,
    InterventionError,
    LinearGaussian,
    NodeRole,
    NodeSpec,
    NoiseKind,
    NoiseRegime,
    OdeRate,
    apply_do,
    build_graph,
    eval_hill,
    inject_noise,
    load_graph_spec,
    release_do,
    save_graph_spec,
    step,
)
from ccm.graph.rates import available_rates, register_rate


def chain(noise_sd: float = 0.0, weight: float = 1.0) -> CausalGraphDynamic:
    specs = [
        NodeSpec(0, NodeRole.modifiable, LinearGaussian((), noise_sd)),
        NodeSpec(1, NodeRole.observed, LinearGaussian((weight,), noise_sd)),
        NodeSpec(2, NodeRole.target, LinearGaussian((weight,), noise_sd)),
    ]
    return build_graph(specs, [(0, 1), (1, 2)])


def hill_chain() -> CausalGraphDynamic:
    term = HillTerm(HillSign.activation, beta=2.0, k=1.0, n=2.0, delay=1)
    specs = [
        NodeSpec(0, NodeRole.modifiable, LinearGaussian((), 0.1), init_value=1.0),
        NodeSpec(1, NodeRole.observed, HillDelay((term,), 0.0)),
        NodeSpec(2, NodeRole.target, HillDelay((term,), 0.0)),
    ]
    return build_graph(specs, [(0, 1), (1, 2)])


def test_chain_is_valid():
    graph = chain()
    assert graph.node_ids == (0, 1, 2)
    assert graph.modifiable == (0,)
    assert graph.targets == (2,)
    assert graph.edges == [(0, 1), (1, 2)]
    assert np.array_equal(graph.state, np.zeros(3))


def test_cycle_is_rejected():
    specs = [
        NodeSpec(0, NodeRole.modifiable, LinearGaussian((1.0,), 0.0)),
        NodeSpec(1, NodeRole.target, LinearGaussian((1.0,), 0.0)),
    ]
    with pytest.raises(CycleError, match=re.escape(CYCLE_ERROR_MSG)):
        build_graph(specs, [(0, 1), (1, 0)])


def test_arity_mismatch_is_rejected():
    specs = [
        NodeSpec(0, NodeRole.modifiable, LinearGaussian((), 0.0)),
        NodeSpec(1, NodeRole.observed, LinearGaussian((), 0.0)),
        NodeSpec(2, NodeRole.target, LinearGaussian((1.0,), 0.0)),
    ]
    with pytest.raises(ArityError):
        build_graph(specs, [(0, 2), (1, 2)])


def test_unknown_edge_endpoint_is_rejected():
    with pytest.raises(GraphSpecError):
        build_graph(chain().specs, [(0, 1), (1, 7)])


def test_zero_weight_gives_zero():
    graph = chain(weight=0.0)
    state = graph.step({0: 3.0})
    assert state[1] == 0.0
    assert state[2] == 0.0


def test_weighted_sum_of_parents():
    specs = [
        NodeSpec(0, NodeRole.modifiable, LinearGaussian((), 0.0)),
        NodeSpec(1, NodeRole.modifiable, LinearGaussian((), 0.0)),
        NodeSpec(2, NodeRole.target, LinearGaussian((0.5, 1.0), 0.0)),
    ]
    graph = build_graph(specs, [(0, 2), (1, 2)])
    state = graph.step({0: 2.0, 1: -1.0})
    assert state[2] == pytest.approx(0.0, abs=1e-12)


def test_parentless_noise_mean():
    specs = [
        NodeSpec(0, NodeRole.modifiable, LinearGaussian((), 0.0)),
        NodeSpec(1, NodeRole.observed, LinearGaussian((), 0.1)),
        NodeSpec(2, NodeRole.target, LinearGaussian((1.0, 1.0), 0.0)),
    ]
    graph = build_graph(specs, [(0, 2), (1, 2)])
    rng = np.random.default_rng(0)
    n = 20_000
    values = np.array([graph.step(rng=rng)[1] for _ in range(n)])
    assert abs(values.mean()) < 4 * 0.1 / np.sqrt(n)
    assert values.std() == pytest.approx(0.1, rel=0.05)


def test_intervention_on_observed_node_fails():
    graph = chain()
    with pytest.raises(InterventionError):
        graph.step({1: 1.0})
    with pytest.raises(InterventionError):
        apply_do(graph, 2, 1.0)


def test_clamp_holds_until_released():
    graph = chain()
    apply_do(graph, 0, 5.0)
    for _ in range(3):
        state = step(graph)
        assert state[0] == 5.0
    assert state[1] == 5.0
    release_do(graph, 0)
    assert graph.clamps == {}
    assert step(graph)[0] == 0.0


def test_one_step_propagation():
    graph = chain()
    apply_do(graph, 0, 5.0)
    state = step(graph)
    assert state[1] == 5.0


def test_deterministic_without_noise():
    a, b = hill_chain(), hill_chain()
    for t in range(20):
        assert np.array_equal(a.step({0: float(t % 3)}), b.step({0: float(t % 3)}))


def test_paired_runs_only_differ_downstream_of_changed_parent():
    a, b = hill_chain(), hill_chain()
    rng_a, rng_b = np.random.default_rng(5), np.random.default_rng(5)
    for _ in range(4):
        a.step(rng=rng_a)
        b.step(rng=rng_b)
    b.set_value(2, 100.0)
    state_a, state_b = a.step(rng=rng_a), b.step(rng=rng_b)
    assert state_a[1] == state_b[1]

    b.set_value(0, 3.0)
    state_a, state_b = a.step(rng=rng_a), b.step(rng=rng_b)
    assert state_a[1] != state_b[1]


def test_history_covers_max_delay():
    graph = hill_chain()
    assert graph.history_capacity >= 1
    assert len(graph.history) == graph.history_capacity


def test_snapshot_and_restore():
    graph = hill_chain()
    rng = np.random.default_rng(1)
    graph.step(rng=rng)
    snapshot = graph.snapshot()
    first = graph.step(rng=np.random.default_rng(2))
    graph.restore(snapshot)
    again = graph.step(rng=np.random.default_rng(2))
    assert np.array_equal(first, again)


@pytest.mark.parametrize(
    "x, sign, expected",
    [
        (1.0, HillSign.activation, 1.0),
        (0.0, HillSign.activation, 0.0),
        (0.0, HillSign.repression, 2.0),
        (1.0, HillSign.repression, 1.0),
    ],
)
def test_eval_hill_boundaries(x: float, sign: HillSign, expected: float):
    assert eval_hill(x, sign, beta=2.0, k=1.0, n=2.0) == pytest.approx(expected)


def test_eval_hill_worked_example():
    assert eval_hill(3.0, HillSign.activation, beta=2.0, k=1.0, n=2.0) == pytest.approx(1.8)


def test_eval_hill_rejects_negative_input():
    with pytest.raises(DomainError, match=re.escape(HILL_DOMAIN_ERROR_MSG)):
        eval_hill(-0.1, HillSign.activation, 1.0, 1.0, 1.0)


def test_eval_hill_bounded_and_monotone():
    xs = np.linspace(0.0, 10.0, 101)
    up = [eval_hill(x, HillSign.activation, 3.0, 2.0, 3.0) for x in xs]
    down = [eval_hill(x, HillSign.repression, 3.0, 2.0, 3.0) for x in xs]
    assert all(0.0 <= v <= 3.0 for v in up + down)
    assert all(b >= a for a, b in zip(up, up[1:]))
    assert all(b <= a for a, b in zip(down, down[1:]))


def noisy_graph(init: float = 1.0) -> CausalGraphDynamic:
    specs = [
        NodeSpec(0, NodeRole.modifiable, LinearGaussian((), 0.0)),
        NodeSpec(1, NodeRole.observed, LinearGaussian((), 0.0), init_value=init),
        NodeSpec(2, NodeRole.target, LinearGaussian((1.0, 1.0), 0.0)),
    ]
    return build_graph(specs, [(0, 2), (1, 2)])


def test_inject_noise_none_is_noop():
    graph = noisy_graph()
    before = graph.state
    assert inject_noise(graph, NoiseRegime(), np.random.default_rng(0)) == []
    assert np.array_equal(graph.state, before)


def test_inject_noise_scales_eligible_nodes():
    graph = noisy_graph()
    regime = NoiseRegime(kind=NoiseKind.random_large, trigger_prob=1.0, magnitude_factor=12.0)
    hit = inject_noise(graph, regime, np.random.default_rng(0))
    assert hit == [1]
    assert 12.0 <= graph.value(1) <= 24.0
    assert graph.value(0) == 0.0


def test_inject_noise_never_triggers_at_zero_probability():
    graph = noisy_graph()
    regime = NoiseRegime(kind=NoiseKind.random_large, trigger_prob=0.0)
    rng = np.random.default_rng(0)
    assert all(not inject_noise(graph, regime, rng) for _ in range(10_000))


def test_noise_regime_needs_large_factor():
    with pytest.raises(GraphSpecError):
        NoiseRegime(kind=NoiseKind.random_large, trigger_prob=0.5, magnitude_factor=5.0)


def test_ode_node_integrates_decay():
    specs = [
        NodeSpec(0, NodeRole.modifiable, LinearGaussian((), 0.0)),
        NodeSpec(1, NodeRole.target, OdeRate("linear_decay", {"decay": 1.0, "gain": 0.0}), init_value=1.0),
    ]
    graph = build_graph(specs, [(0, 1)])
    state = graph.step({0: 0.0})
    assert state[1] == pytest.approx(np.exp(-1.0), rel=1e-5)


def test_ode_node_needs_rate_parameters():
    specs = [
        NodeSpec(0, NodeRole.modifiable, LinearGaussian((), 0.0)),
        NodeSpec(1, NodeRole.target, OdeRate("linear_decay", {"decay": 1.0})),
    ]
    with pytest.raises(GraphSpecError):
        build_graph(specs, [(0, 1)])


def test_graph_file_round_trip(temp_dir: str):
    graph = hill_chain()
    path = os.path.join(temp_dir, "graph.json")
    save_graph_spec(graph, path)
    loaded = load_graph_spec(path)
    assert loaded.to_dict() == graph.to_dict()
    assert np.array_equal(loaded.state, graph.state)


def test_custom_rate_function():
    if "constant_inflow" not in available_rates():

        @register_rate("constant_inflow", arity=1, params=("rate",))
        def constant_inflow(x: float, parents: np.ndarray, p) -> float:
            return p["rate"] + parents[0]

    specs = [
        NodeSpec(0, NodeRole.modifiable, LinearGaussian((), 0.0)),
        NodeSpec(1, NodeRole.target, OdeRate("constant_inflow", {"rate": 2.0}), bounds=(0.0, 10.0)),
    ]
    graph = build_graph(specs, [(0, 1)])
    state = graph.step({0: 1.0})
    assert state[1] == pytest.approx(3.0, rel=1e-6)
    with pytest.raises(ValueError):
        register_rate("constant_inflow")(lambda x, parents, p: 0.0)
