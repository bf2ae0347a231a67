from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Optional, Sequence

import networkx as nx
import numpy as np
from scipy.integrate import odeint

from ._enums import EquationKind, HillSign, NodeRole, NoiseKind
from ._utils import Edge, FilePath, eval_hill, graph_spec_from_dict, graph_spec_to_dict, read_json, write_json
from .base import HillDelay, HillTerm, LinearGaussian, NodeSpec, NoiseRegime, OdeRate, StructuralEquation
from .exceptions import ArityError, CycleError, DomainError, GraphSpecError, InterventionError
from .rates import get_rate, register_rate

logger = logging.getLogger(__name__)

__all__ = (
    "ArityError",
    "CausalGraphDynamic",
    "CycleError",
    "DomainError",
    "Edge",
    "EquationKind",
    "GraphSnapshot",
    "GraphSpecError",
    "HillDelay",
    "HillSign",
    "HillTerm",
    "InterventionError",
    "LinearGaussian",
    "NodeRole",
    "NodeSpec",
    "NoiseKind",
    "NoiseRegime",
    "OdeRate",
    "StructuralEquation",
    "apply_do",
    "build_graph",
    "eval_hill",
    "get_rate",
    "inject_noise",
    "load_graph_spec",
    "register_rate",
    "release_do",
    "save_graph_spec",
    "step",
)


@dataclass(frozen=True)
class GraphSnapshot:
    state: np.ndarray
    history: tuple[np.ndarray, ...]
    clamps: tuple[tuple[int, float], ...]


class CausalGraphDynamic:
    """A DAG of variables with per-node structural equations, stepped in topological order.

    Values live in a state vector indexed by ascending node id. Parents of a node are always
    taken in ascending id order, which is the order equation weights and hill terms refer to.
    """

    def __init__(self, specs: Sequence[NodeSpec], edges: Iterable[Edge]) -> None:
        specs = sorted(specs, key=lambda spec: spec.id)
        ids = [spec.id for spec in specs]
        if len(set(ids)) != len(ids):
            raise GraphSpecError(f"node ids must be unique, got {ids}")
        self._specs: dict[int, NodeSpec] = {spec.id: spec for spec in specs}
        self._ids: tuple[int, ...] = tuple(ids)
        self._index: dict[int, int] = {node: i for i, node in enumerate(ids)}

        dag = nx.DiGraph()
        dag.add_nodes_from(ids)
        for u, v in edges:
            if u not in self._index or v not in self._index:
                raise GraphSpecError(f"edge ({u}, {v}) references an unknown node")
            dag.add_edge(u, v)
        if not nx.is_directed_acyclic_graph(dag):
            raise CycleError
        self._dag = nx.freeze(dag)

        roles = {spec.role for spec in specs}
        if NodeRole.modifiable not in roles or NodeRole.target not in roles:
            raise GraphSpecError("a graph needs at least one modifiable and one target node")

        self._parents: dict[int, tuple[int, ...]] = {}
        for node in ids:
            parents = tuple(sorted(dag.predecessors(node)))
            arity = self._specs[node].equation.arity
            if arity is not None and arity != len(parents):
                raise ArityError(f"node {node}: equation expects {arity} parents, adjacency gives {len(parents)}")
            self._parents[node] = parents
        self._parent_index = {node: np.array([self._index[p] for p in ps], dtype=int) for node, ps in self._parents.items()}
        for node in ids:
            equation = self._specs[node].equation
            if isinstance(equation, OdeRate):
                missing = set(get_rate(equation.rate).params) - set(equation.params)
                if missing:
                    raise GraphSpecError(f"node {node}: rate '{equation.rate}' is missing parameters {sorted(missing)}")

        self._roots = tuple(node for node in ids if not self._parents[node])
        root_set = set(self._roots)
        self._rest = tuple(node for node in nx.lexicographical_topological_sort(dag) if node not in root_set)
        ancestors_of_targets = set(self.targets)
        for node in self.targets:
            ancestors_of_targets |= nx.ancestors(dag, node)
        self._noise_eligible = np.array(
            [
                self._index[node]
                for node in self._roots
                if node in ancestors_of_targets and self._specs[node].role is not NodeRole.modifiable
            ],
            dtype=int,
        )
        self._capacity = max(1, max(spec.equation.max_delay for spec in specs))
        self._clamps: dict[int, float] = {}
        self.reset()

    def reset(self) -> np.ndarray:
        """Restore the initial state, refill the history with it and release every clamp."""
        init = np.array([self._specs[node].init_value for node in self._ids], dtype=float)
        self._history: deque[np.ndarray] = deque((init.copy() for _ in range(self._capacity)), maxlen=self._capacity)
        self._state = self._history[-1]
        self._clamps.clear()
        return init.copy()

    @property
    def node_ids(self) -> tuple[int, ...]:
        return self._ids

    @property
    def specs(self) -> tuple[NodeSpec, ...]:
        return tuple(self._specs[node] for node in self._ids)

    @property
    def edges(self) -> list[Edge]:
        return sorted(self._dag.edges())

    @property
    def structure(self) -> nx.DiGraph:
        """Frozen view of the edge relation."""
        return self._dag

    @property
    def modifiable(self) -> tuple[int, ...]:
        return self._with_role(NodeRole.modifiable)

    @property
    def targets(self) -> tuple[int, ...]:
        return self._with_role(NodeRole.target)

    @property
    def observed(self) -> tuple[int, ...]:
        return self._with_role(NodeRole.observed)

    @property
    def noise_eligible(self) -> tuple[int, ...]:
        return tuple(self._ids[i] for i in self._noise_eligible)

    @property
    def history_capacity(self) -> int:
        return self._capacity

    @property
    def state(self) -> np.ndarray:
        return self._state.copy()

    @property
    def history(self) -> tuple[np.ndarray, ...]:
        """Past states, oldest first; the last entry is the current state."""
        return tuple(h.copy() for h in self._history)

    @property
    def clamps(self) -> dict[int, float]:
        return dict(self._clamps)

    def spec(self, node: int) -> NodeSpec:
        return self._specs[node]

    def parents(self, node: int) -> tuple[int, ...]:
        return self._parents[node]

    def index(self, node: int) -> int:
        return self._index[node]

    def value(self, node: int) -> float:
        return float(self._state[self._index[node]])

    def values(self, nodes: Iterable[int]) -> np.ndarray:
        return np.array([self._state[self._index[node]] for node in nodes], dtype=float)

    def set_value(self, node: int, value: float) -> None:
        """Overwrite a node's current value in place (used for exogenous impulses such as meals)."""
        self._state[self._index[node]] = value

    def _with_role(self, role: NodeRole) -> tuple[int, ...]:
        return tuple(node for node in self._ids if self._specs[node].role is role)

    def _check_modifiable(self, node: int) -> None:
        spec = self._specs.get(node)
        if spec is None or spec.role is not NodeRole.modifiable:
            raise InterventionError(f"node {node} is not modifiable")

    def apply_do(self, node: int, value: float) -> None:
        self._check_modifiable(node)
        self._clamps[node] = float(value)

    def release_do(self, node: int) -> None:
        self._check_modifiable(node)
        self._clamps.pop(node, None)

    def _evaluate(self, node: int, current: np.ndarray, z: float) -> float:
        equation = self._specs[node].equation
        parents = self._parent_index[node]
        if isinstance(equation, LinearGaussian):
            mu = float(np.dot(equation.weights, current[parents])) if len(parents) else 0.0
            return mu + equation.noise_sd * z
        if isinstance(equation, HillDelay):
            mu = 0.0
            for term, parent in zip(equation.terms, parents):
                source = current if term.delay == 0 else self._history[-term.delay]
                mu += eval_hill(max(float(source[parent]), 0.0), term.sign, term.beta, term.k, term.n)
            return mu + equation.noise_sd * z
        rate = get_rate(equation.rate)
        parent_values = current[parents].copy()
        x0 = float(self._state[self._index[node]])
        solution = odeint(lambda y, _t: [rate.func(float(y[0]), parent_values, equation.params)], [x0], [0.0, equation.h])
        value = float(solution[-1, 0])
        return max(value, 0.0) if rate.nonnegative else value

    def _perturb(self, values: np.ndarray, regime: NoiseRegime, rng: np.random.Generator) -> list[int]:
        if not regime.active or not len(self._noise_eligible):
            return []
        size = len(self._noise_eligible)
        hits = rng.random(size) < regime.trigger_prob
        factors = rng.uniform(regime.magnitude_factor, 2 * regime.magnitude_factor, size=size)
        hit_index = self._noise_eligible[hits]
        values[hit_index] *= factors[hits]
        perturbed = [self._ids[i] for i in hit_index]
        if perturbed:
            logger.debug(f"Noise hit nodes {perturbed}")
        return perturbed

    def step(
        self,
        interventions: Optional[Mapping[int, float]] = None,
        rng: Optional[np.random.Generator] = None,
        noise: Optional[NoiseRegime] = None,
    ) -> np.ndarray:
        """Advance the dynamics by one step.

        Parentless nodes are evaluated first; when `noise` is active the eligible ones are
        perturbed before any child reads them. Every call draws exactly one standard normal
        per node so paired runs that share a seed stay aligned.

        Args:
            interventions (Optional[Mapping[int, float]]): One-step do-values, merged over the active clamps.
            rng (Optional[np.random.Generator]): Source of the equation noise; without it all noise terms are zero.
            noise (Optional[NoiseRegime]): External noise regime applied during this step.

        Returns:
            np.ndarray: The new state vector.

        Raises:
            InterventionError: If an intervention targets a non-modifiable node.
        """
        do = dict(self._clamps)
        for node, value in (interventions or {}).items():
            self._check_modifiable(node)
            do[node] = float(value)
        z = rng.standard_normal(len(self._ids)) if rng is not None else np.zeros(len(self._ids))
        new = np.empty(len(self._ids), dtype=float)
        for node in self._roots:
            i = self._index[node]
            new[i] = do[node] if node in do else self._evaluate(node, new, z[i])
        if noise is not None and rng is not None:
            self._perturb(new, noise, rng)
        for node in self._rest:
            i = self._index[node]
            new[i] = do[node] if node in do else self._evaluate(node, new, z[i])
        self._state = new
        self._history.append(new)
        return new.copy()

    def inject_noise(self, regime: NoiseRegime, rng: np.random.Generator) -> list[int]:
        """Perturb eligible parentless nodes of the current state in place and return the ones hit."""
        return self._perturb(self._state, regime, rng)

    def snapshot(self) -> GraphSnapshot:
        return GraphSnapshot(
            state=self._state.copy(),
            history=tuple(h.copy() for h in self._history),
            clamps=tuple(sorted(self._clamps.items())),
        )

    def restore(self, snapshot: GraphSnapshot) -> None:
        self._history = deque((h.copy() for h in snapshot.history), maxlen=self._capacity)
        self._state = self._history[-1]
        self._clamps = dict(snapshot.clamps)

    def to_dict(self) -> dict[str, Any]:
        return graph_spec_to_dict(self.specs, self.edges)

    def __repr__(self) -> str:
        return (
            f"CausalGraphDynamic<(nodes={len(self._ids)}, edges={self._dag.number_of_edges()}, "
            f"modifiable={list(self.modifiable)}, targets={list(self.targets)})>"
        )


def build_graph(specs: Sequence[NodeSpec], edges: Iterable[Edge]) -> CausalGraphDynamic:
    return CausalGraphDynamic(specs, edges)


def step(
    graph: CausalGraphDynamic,
    interventions: Optional[Mapping[int, float]] = None,
    rng: Optional[np.random.Generator] = None,
    noise: Optional[NoiseRegime] = None,
) -> np.ndarray:
    return graph.step(interventions, rng, noise)


def apply_do(graph: CausalGraphDynamic, node: int, value: float) -> None:
    graph.apply_do(node, value)


def release_do(graph: CausalGraphDynamic, node: int) -> None:
    graph.release_do(node)


def inject_noise(graph: CausalGraphDynamic, regime: NoiseRegime, rng: np.random.Generator) -> list[int]:
    return graph.inject_noise(regime, rng)


def load_graph_spec(file_path: FilePath) -> CausalGraphDynamic:
    """Load a graph from a JSON spec file (schema in docs/graph_spec.md)."""
    specs, edges = graph_spec_from_dict(read_json(file_path))
    return CausalGraphDynamic(specs, edges)


def save_graph_spec(graph: CausalGraphDynamic, file_path: FilePath) -> None:
    write_json(file_path, graph.to_dict())
