from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Iterator, NamedTuple, Optional

import networkx as nx
import numpy as np

from ccm.graph import CausalGraphDynamic, Edge, HillDelay, LinearGaussian, NodeRole, NodeSpec

from .const import FEATURE_NAMES

__all__ = ("CutSet", "CutSetCatalog", "CcmView", "CutFeatures", "SurgeryResult")


@dataclass(frozen=True, order=True)
class CutSet:
    """A vertex cut, nodes kept in ascending id order; the first node carries the low-level action."""

    nodes: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(sorted(int(node) for node in self.nodes)))

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def first(self) -> int:
        return self.nodes[0]

    def __iter__(self) -> Iterator[int]:
        return iter(self.nodes)

    def __len__(self) -> int:
        return len(self.nodes)

    def __str__(self) -> str:
        return "{" + ",".join(str(node) for node in self.nodes) + "}"


@dataclass(frozen=True)
class CutSetCatalog:
    """The high-level action space: every minimum vertex cut between `sources` and `sinks`, canonically ordered."""

    cuts: tuple[CutSet, ...]
    sources: tuple[int, ...]
    sinks: tuple[int, ...]
    capped: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "cuts", tuple(sorted(set(self.cuts))))
        sizes = {cut.size for cut in self.cuts}
        if len(sizes) > 1:
            raise ValueError(f"catalog cuts must share one size, got sizes {sorted(sizes)}")

    @property
    def cut_size(self) -> int:
        return self.cuts[0].size if self.cuts else 0

    def index(self, cut: CutSet) -> int:
        return self.cuts.index(cut)

    def __getitem__(self, i: int) -> CutSet:
        return self.cuts[i]

    def __iter__(self) -> Iterator[CutSet]:
        return iter(self.cuts)

    def __len__(self) -> int:
        return len(self.cuts)

    def to_rows(self) -> list[dict[str, Any]]:
        return [{"cut_id": i, "nodes": " ".join(str(node) for node in cut.nodes)} for i, cut in enumerate(self.cuts)]


@dataclass(frozen=True)
class CutFeatures:
    isCon: int
    dis: int
    num: int
    extras: tuple[float, ...] = ()

    def as_vector(self) -> np.ndarray:
        return np.array([self.isCon, self.dis, self.num, *self.extras], dtype=float)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(FEATURE_NAMES, self.as_vector().tolist()))


@dataclass(frozen=True)
class CcmView:
    """A surgered subgraph acting as a sub-environment with its own modifiable and target variables."""

    base: CausalGraphDynamic = field(repr=False, compare=False)
    retained_nodes: frozenset[int]
    severed_edges: frozenset[Edge]
    local_modifiable: tuple[int, ...]
    local_target: tuple[int, ...]
    subgraph: nx.DiGraph = field(repr=False, compare=False)

    def __contains__(self, node: object) -> bool:
        return node in self.retained_nodes

    @property
    def nodes(self) -> tuple[int, ...]:
        return tuple(sorted(self.retained_nodes))

    def to_dynamic(self, noise_sd: Optional[float] = None) -> CausalGraphDynamic:
        """Build a standalone dynamic over the retained nodes.

        Local modifiable nodes become parentless modifiable nodes (their in-edges are severed),
        local targets become targets and everything else is observed. `noise_sd` overrides the
        noise of every linear-gaussian and hill equation when given.
        """
        modifiable = set(self.local_modifiable)
        targets = set(self.local_target)
        specs: list[NodeSpec] = []
        for node in self.nodes:
            spec = self.base.spec(node)
            if node in modifiable:
                equation: Any = LinearGaussian(weights=(), noise_sd=0.0)
                role = NodeRole.modifiable
            else:
                equation = spec.equation
                role = NodeRole.target if node in targets else NodeRole.observed
            if noise_sd is not None and isinstance(equation, (LinearGaussian, HillDelay)):
                equation = replace(equation, noise_sd=noise_sd)
            specs.append(replace(spec, role=role, equation=equation))
        return CausalGraphDynamic(specs, list(self.subgraph.edges()))


class SurgeryResult(NamedTuple):
    upstream: CcmView
    downstream: CcmView
