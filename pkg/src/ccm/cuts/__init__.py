from __future__ import annotations

import logging
from typing import Iterable, Optional, Sequence, Union

import networkx as nx

from ccm.graph import CausalGraphDynamic

from ._utils import GraphLike, as_digraph, brute_force, enumerate_closures, is_cut, reachable_from, reaching
from .base import CcmView, CutFeatures, CutSet, CutSetCatalog, SurgeryResult
from .const import MAX_CUTS
from .exceptions import BoundaryError, NoCutError, NoPathError

logger = logging.getLogger(__name__)

__all__ = (
    "BoundaryError",
    "CcmView",
    "CutFeatures",
    "CutSet",
    "CutSetCatalog",
    "NoCutError",
    "NoPathError",
    "SurgeryResult",
    "brute_force_min_cuts",
    "chain_views",
    "controllable_region",
    "enumerate_min_cuts",
    "features",
    "is_cut",
    "surgery",
)


def _terminals(
    graph: GraphLike, sources: Optional[Iterable[int]], sinks: Optional[Iterable[int]]
) -> tuple[set[int], set[int]]:
    if isinstance(graph, CausalGraphDynamic):
        sources = graph.modifiable if sources is None else sources
        sinks = graph.targets if sinks is None else sinks
    elif isinstance(graph, CcmView):
        sources = graph.local_modifiable if sources is None else sources
        sinks = graph.local_target if sinks is None else sinks
    if sources is None or sinks is None:
        raise ValueError("sources and sinks are required for a plain digraph")
    return set(sources), set(sinks)


def enumerate_min_cuts(
    graph: GraphLike,
    sources: Optional[Iterable[int]] = None,
    sinks: Optional[Iterable[int]] = None,
    max_cuts: int = MAX_CUTS,
) -> CutSetCatalog:
    """Enumerate every minimum vertex cut between `sources` and `sinks`.

    The minimum size comes from max-flow on the node-split network (unit capacity for interior
    nodes, unbounded for terminals and edges). Every minimum cut then corresponds to a closed set
    of the residual graph, and those are enumerated over its strongly connected components.

    Args:
        graph (GraphLike): A graph dynamic, a view or a plain digraph.
        sources (Optional[Iterable[int]]): Defaults to the modifiable nodes of `graph`.
        sinks (Optional[Iterable[int]]): Defaults to the target nodes of `graph`.
        max_cuts (int): Stop once this many distinct cuts are found. Defaults to 64.

    Returns:
        CutSetCatalog: Distinct cuts of equal size in canonical (lexicographic) order.

    Raises:
        NoPathError: If no sink is reachable from the sources.
        NoCutError: If a source is a sink or touches one through terminal nodes only.
    """
    source_set, sink_set = _terminals(graph, sources, sinks)
    structure = as_digraph(graph)
    size, stream = enumerate_closures(structure, source_set, sink_set)
    found: set[CutSet] = set()
    capped = False
    for nodes in stream:
        if len(nodes) != size:
            continue
        found.add(CutSet(nodes))
        if len(found) >= max_cuts:
            capped = True
            logger.warning(f"Cut enumeration capped at {max_cuts} cuts of size {size}")
            break
    catalog = CutSetCatalog(cuts=tuple(found), sources=tuple(sorted(source_set)), sinks=tuple(sorted(sink_set)), capped=capped)
    logger.debug(f"Found {len(catalog)} minimum cuts of size {size}")
    return catalog


def brute_force_min_cuts(
    graph: GraphLike, sources: Optional[Iterable[int]] = None, sinks: Optional[Iterable[int]] = None
) -> CutSetCatalog:
    """Exhaustive-subset oracle for `enumerate_min_cuts`; exponential, meant for small graphs."""
    source_set, sink_set = _terminals(graph, sources, sinks)
    cuts = brute_force(as_digraph(graph), source_set, sink_set)
    return CutSetCatalog(cuts=tuple(CutSet(c) for c in cuts), sources=tuple(sorted(source_set)), sinks=tuple(sorted(sink_set)))


def _make_view(
    base: CausalGraphDynamic,
    structure: nx.DiGraph,
    severed: set[tuple[int, int]],
    entry: set[int],
    exit_: set[int],
    local_modifiable: Sequence[int],
    local_target: Sequence[int],
) -> CcmView:
    severed_graph = nx.DiGraph(structure)
    severed_graph.remove_edges_from(severed)
    path = reachable_from(severed_graph, entry) & reaching(severed_graph, exit_)
    retained = reaching(severed_graph, path)
    return CcmView(
        base=base,
        retained_nodes=frozenset(retained),
        severed_edges=frozenset(severed),
        local_modifiable=tuple(sorted(local_modifiable)),
        local_target=tuple(sorted(node for node in local_target if node in retained)),
        subgraph=nx.freeze(severed_graph.subgraph(sorted(retained)).copy()),
    )


def surgery(
    graph: Union[CausalGraphDynamic, CcmView],
    cut: Union[CutSet, Iterable[int]],
    boundary: Optional[Union[CutSet, Iterable[int]]] = None,
) -> SurgeryResult:
    """Split a graph (or a view) at `cut` into an upstream and a downstream view.

    The downstream view severs the in-edges of `cut`, which becomes its local modifiable set, and
    keeps the targets as local targets. The upstream view severs the out-edges of `cut` and the
    in-edges of `boundary`, so `boundary` drives it and `cut` is its local target. Each view keeps
    the nodes on its entry-to-exit paths plus their ancestors after severing.

    Args:
        graph (Union[CausalGraphDynamic, CcmView]): What to split. A view is split within its own subgraph.
        cut (Union[CutSet, Iterable[int]]): The current cut.
        boundary (Optional[Union[CutSet, Iterable[int]]]): The upstream entry set, defaulting to the
            modifiable nodes (or the view's local modifiable nodes).

    Returns:
        SurgeryResult: The `(upstream, downstream)` pair.

    Raises:
        BoundaryError: If `cut` and `boundary` intersect or name nodes outside the graph.
    """
    if isinstance(graph, CcmView):
        base, structure = graph.base, graph.subgraph
        targets, default_boundary = set(graph.local_target), graph.local_modifiable
    else:
        base, structure = graph, graph.structure
        targets, default_boundary = set(graph.targets), graph.modifiable
    cut_nodes = set(cut)
    boundary_nodes = set(default_boundary if boundary is None else boundary)
    unknown = (cut_nodes | boundary_nodes) - set(structure.nodes())
    if unknown:
        raise BoundaryError(f"nodes {sorted(unknown)} are not part of the graph")
    if not cut_nodes or cut_nodes & boundary_nodes:
        raise BoundaryError

    downstream = _make_view(
        base,
        structure,
        severed=set(structure.in_edges(cut_nodes)),
        entry=cut_nodes,
        exit_=targets,
        local_modifiable=sorted(cut_nodes),
        local_target=sorted(targets - cut_nodes),
    )
    upstream = _make_view(
        base,
        structure,
        severed=set(structure.out_edges(cut_nodes)) | set(structure.in_edges(boundary_nodes)),
        entry=boundary_nodes,
        exit_=cut_nodes,
        local_modifiable=sorted(boundary_nodes),
        local_target=sorted(cut_nodes),
    )
    return SurgeryResult(upstream=upstream, downstream=downstream)


def controllable_region(view: Optional[CcmView]) -> frozenset[int]:
    """Nodes strictly downstream of the view's modifiable nodes; empty without an active view."""
    if view is None:
        return frozenset()
    return frozenset(reachable_from(view.subgraph, view.local_modifiable) - set(view.local_modifiable))


def features(graph: GraphLike, catalog: CutSetCatalog, region: Iterable[int] = ()) -> list[CutFeatures]:
    """High-level state: one feature row per catalog cut.

    `dis` is the unweighted directed distance from the cut to the nearest sink (the node count when
    no sink is reachable); the degree extras are sums over the cut normalized by the node count.
    """
    structure = as_digraph(graph)
    n = structure.number_of_nodes()
    region = set(region)
    sinks = set(catalog.sinks)
    rows = []
    for cut in catalog:
        distances = nx.multi_source_dijkstra_path_length(structure, set(cut.nodes))
        dis = min((int(d) for node, d in distances.items() if node in sinks), default=n)
        rows.append(
            CutFeatures(
                isCon=int(bool(region & set(cut.nodes))),
                dis=dis,
                num=cut.size,
                extras=(
                    sum(structure.in_degree(node) for node in cut) / n,
                    sum(structure.out_degree(node) for node in cut) / n,
                ),
            )
        )
    return rows


def chain_views(graph: CausalGraphDynamic, cut: Union[CutSet, Iterable[int]], depth: int = 2) -> list[CcmView]:
    """Cascade chain of views ordered downstream to upstream.

    The graph is split at `cut`; while the chain is shorter than `depth`, the most upstream view is
    split again at the first canonical cut of its own catalog. Views that admit no interior cut end
    the chain early.
    """
    if depth < 2:
        raise ValueError(f"a cascade chain needs depth >= 2, got {depth}")
    split = surgery(graph, cut)
    chain = [split.downstream, split.upstream]
    while len(chain) < depth:
        upstream = chain[-1]
        try:
            catalog = enumerate_min_cuts(upstream)
        except (NoCutError, NoPathError):
            break
        if not len(catalog):
            break
        split = surgery(upstream, catalog[0])
        chain[-1:] = [split.downstream, split.upstream]
    return chain
