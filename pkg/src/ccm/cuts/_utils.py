from __future__ import annotations

import logging
from itertools import combinations
from typing import Hashable, Iterable, Iterator, Optional, Union

import networkx as nx
from networkx.algorithms.flow import edmonds_karp

from ccm.graph import CausalGraphDynamic

from .base import CcmView
from .const import MAX_CLOSURE_LEAVES, SUPER_SINK, SUPER_SOURCE
from .exceptions import NoCutError, NoPathError

logger = logging.getLogger(__name__)

GraphLike = Union[CausalGraphDynamic, CcmView, nx.DiGraph]

IN, OUT = "in", "out"


def as_digraph(graph: GraphLike) -> nx.DiGraph:
    """Return the edge relation behind a graph, a view or a plain digraph."""
    if isinstance(graph, CausalGraphDynamic):
        return graph.structure
    if isinstance(graph, CcmView):
        return graph.subgraph
    return graph


def reachable_from(structure: nx.DiGraph, nodes: Iterable[int]) -> set[int]:
    """Nodes reachable from `nodes`, the nodes themselves included."""
    reached: set[int] = set()
    for node in nodes:
        if node in structure and node not in reached:
            reached.add(node)
            reached |= nx.descendants(structure, node)
    return reached


def reaching(structure: nx.DiGraph, nodes: Iterable[int]) -> set[int]:
    """Nodes that reach `nodes`, the nodes themselves included."""
    reached: set[int] = set()
    for node in nodes:
        if node in structure and node not in reached:
            reached.add(node)
            reached |= nx.ancestors(structure, node)
    return reached


def relevant_nodes(structure: nx.DiGraph, sources: Iterable[int], sinks: Iterable[int]) -> set[int]:
    """Nodes lying on at least one source-to-sink path.

    Raises:
        NoPathError: If no sink is reachable from the sources.
    """
    sinks = set(sinks)
    relevant = reachable_from(structure, sources) & reaching(structure, sinks)
    if not relevant & sinks:
        raise NoPathError
    return relevant


def is_cut(structure: nx.DiGraph, nodes: Iterable[int], sources: Iterable[int], sinks: Iterable[int]) -> bool:
    """Check whether removing `nodes` disconnects every source from every sink.

    Args:
        structure (nx.DiGraph): Edge relation.
        nodes (Iterable[int]): Candidate cut.
        sources (Iterable[int]): Source nodes.
        sinks (Iterable[int]): Sink nodes.

    Returns:
        bool: True if no sink stays reachable once `nodes` are removed.
    """
    removed = set(nodes)
    remaining = nx.restricted_view(structure, list(removed), [])
    sources = [s for s in sources if s not in removed]
    return not reachable_from(remaining, sources) & (set(sinks) - removed)


def check_terminals(structure: nx.DiGraph, sources: set[int], sinks: set[int]) -> None:
    """Raise `NoCutError` when sources reach sinks through terminal nodes only."""
    if sources & sinks:
        raise NoCutError(f"nodes {sorted(sources & sinks)} are both sources and sinks")
    terminals = structure.subgraph(sources | sinks)
    if reachable_from(terminals, sources) & sinks:
        raise NoCutError


def split_network(structure: nx.DiGraph, nodes: set[int], terminals: set[int]) -> nx.DiGraph:
    """Node-split flow network over `nodes`.

    Each node v becomes (v, "in") -> (v, "out"), with unit capacity for interior nodes and no
    capacity attribute (unbounded) for terminals. Original edges join (u, "out") -> (v, "in")
    without a capacity attribute either.
    """
    network = nx.DiGraph()
    for node in sorted(nodes):
        if node in terminals:
            network.add_edge((node, IN), (node, OUT))
        else:
            network.add_edge((node, IN), (node, OUT), capacity=1)
    for u, v in structure.subgraph(nodes).edges():
        network.add_edge((u, OUT), (v, IN))
    return network


def residual_closure(
    structure: nx.DiGraph, nodes: set[int], sources: set[int], sinks: set[int]
) -> tuple[int, nx.DiGraph, set[Hashable], set[Hashable]]:
    """Run max-flow on the split network and condense its residual graph.

    Returns:
        tuple: The flow value, the condensation of the residual graph, and the condensed nodes forced
        onto the source side and onto the sink side of every minimum cut.
    """
    network = split_network(structure, nodes, sources | sinks)
    for source in sorted(sources):
        network.add_edge(SUPER_SOURCE, (source, IN))
    for sink in sorted(sinks):
        network.add_edge((sink, OUT), SUPER_SINK)
    flow = edmonds_karp(network, SUPER_SOURCE, SUPER_SINK)
    value = int(round(flow.graph["flow_value"]))

    residual = nx.DiGraph()
    residual.add_nodes_from(network.nodes())
    residual.add_edges_from((u, v) for u, v, attrs in flow.edges(data=True) if attrs["capacity"] - attrs["flow"] > 0)
    condensed = nx.condensation(residual)
    mapping = condensed.graph["mapping"]
    source_side = {mapping[SUPER_SOURCE]} | nx.descendants(condensed, mapping[SUPER_SOURCE])
    sink_side = {mapping[SUPER_SINK]} | nx.ancestors(condensed, mapping[SUPER_SINK])
    return value, condensed, source_side, sink_side


def closed_sets(condensed: nx.DiGraph, source_side: set[Hashable], sink_side: set[Hashable], limit: int) -> Iterator[set[Hashable]]:
    """Enumerate successor-closed sets containing `source_side` and avoiding `sink_side`.

    Free components are decided in topological order; including one forces all its descendants in,
    so every closed set is produced exactly once. Stops after `limit` leaves.
    """
    free = [c for c in nx.lexicographical_topological_sort(condensed) if c not in source_side and c not in sink_side]
    descendants = {c: nx.descendants(condensed, c) for c in free}
    stack: list[tuple[int, frozenset[Hashable]]] = [(0, frozenset(source_side))]
    leaves = 0
    while stack:
        position, chosen = stack.pop()
        while position < len(free) and free[position] in chosen:
            position += 1
        if position == len(free):
            yield set(chosen)
            leaves += 1
            if leaves >= limit:
                logger.warning(f"Closed-set enumeration stopped after {limit} leaves")
                return
            continue
        component = free[position]
        stack.append((position + 1, chosen))
        stack.append((position + 1, chosen | {component} | descendants[component]))


def cut_of(condensed: nx.DiGraph, closed: set[Hashable], interior: set[int]) -> tuple[int, ...]:
    side: set[Hashable] = set()
    for component in closed:
        side |= condensed.nodes[component]["members"]
    return tuple(sorted(v for v in interior if (v, IN) in side and (v, OUT) not in side))


def enumerate_closures(
    structure: nx.DiGraph, sources: set[int], sinks: set[int], max_leaves: int = MAX_CLOSURE_LEAVES
) -> tuple[int, Iterator[tuple[int, ...]]]:
    """Minimum cut size and a stream of (possibly repeated) minimum vertex cuts."""
    nodes = relevant_nodes(structure, sources, sinks)
    check_terminals(structure.subgraph(nodes), sources & nodes, sinks & nodes)
    interior = nodes - sources - sinks
    value, condensed, source_side, sink_side = residual_closure(structure, nodes, sources & nodes, sinks & nodes)
    cuts = (cut_of(condensed, closed, interior) for closed in closed_sets(condensed, source_side, sink_side, max_leaves))
    return value, cuts


def brute_force(structure: nx.DiGraph, sources: set[int], sinks: set[int], max_size: Optional[int] = None) -> list[tuple[int, ...]]:
    """All smallest interior subsets that disconnect sources from sinks, by exhaustive scan."""
    nodes = relevant_nodes(structure, sources, sinks)
    check_terminals(structure.subgraph(nodes), sources & nodes, sinks & nodes)
    interior = sorted(nodes - sources - sinks)
    for size in range(1, (max_size or len(interior)) + 1):
        found = [combo for combo in combinations(interior, size) if is_cut(structure, combo, sources, sinks)]
        if found:
            return found
    raise NoCutError
