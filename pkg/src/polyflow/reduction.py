"""Reduction from a directed polymatroidal network plus a fractional cut
metric to an edge-capacitated directed network, with cut mapping back.

Per node v the incoming slots are sorted by descending split value and
strung into an in-path v_1 -> v_2 -> ... -> v; consecutive path arcs carry
the sorted-gap lengths and the oracle values of the prefix sets as costs, so
the total cost-length product of a tree equals the node's Lovász-extension
term exactly, and the path from an edge gadget node to v has length equal to
that edge's split at v.  Out-trees mirror the construction with reversed
arcs.  Gadget connector arcs have length 0 and infinite cost (a sentinel,
never a large number, so no tolerance coupling).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import InputError
from .network import (
    CutSolution,
    EdgeId,
    NodeId,
    PolymatroidalNetwork,
    assignment_cost,
    shortest_distances,
)
from .relaxations import FractionalCutMetric

# Reduced-graph node shapes: ("orig", v) | ("edge", eid) | ("tree", v, side, j)
RNode = tuple


@dataclass(frozen=True)
class ReducedArc:
    src: RNode
    dst: RNode
    length: float
    cost: float  # math.inf on connector arcs
    kind: str  # "path" | "link"
    node: NodeId | None = None  # owning original node for path arcs
    side: str | None = None  # "in" | "out"
    level: int | None = None  # 1-based prefix index j
    subset: tuple[EdgeId, ...] = ()  # S_j for path arcs


@dataclass(frozen=True)
class ReducedNetwork:
    """Edge-capacitated directed graph produced by the reduction."""

    original_nodes: tuple[NodeId, ...]
    arcs: tuple[ReducedArc, ...]

    def nodes(self) -> list[RNode]:
        seen: dict[RNode, None] = {}
        for v in self.original_nodes:
            seen[("orig", v)] = None
        for a in self.arcs:
            seen.setdefault(a.src, None)
            seen.setdefault(a.dst, None)
        return list(seen)

    def total_cost_length(self) -> float:
        """sum of cost * length; connector arcs have length 0 and do not
        contribute (infinite cost times zero length reads as zero)."""
        return sum(a.cost * a.length for a in self.arcs if a.length != 0.0)

    def distances_from(self, source: RNode, removed: frozenset = frozenset()):
        arcs = [
            (a.src, a.dst, a.length)
            for i, a in enumerate(self.arcs)
            if i not in removed
        ]
        return shortest_distances(arcs, source)

    def original_distance(self, u: NodeId, v: NodeId) -> float:
        return self.distances_from(("orig", u)).get(("orig", v), math.inf)

    def reachable_original(self, u: NodeId, removed: frozenset = frozenset()):
        """Original nodes reachable from u once the arcs in ``removed``
        (by index) are deleted."""
        adj: dict[RNode, list[RNode]] = {}
        for i, a in enumerate(self.arcs):
            if i in removed:
                continue
            adj.setdefault(a.src, []).append(a.dst)
        seen = {("orig", u)}
        stack = [("orig", u)]
        while stack:
            x = stack.pop()
            for y in adj.get(x, ()):
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return {n[1] for n in seen if n[0] == "orig"}

    def separated_original_pairs(self, removed: frozenset = frozenset()):
        sep = set()
        for u in self.original_nodes:
            reach = self.reachable_original(u, removed)
            for w in self.original_nodes:
                if w != u and w not in reach:
                    sep.add((u, w))
        return sep

    def to_dict(self) -> dict:
        def name(n: RNode) -> str:
            if n[0] == "orig":
                return f"orig:{n[1]}"
            if n[0] == "edge":
                return f"edge:{n[1]}"
            return f"tree:{n[1]}:{n[2]}:{n[3]}"

        return {
            "original_nodes": [str(v) for v in self.original_nodes],
            "nodes": [name(n) for n in self.nodes()],
            "arcs": [
                {
                    "src": name(a.src),
                    "dst": name(a.dst),
                    "length": a.length,
                    "cost": None if math.isinf(a.cost) else a.cost,
                    "kind": a.kind,
                    "node": None if a.node is None else str(a.node),
                    "side": a.side,
                    "level": a.level,
                    "subset": [str(e) for e in a.subset],
                }
                for a in self.arcs
            ],
        }


def reduce_network(
    net: PolymatroidalNetwork, metric: FractionalCutMetric
) -> ReducedNetwork:
    """Build the edge-capacitated directed graph H for a directed instance."""
    if not net.directed:
        raise InputError("the reduction applies to directed networks only")
    arcs: list[ReducedArc] = []
    for v in net.nodes:
        for side in ("in", "out"):
            slots = net.slots(v, side)
            if not slots:
                continue
            oracle = net.oracle(v, side)
            order = sorted(
                slots,
                key=lambda eid: (-metric.split(eid, v), net.edge_index(eid)),
            )
            n = len(order)
            prefix_mask = 0
            prefix_edges: list[EdgeId] = []
            costs = []
            subsets = []
            for eid in order:
                prefix_mask |= 1 << slots.index(eid)
                prefix_edges.append(eid)
                costs.append(oracle.value_of_mask(prefix_mask))
                subsets.append(tuple(prefix_edges))
            gaps = []
            for j in range(n):
                nxt = metric.split(order[j + 1], v) if j + 1 < n else 0.0
                gaps.append(metric.split(order[j], v) - nxt)
            for j in range(n):
                tree_node = ("tree", v, side, j + 1)
                nxt_node = ("tree", v, side, j + 2) if j + 1 < n else ("orig", v)
                if side == "in":
                    src, dst = tree_node, nxt_node
                    link = (("edge", order[j]), tree_node)
                else:
                    src, dst = nxt_node, tree_node
                    link = (tree_node, ("edge", order[j]))
                arcs.append(
                    ReducedArc(
                        src=src, dst=dst, length=gaps[j], cost=costs[j],
                        kind="path", node=v, side=side, level=j + 1,
                        subset=subsets[j],
                    )
                )
                arcs.append(
                    ReducedArc(
                        src=link[0], dst=link[1], length=0.0, cost=math.inf,
                        kind="link", node=v, side=side, level=j + 1,
                    )
                )
    return ReducedNetwork(original_nodes=tuple(net.nodes), arcs=tuple(arcs))


def minimalize_cut(red: ReducedNetwork, arc_indices: Iterable[int]) -> frozenset:
    """Drop arcs whose removal does not change the separated original pairs.

    First keeps only the deepest path arc per tree (the one closest to the
    original node blocks a superset of gadget entries), then greedily drops
    any remaining redundant arc in ascending index order.
    """
    chosen = set(arc_indices)
    for i in chosen:
        if math.isinf(red.arcs[i].cost):
            raise InputError("cut contains an infinite-cost connector arc")
    deepest: dict[tuple, int] = {}
    for i in sorted(chosen):
        a = red.arcs[i]
        key = (a.node, a.side)
        if key not in deepest or a.level > red.arcs[deepest[key]].level:
            deepest[key] = i
    chosen = set(deepest.values())
    target = red.separated_original_pairs(frozenset(chosen))
    for i in sorted(chosen):
        trial = frozenset(chosen - {i})
        if red.separated_original_pairs(trial) == target:
            chosen.discard(i)
    return frozenset(chosen)


def map_cut_back(
    red: ReducedNetwork,
    arc_indices: Iterable[int],
    net: PolymatroidalNetwork,
) -> CutSolution:
    """Map a finite-cost cut of H to an edge cut of the original network.

    The cut is minimalized first; each kept path arc at level j contributes
    its prefix set S_j, assigned to the owning node.  The produced solution
    separates every original pair the reduced cut separates, at no greater
    cost.
    """
    kept = minimalize_cut(red, arc_indices)
    assignment: dict[EdgeId, NodeId] = {}
    cut_edges: set[EdgeId] = set()
    for i in sorted(kept, key=lambda i: (red.arcs[i].side or "", i)):
        a = red.arcs[i]
        for eid in a.subset:
            cut_edges.add(eid)
            # an edge pulled in from both its head's in-tree and its tail's
            # out-tree keeps the first assignment; dropping it from the other
            # group only lowers that group's oracle value
            assignment.setdefault(eid, a.node)
    eids = net.sorted_edge_ids(cut_edges)
    cost = assignment_cost(net, assignment) if assignment else 0.0
    return CutSolution(edges=eids, assignment=assignment, cost=cost)
