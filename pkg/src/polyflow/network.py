"""Polymatroidal network data model: graphs, demands, cut cost and sparsity.

A directed network carries two polymatroids per node (over incoming and
outgoing edge slots); an undirected network carries one (over all incident
slots).  The cut cost nu(F) minimizes, over valid assignments g of each cut
edge to one of its own endpoints, the summed per-node oracle values of the
assigned groups.  Networks and demand sets are immutable; every operation
here is a pure function.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import CapabilityError, InputError, SparsityUndefinedError
from .submodular import (
    GroundSet,
    MAX_CHECK_GROUND,
    SubmodularOracle,
    UniformRankCap,
    check_polymatroid,
)

#: Default cap on |F| for the brute-force assignment enumeration (2^|F| states).
MAX_BRUTE_CUT_EDGES = 24

#: Node-side degree above which value tables are not materialized.
MAX_TABLE_DEGREE = 16

NodeId = Hashable
EdgeId = Hashable


@dataclass(frozen=True)
class Edge:
    """An edge slot; ``u -> v`` when the network is directed."""

    id: EdgeId
    u: NodeId
    v: NodeId


class PolymatroidalNetwork:
    """Graph plus per-node polymatroid capacities on incident edge slots.

    Ground sets of the supplied oracles must label exactly the incident
    slots of their node, in incidence order.  Oracles at nodes of degree at
    most ``max_check_degree`` are verified to be polymatroids; larger ones
    are accepted on trust and listed in ``unverified_nodes``.
    """

    def __init__(
        self,
        nodes: Sequence[NodeId],
        edges: Sequence[Edge | tuple],
        orientation: str,
        capacities: Mapping,
        check: bool = True,
        max_check_degree: int = MAX_CHECK_GROUND,
    ):
        if orientation not in ("directed", "undirected"):
            raise InputError(f"orientation must be directed/undirected: {orientation!r}")
        if len(set(nodes)) != len(nodes):
            raise InputError("node ids must be distinct")
        self.orientation = orientation
        self.nodes: tuple[NodeId, ...] = tuple(nodes)
        node_set = set(self.nodes)
        parsed = []
        for e in edges:
            e = e if isinstance(e, Edge) else Edge(*e)
            if e.u not in node_set or e.v not in node_set:
                raise InputError(f"edge {e.id!r} references unknown node")
            if e.u == e.v:
                raise InputError(f"edge {e.id!r} is a self-loop")
            parsed.append(e)
        if len({e.id for e in parsed}) != len(parsed):
            raise InputError("edge ids must be distinct")
        self.edges: tuple[Edge, ...] = tuple(parsed)
        self._edge_by_id = {e.id: e for e in self.edges}
        self._edge_pos = {e.id: i for i, e in enumerate(self.edges)}

        in_slots: dict[NodeId, list[EdgeId]] = {v: [] for v in self.nodes}
        out_slots: dict[NodeId, list[EdgeId]] = {v: [] for v in self.nodes}
        all_slots: dict[NodeId, list[EdgeId]] = {v: [] for v in self.nodes}
        for e in self.edges:
            out_slots[e.u].append(e.id)
            in_slots[e.v].append(e.id)
            all_slots[e.u].append(e.id)
            all_slots[e.v].append(e.id)
        self._in_slots = {v: tuple(s) for v, s in in_slots.items()}
        self._out_slots = {v: tuple(s) for v, s in out_slots.items()}
        self._all_slots = {v: tuple(s) for v, s in all_slots.items()}

        self.capacities = dict(capacities)
        unverified = []
        for v in self.nodes:
            for side in self.sides():
                oracle = self.oracle(v, side)
                slots = self.slots(v, side)
                if tuple(oracle.ground.labels) != slots:
                    raise InputError(
                        f"oracle at node {v!r} side {side!r} must have ground "
                        f"labels {slots!r}, got {tuple(oracle.ground.labels)!r}"
                    )
                if check:
                    if oracle.ground.size <= max_check_degree:
                        rep = check_polymatroid(oracle)
                        if not rep.is_polymatroid:
                            raise InputError(
                                f"capacity at node {v!r} side {side!r} is not a "
                                f"polymatroid: {rep}"
                            )
                    else:
                        unverified.append(v)
        self.unverified_nodes = frozenset(unverified)
        self._tables: dict[tuple[NodeId, str], np.ndarray] = {}

    # -- structure ---------------------------------------------------------

    @property
    def directed(self) -> bool:
        return self.orientation == "directed"

    def sides(self) -> tuple[str, ...]:
        return ("in", "out") if self.directed else ("all",)

    def slots(self, v: NodeId, side: str) -> tuple[EdgeId, ...]:
        if side == "in":
            return self._in_slots[v]
        if side == "out":
            return self._out_slots[v]
        if side == "all":
            return self._all_slots[v]
        raise InputError(f"unknown side {side!r}")

    def oracle(self, v: NodeId, side: str) -> SubmodularOracle:
        try:
            cap = self.capacities[v]
        except KeyError:
            raise InputError(f"no capacity oracle for node {v!r}") from None
        if self.directed:
            if not isinstance(cap, (tuple, list)) or len(cap) != 2:
                raise InputError(
                    f"directed network needs (in, out) oracle pair at {v!r}"
                )
            return cap[0] if side == "in" else cap[1]
        if side != "all":
            raise InputError("undirected networks have a single 'all' side")
        return cap

    def edge(self, eid: EdgeId) -> Edge:
        try:
            return self._edge_by_id[eid]
        except KeyError:
            raise InputError(f"unknown edge id {eid!r}") from None

    def edge_index(self, eid: EdgeId) -> int:
        return self._edge_pos[eid]

    def sorted_edge_ids(self, eids: Iterable[EdgeId]) -> tuple[EdgeId, ...]:
        return tuple(sorted(set(eids), key=self.edge_index))

    def slot_position(self, v: NodeId, side: str, eid: EdgeId) -> int:
        return self.slots(v, side).index(eid)

    # -- kernel tables -----------------------------------------------------

    def side_table(self, v: NodeId, side: str) -> np.ndarray:
        """2^deg oracle values for one node side, cached."""
        key = (v, side)
        tab = self._tables.get(key)
        if tab is None:
            oracle = self.oracle(v, side)
            if oracle.ground.size > MAX_TABLE_DEGREE:
                raise CapabilityError(
                    f"node {v!r} side {side!r} degree {oracle.ground.size} "
                    f"exceeds table limit {MAX_TABLE_DEGREE}"
                )
            tab = np.array(oracle.table(), dtype=np.float64)
            self._tables[key] = tab
        return tab

    def assignment_sides(self, eid: EdgeId) -> tuple[tuple, tuple]:
        """((node, side, slot position) for the tail choice, same for head)."""
        e = self.edge(eid)
        if self.directed:
            return (
                (e.u, "out", self.slot_position(e.u, "out", eid)),
                (e.v, "in", self.slot_position(e.v, "in", eid)),
            )
        return (
            (e.u, "all", self.slot_position(e.u, "all", eid)),
            (e.v, "all", self.slot_position(e.v, "all", eid)),
        )


@dataclass(frozen=True)
class DemandSet:
    """Commodity pairs with demand values.

    When ``symmetric`` the stored pairs are unordered and expand into the
    2k ordered pairs (s_i, t_i), (t_i, s_i) with a common demand.
    """

    pairs: tuple[tuple[NodeId, NodeId, float], ...]
    symmetric: bool = False

    def __post_init__(self):
        for s, t, d in self.pairs:
            if s == t:
                raise InputError(f"demand pair has equal endpoints: {s!r}")
            if not math.isfinite(d) or d < 0:
                raise InputError(f"demand must be finite and non-negative: {d!r}")

    @property
    def k(self) -> int:
        return len(self.pairs)

    def ordered_units(self) -> list[tuple[NodeId, NodeId, float, int, int]]:
        """(source, target, demand, pair index, direction) per ordered pair.

        Direction 0 is (s_i, t_i); direction 1 — only under symmetric
        demands — is (t_i, s_i).
        """
        units = []
        for i, (s, t, d) in enumerate(self.pairs):
            units.append((s, t, float(d), i, 0))
            if self.symmetric:
                units.append((t, s, float(d), i, 1))
        return units

    @property
    def total_demand(self) -> float:
        mult = 2.0 if self.symmetric else 1.0
        return mult * sum(d for _, _, d in self.pairs)


@dataclass(frozen=True)
class CutSolution:
    """An edge cut with a valid assignment and its cost."""

    edges: tuple[EdgeId, ...]
    assignment: dict[EdgeId, NodeId]
    cost: float
    separated: tuple[tuple[int, int], ...] = ()  # (pair index, direction)
    demand_separated: float = 0.0

    def to_dict(self) -> dict:
        return {
            "edges": list(self.edges),
            "assignment": {str(e): str(v) for e, v in self.assignment.items()},
            "cost": self.cost,
            "separated": [
                {"pair": i, "direction": "reverse" if d else "forward"}
                for i, d in self.separated
            ],
            "demand_separated": self.demand_separated,
        }


# -- graph reachability and distances ---------------------------------------


def reachable_from(
    net: PolymatroidalNetwork,
    source: NodeId,
    removed: frozenset | set = frozenset(),
    live_nodes: set | None = None,
) -> set:
    """Nodes reachable from ``source`` ignoring ``removed`` edge ids."""
    if live_nodes is not None and source not in live_nodes:
        return set()
    adj: dict[NodeId, list[NodeId]] = {}
    for e in net.edges:
        if e.id in removed:
            continue
        if live_nodes is not None and (e.u not in live_nodes or e.v not in live_nodes):
            continue
        adj.setdefault(e.u, []).append(e.v)
        if not net.directed:
            adj.setdefault(e.v, []).append(e.u)
    seen = {source}
    stack = [source]
    while stack:
        u = stack.pop()
        for w in adj.get(u, ()):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def shortest_distances(
    arcs: Iterable[tuple[Hashable, Hashable, float]], source: Hashable
) -> dict[Hashable, float]:
    """Single-source Dijkstra over (tail, head, length >= 0) arcs."""
    adj: dict[Hashable, list[tuple[Hashable, float]]] = {}
    for u, v, w in arcs:
        if w < 0:
            raise InputError("arc lengths must be non-negative")
        adj.setdefault(u, []).append((v, w))
    dist: dict[Hashable, float] = {source: 0.0}
    heap = [(0.0, 0, source)]
    tiebreak = 1
    while heap:
        d, _, u = heapq.heappop(heap)
        if d > dist.get(u, math.inf):
            continue
        for v, w in adj.get(u, ()):
            nd = d + w
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, tiebreak, v))
                tiebreak += 1
    return dist


# -- cut cost ----------------------------------------------------------------


def cut_cost(
    net: PolymatroidalNetwork,
    cut_edges: Iterable[EdgeId],
    max_edges: int = MAX_BRUTE_CUT_EDGES,
) -> tuple[float, dict[EdgeId, NodeId]]:
    """nu(F) and an attaining valid assignment, by brute force over the
    2^|F| endpoint assignments with per-node regrouping."""
    eids = net.sorted_edge_ids(cut_edges)
    if not eids:
        return 0.0, {}
    if len(eids) > max_edges:
        raise CapabilityError(
            f"cut has {len(eids)} edges; brute-force limit is {max_edges}"
        )
    try:
        arrays = _kernel_arrays(net, eids)
    except CapabilityError:
        return _cut_cost_direct(net, eids)
    cost, assign_bits = _kernels.impl.min_assignment_cost(*arrays[0])
    assignment = {}
    for i, eid in enumerate(eids):
        e = net.edge(eid)
        assignment[eid] = e.v if assign_bits >> i & 1 else e.u
    return float(cost), assignment


def _kernel_arrays(net: PolymatroidalNetwork, eids: Sequence[EdgeId]):
    """Pack table references for the assignment kernel.

    Returns ((tbl_a, bit_a, tbl_b, bit_b, offsets, values), table_keys).
    Side a is the tail endpoint, side b the head.
    """
    table_ids: dict[tuple, int] = {}
    tables: list[np.ndarray] = []

    def table_ref(v, side):
        key = (v, side)
        if key not in table_ids:
            table_ids[key] = len(tables)
            tables.append(net.side_table(v, side))
        return table_ids[key]

    m = len(eids)
    tbl_a = np.empty(m, dtype=np.int32)
    bit_a = np.empty(m, dtype=np.int32)
    tbl_b = np.empty(m, dtype=np.int32)
    bit_b = np.empty(m, dtype=np.int32)
    for i, eid in enumerate(eids):
        (ua, sa, pa), (ub, sb, pb) = net.assignment_sides(eid)
        tbl_a[i] = table_ref(ua, sa)
        bit_a[i] = pa
        tbl_b[i] = table_ref(ub, sb)
        bit_b[i] = pb
    offsets = np.zeros(len(tables) + 1, dtype=np.int64)
    for t, tab in enumerate(tables):
        offsets[t + 1] = offsets[t] + len(tab)
    values = (
        np.concatenate(tables) if tables else np.zeros(0, dtype=np.float64)
    )
    return (tbl_a, bit_a, tbl_b, bit_b, offsets, values), list(table_ids)


def _cut_cost_direct(net, eids):
    """Fallback without tables: enumerate assignments, evaluate oracles."""
    best = math.inf
    best_assign = None
    m = len(eids)
    for bits in range(1 << m):
        groups: dict[tuple, list[EdgeId]] = {}
        for i, eid in enumerate(eids):
            e = net.edge(eid)
            node = e.v if bits >> i & 1 else e.u
            if net.directed:
                side = "in" if node == e.v else "out"
            else:
                side = "all"
            groups.setdefault((node, side), []).append(eid)
        total = 0.0
        for (node, side), group in groups.items():
            oracle = net.oracle(node, side)
            total += oracle.value(
                [oracle.ground.position(eid) for eid in group]
            )
        if total < best:
            best = total
            best_assign = bits
    assignment = {}
    for i, eid in enumerate(eids):
        e = net.edge(eid)
        assignment[eid] = e.v if best_assign >> i & 1 else e.u
    return best, assignment


def assignment_cost(
    net: PolymatroidalNetwork, assignment: Mapping[EdgeId, NodeId]
) -> float:
    """nu_g(F) for an explicit valid assignment g."""
    groups: dict[tuple, list[EdgeId]] = {}
    for eid, node in assignment.items():
        e = net.edge(eid)
        if node not in (e.u, e.v):
            raise InputError(f"edge {eid!r} assigned to non-endpoint {node!r}")
        if net.directed:
            side = "in" if node == e.v else "out"
        else:
            side = "all"
        groups.setdefault((node, side), []).append(eid)
    total = 0.0
    for (node, side), group in groups.items():
        oracle = net.oracle(node, side)
        total += oracle.value([oracle.ground.position(eid) for eid in group])
    return total


# -- separation, sparsity, multicut ------------------------------------------


def separated_pairs(
    net: PolymatroidalNetwork,
    cut_edges: Iterable[EdgeId],
    demands: DemandSet,
) -> tuple[tuple[tuple[int, int], ...], float]:
    """Which (pair, direction) units the cut separates, and D(F).

    Under symmetric demands the two directions of a pair are checked
    independently and each separated direction contributes D_i.
    """
    removed = frozenset(cut_edges)
    reach_cache: dict[NodeId, set] = {}
    separated = []
    total = 0.0
    for s, t, d, idx, direction in demands.ordered_units():
        if s not in reach_cache:
            reach_cache[s] = reachable_from(net, s, removed)
        if t not in reach_cache[s]:
            separated.append((idx, direction))
            total += d
    return tuple(separated), total


def sparsity(
    net: PolymatroidalNetwork,
    cut_edges: Iterable[EdgeId],
    demands: DemandSet,
    max_edges: int = MAX_BRUTE_CUT_EDGES,
) -> float:
    """nu(F) / D(F); undefined when the cut separates no demand."""
    eids = net.sorted_edge_ids(cut_edges)
    _, dem = separated_pairs(net, eids, demands)
    if dem <= 0.0:
        raise SparsityUndefinedError("cut separates zero demand")
    cost, _ = cut_cost(net, eids, max_edges=max_edges)
    return cost / dem


def is_multicut(
    net: PolymatroidalNetwork,
    cut_edges: Iterable[EdgeId],
    demands: DemandSet,
) -> bool:
    """True iff every pair is separated (either direction suffices when
    demands are symmetric)."""
    separated, _ = separated_pairs(net, cut_edges, demands)
    hit = {idx for idx, _ in separated}
    return all(i in hit for i in range(demands.k))


def cut_solution(
    net: PolymatroidalNetwork,
    cut_edges: Iterable[EdgeId],
    demands: DemandSet | None = None,
    max_edges: int = MAX_BRUTE_CUT_EDGES,
) -> CutSolution:
    """Bundle a cut with its optimal assignment and separation record."""
    eids = net.sorted_edge_ids(cut_edges)
    cost, assignment = cut_cost(net, eids, max_edges=max_edges)
    if demands is None:
        return CutSolution(eids, assignment, cost)
    separated, dem = separated_pairs(net, eids, demands)
    return CutSolution(eids, assignment, cost, separated, dem)


# -- node-capacitated encoding ------------------------------------------------


def encode_node_capacitated(
    nodes: Sequence[NodeId],
    edges: Sequence[Edge | tuple],
    node_caps: Mapping[NodeId, float],
    terminals: Iterable[NodeId] = (),
) -> PolymatroidalNetwork:
    """Undirected network encoding per-node capacities c(v).

    Internal nodes get the joint cap 2c(v) on every non-empty incident slot
    subset (a unit of flow through an internal node occupies two slots);
    terminal nodes get cap c(v).
    """
    terminal_set = set(terminals)
    parsed = [e if isinstance(e, Edge) else Edge(*e) for e in edges]
    incident: dict[NodeId, list[EdgeId]] = {v: [] for v in nodes}
    for e in parsed:
        incident[e.u].append(e.id)
        incident[e.v].append(e.id)
    capacities = {}
    for v in nodes:
        if v not in node_caps:
            raise InputError(f"no capacity given for node {v!r}")
        c = float(node_caps[v])
        if not math.isfinite(c) or c < 0:
            raise InputError(f"node capacity must be finite non-negative: {c!r}")
        cap = c if v in terminal_set else 2.0 * c
        capacities[v] = UniformRankCap(GroundSet(tuple(incident[v])), cap)
    return PolymatroidalNetwork(nodes, parsed, "undirected", capacities)
