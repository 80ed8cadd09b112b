"""Undirected rounding: line-embedding sweeps, region growing, bipartitions.

The bridge between fractional metrics and integral cuts is a 1-Lipschitz map
of the shortest-path metric onto the real line.  Threshold cuts of such a
map admit an explicit endpoint assignment (split each crossing edge at the
fraction its tail contributes to its length) whose cost integrates, over the
sweep parameter, to at most twice the metric's extension objective; the
one-sided directed variant drops the factor of two.  Everything downstream
(sparsest-cut sweeps with measured average distortion, ball growing with the
a = 28 shell bound, the greedy multicut loop, bipartition conversion at a
factor 2) is assembled from that integral.

All logarithms here are base 2 and k_eff = max(k, 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    InputError,
    InternalError,
    SparsityUndefinedError,
)
from .network import (
    CutSolution,
    DemandSet,
    EdgeId,
    NodeId,
    PolymatroidalNetwork,
    cut_cost,
    assignment_cost,
    is_multicut,
    reachable_from,
    separated_pairs,
    shortest_distances,
    MAX_BRUTE_CUT_EDGES,
)
from .relaxations import FractionalCutMetric

REGION_GROWING_CONSTANT = 28.0  # the shell-existence argument yields 2 * 2 * 7
MULTICUT_GUARANTEE = 8.0 + 4.0 * REGION_GROWING_CONSTANT  # = 120 per log2(k_eff)


def effective_k(k: int) -> int:
    return max(k, 2)


@dataclass(frozen=True)
class LineEmbedding:
    """A contraction of the metric onto [0, beta] with measured distortion."""

    coords: dict[NodeId, float]
    beta: float
    avg_distortion: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "coords": {str(v): g for v, g in self.coords.items()},
            "beta": self.beta,
            "avg_distortion": self.avg_distortion,
            "seed": self.seed,
        }


def _pair_metric(dist: Mapping[NodeId, Mapping[NodeId, float]] | Callable,
                 u: NodeId, v: NodeId) -> float:
    if callable(dist):
        return dist(u, v)
    return dist[u][v]


def line_embed(
    nodes: Sequence[NodeId],
    dist,
    pairs: Sequence[tuple[NodeId, NodeId, float]],
    trials: int = 8,
    seed: int = 0,
) -> LineEmbedding:
    """Best contraction among Frechet coordinates and terminal coordinates.

    Candidates are distance-to-anchor-set maps g_A(u) = min_{a in A} d(u, a)
    for random anchor sets of sizes 2^j, j = 0..ceil(log2 n), each sampled
    ``trials`` times, plus the single-source map of every terminal.  Each
    candidate is 1-Lipschitz by the triangle inequality; the one minimizing
    the weighted average distortion

        avgd_w(g) = sum w(u,v) d(u,v) / sum w(u,v) |g(u) - g(v)|

    is returned.  Randomness comes from a counter-based generator keyed by
    ``seed``, so results are reproducible.
    """
    if not pairs:
        raise InputError("line embedding needs at least one weighted pair")
    total_w = sum(w for _, _, w in pairs)
    if total_w <= 0:
        raise InputError("total pair weight must be positive")
    node_list = list(nodes)
    n = len(node_list)
    weighted_true = sum(w * _pair_metric(dist, u, v) for u, v, w in pairs)

    def coords_for(anchors: Sequence[NodeId]) -> dict[NodeId, float]:
        return {
            u: min(_pair_metric(dist, u, a) for a in anchors)
            for u in node_list
        }

    candidates: list[dict[NodeId, float]] = []
    terminals = []
    for s, t, _ in pairs:
        for x in (s, t):
            if x not in terminals:
                terminals.append(x)
    for x in terminals:
        candidates.append(coords_for([x]))
    rng = np.random.Generator(np.random.Philox(key=seed))
    max_j = max(0, math.ceil(math.log2(n))) if n > 1 else 0
    for j in range(max_j + 1):
        size = min(1 << j, n)
        for _ in range(trials):
            anchors = rng.choice(n, size=size, replace=False)
            candidates.append(coords_for([node_list[i] for i in anchors]))

    best = None
    best_avgd = math.inf
    for g in candidates:
        weighted_line = sum(w * abs(g[u] - g[v]) for u, v, w in pairs)
        if weighted_line <= 0.0:
            continue
        avgd = weighted_true / weighted_line
        if avgd < best_avgd:
            best_avgd = avgd
            best = g
    if best is None:
        # every candidate collapses the demand pairs; only possible when all
        # pair distances are zero, in which case distortion is vacuous
        best = candidates[0]
        best_avgd = 1.0
    shift = min(best.values())
    coords = {v: best[v] - shift for v in node_list}
    beta = max(coords.values())
    return LineEmbedding(
        coords=coords, beta=beta, avg_distortion=best_avgd, seed=seed
    )


def verify_contraction(
    embedding: LineEmbedding, nodes: Sequence[NodeId], dist, tol: float = 1e-9
) -> bool:
    g = embedding.coords
    for u in nodes:
        for v in nodes:
            if abs(g[u] - g[v]) > _pair_metric(dist, u, v) + tol:
                return False
    return True


# -- the explicit threshold-cut assignment ------------------------------------


def _split_fraction(metric: FractionalCutMetric, eid: EdgeId, u: NodeId) -> float:
    total = metric.lengths[eid]
    if total <= 0.0:
        return 0.5
    return metric.split(eid, u) / total


def threshold_cut_assignment(
    net: PolymatroidalNetwork,
    metric: FractionalCutMetric,
    coords: Mapping[NodeId, float],
    theta: float,
    live_edges: Iterable[EdgeId] | None = None,
    one_sided: bool = False,
) -> tuple[float, dict[EdgeId, NodeId], tuple[EdgeId, ...]]:
    """Cost of the explicit assignment for the threshold cut at ``theta``.

    A crossing edge uv (with g(u) < theta <= g(v), say) is split at
    g(u) + r * (g(v) - g(u)) where r is u's share of the edge length; theta
    left of the split point assigns the edge to u, otherwise to v.  With
    ``one_sided`` only directed edges leaving the sublevel set count.
    Returns (assignment cost, assignment, crossing edge ids).
    """
    live = None if live_edges is None else set(live_edges)
    assignment: dict[EdgeId, NodeId] = {}
    crossing: list[EdgeId] = []
    for e in net.edges:
        if live is not None and e.id not in live:
            continue
        gu, gv = coords[e.u], coords[e.v]
        if one_sided:
            # only arcs leaving {g <= theta} cross: need g(tail) <= theta < g(head)
            if not (gu <= theta < gv):
                continue
            lo_node, hi_node, lo, hi = e.u, e.v, gu, gv
        else:
            lo, hi = min(gu, gv), max(gu, gv)
            if not (lo <= theta < hi):
                continue
            lo_node, hi_node = (e.u, e.v) if gu <= gv else (e.v, e.u)
        crossing.append(e.id)
        r = _split_fraction(metric, e.id, lo_node)
        split_point = lo + r * (hi - lo)
        assignment[e.id] = lo_node if theta < split_point else hi_node
    return (
        assignment_cost(net, assignment) if assignment else 0.0,
        assignment,
        tuple(crossing),
    )


def integrate_assignment_cost(
    net: PolymatroidalNetwork,
    metric: FractionalCutMetric,
    coords: Mapping[NodeId, float],
    a: float,
    b: float,
    live_edges: Iterable[EdgeId] | None = None,
    one_sided: bool = False,
) -> float:
    """Exact integral over theta in [a, b] of the assignment cost.

    The cost is piecewise constant between breakpoints (node coordinates and
    edge split points), so the integral is an exact finite sum.
    """
    if b <= a:
        return 0.0
    live = None if live_edges is None else set(live_edges)
    points = {a, b}
    for e in net.edges:
        if live is not None and e.id not in live:
            continue
        gu, gv = coords[e.u], coords[e.v]
        lo, hi = min(gu, gv), max(gu, gv)
        lo_node = e.u if gu <= gv else e.v
        r = _split_fraction(metric, e.id, lo_node)
        for p in (lo, hi, lo + r * (hi - lo)):
            if a < p < b:
                points.add(p)
    grid = sorted(points)
    total = 0.0
    for left, right in zip(grid, grid[1:]):
        mid = 0.5 * (left + right)
        cost, _, _ = threshold_cut_assignment(
            net, metric, coords, mid, live_edges=live, one_sided=one_sided
        )
        total += cost * (right - left)
    return total


# -- sparsest cut by sweeping --------------------------------------------------


@dataclass(frozen=True)
class SweepResult:
    cut: CutSolution
    threshold: float
    sparsity: float
    guarantee: float  # 2 * avgd * relaxation objective
    used_brute_cost: bool


def sweep_sparsest_cut(
    net: PolymatroidalNetwork,
    metric: FractionalCutMetric,
    demands: DemandSet,
    embedding: LineEmbedding,
    max_brute_edges: int = MAX_BRUTE_CUT_EDGES,
) -> SweepResult:
    """Best threshold cut of the embedding by sparsity.

    All n-1 distinct threshold cuts are evaluated; each cut's cost is the
    true nu when the crossing set is small enough to brute-force, otherwise
    the explicit-assignment upper bound.  The winner's sparsity is at most
    2 * avgd * (relaxation objective).
    """
    if net.directed:
        raise InputError("the sweep rounds undirected instances")
    values = sorted({embedding.coords[v] for v in net.nodes})
    best = None
    for lo, hi in zip(values, values[1:]):
        theta = 0.5 * (lo + hi)
        bound_cost, assignment, crossing = threshold_cut_assignment(
            net, metric, embedding.coords, theta
        )
        if not crossing:
            continue
        separated, dem = separated_pairs(net, crossing, demands)
        if dem <= 0.0:
            continue
        used_brute = len(crossing) <= max_brute_edges
        if used_brute:
            cost, assignment = cut_cost(net, crossing, max_edges=max_brute_edges)
        else:
            cost = bound_cost
        spars = cost / dem
        if best is None or spars < best[0]:
            best = (
                spars,
                CutSolution(
                    edges=net.sorted_edge_ids(crossing),
                    assignment=assignment,
                    cost=cost,
                    separated=separated,
                    demand_separated=dem,
                ),
                theta,
                used_brute,
            )
    if best is None:
        raise SparsityUndefinedError(
            "no threshold cut separates positive demand"
        )
    spars, cut, theta, used_brute = best
    guarantee = 2.0 * embedding.avg_distortion * metric.objective
    return SweepResult(
        cut=cut, threshold=theta, sparsity=spars,
        guarantee=guarantee, used_brute_cost=used_brute,
    )


# -- region growing ------------------------------------------------------------


@dataclass(frozen=True)
class BallGrowth:
    """One grown ball together with everything needed to re-check the bound."""

    source: NodeId
    radius: float
    ball: tuple[NodeId, ...]
    boundary: tuple[EdgeId, ...]
    assignment: dict[EdgeId, NodeId]
    bound_cost: float  # explicit-assignment cost of the boundary
    ball_volume: float
    total_volume: float
    k_eff: int
    delta: float
    shell_index: int

    @property
    def bound_rhs(self) -> float:
        return (
            REGION_GROWING_CONSTANT
            * math.log2(self.k_eff)
            / self.delta
            * (self.ball_volume + self.total_volume / self.k_eff)
        )


def _node_volume(
    net: PolymatroidalNetwork,
    metric: FractionalCutMetric,
    v: NodeId,
    live_edges: set,
) -> float:
    """Extension value of v's split vector restricted to live edges."""
    from .submodular import lovasz_extension

    total = 0.0
    for side in net.sides():
        slots = net.slots(v, side)
        vec = [
            metric.split(eid, v) if eid in live_edges else 0.0
            for eid in slots
        ]
        if vec:
            cap = max(1.0, max(vec))
            total += cap * lovasz_extension(
                net.oracle(v, side), [x / cap for x in vec]
            )
    return total


def region_grow_ball(
    net: PolymatroidalNetwork,
    metric: FractionalCutMetric,
    source: NodeId,
    delta: float,
    k_eff: int,
    live_nodes: Iterable[NodeId] | None = None,
    live_edges: Iterable[EdgeId] | None = None,
) -> BallGrowth:
    """Grow a ball whose boundary cost is covered by its fractional volume.

    Every live edge must satisfy ell(e) < delta / (2 log2 k_eff).  The
    returned radius r < delta obeys

        bound_cost <= 28 * log2(k_eff) / delta * (vol(ball) + vol(V)/k_eff)

    where volumes are extension values of split vectors restricted to the
    live subgraph.  Search: find the first shell j whose alpha values grow
    slowly (alpha_{j+1} <= 8 alpha_{j-2}, negative indices clamped), then
    scan the piecewise-constant radius candidates inside that shell.
    """
    if k_eff < 2:
        raise InputError("region growing requires k_eff >= 2")
    logk = math.log2(k_eff)
    width = delta / (2.0 * logk)
    nodes = set(net.nodes) if live_nodes is None else set(live_nodes)
    if source not in nodes:
        raise InputError(f"source {source!r} not in the live node set")
    edges = (
        {e.id for e in net.edges if e.u in nodes and e.v in nodes}
        if live_edges is None
        else set(live_edges)
    )
    for eid in edges:
        if metric.lengths[eid] >= width:
            raise InputError(
                f"edge {eid!r} has length {metric.lengths[eid]}, violating "
                f"the region-growing precondition < {width}"
            )

    arcs = []
    for eid in edges:
        e = net.edge(eid)
        arcs.append((e.u, e.v, metric.lengths[eid]))
        arcs.append((e.v, e.u, metric.lengths[eid]))
    dist = shortest_distances(arcs, source)
    coords = {v: dist.get(v, math.inf) for v in nodes}

    vols = {v: _node_volume(net, metric, v, edges) for v in nodes}
    total_volume = sum(vols.values())
    alpha0 = total_volume / k_eff

    def ball_at(r: float) -> list[NodeId]:
        return [v for v in nodes if coords[v] <= r]

    def vol_ball(r: float) -> float:
        return sum(vols[v] for v in nodes if coords[v] <= r)

    def alpha(i: int) -> float:
        if i <= 0:
            return alpha0
        return alpha0 + vol_ball(i * width)

    finite_coords = {v: c for v, c in coords.items() if math.isfinite(c)}

    j = 1
    while (j * width) < delta:
        if alpha(j + 1) <= 8.0 * alpha(max(j - 2, 0)) + 1e-15:
            r_lo, r_hi = (j - 1) * width, j * width
            points = {r_lo, r_hi}
            for v, c in finite_coords.items():
                if r_lo < c < r_hi:
                    points.add(c)
            for eid in edges:
                e = net.edge(eid)
                gu, gv = coords[e.u], coords[e.v]
                if not (math.isfinite(gu) and math.isfinite(gv)):
                    continue
                lo, hi = min(gu, gv), max(gu, gv)
                lo_node = e.u if gu <= gv else e.v
                split = lo + _split_fraction(metric, eid, lo_node) * (hi - lo)
                if r_lo < split < r_hi:
                    points.add(split)
            grid = sorted(points)
            for left, right in zip(grid, grid[1:]):
                r = 0.5 * (left + right)
                if r >= delta:
                    continue
                cost, assignment, crossing = threshold_cut_assignment(
                    net, metric, coords, r, live_edges=edges
                )
                vb = vol_ball(r)
                rhs = (
                    REGION_GROWING_CONSTANT * logk / delta
                    * (vb + alpha0)
                )
                if cost <= rhs + 1e-9:
                    return BallGrowth(
                        source=source,
                        radius=r,
                        ball=tuple(sorted(ball_at(r), key=str)),
                        boundary=net.sorted_edge_ids(crossing),
                        assignment=assignment,
                        bound_cost=cost,
                        ball_volume=vb,
                        total_volume=total_volume,
                        k_eff=k_eff,
                        delta=delta,
                        shell_index=j,
                    )
        j += 1
    raise InternalError(
        "region growing found no admissible radius; the shell argument "
        "guarantees one exists, so this indicates a bug"
    )


# -- multicut rounding ---------------------------------------------------------


@dataclass(frozen=True)
class MulticutRounding:
    cut: CutSolution
    threshold_edges: tuple[EdgeId, ...]  # long edges removed up front
    balls: tuple[BallGrowth, ...]
    k_eff: int
    guarantee: float  # (8 + 4a) log2(k_eff) * relaxation objective


def round_multicut(
    net: PolymatroidalNetwork,
    metric: FractionalCutMetric,
    demands: DemandSet,
    max_brute_edges: int = MAX_BRUTE_CUT_EDGES,
) -> MulticutRounding:
    """Round a fractional multicut to an integral one.

    Long edges (length >= 1/(4 log2 k_eff)) are cut outright; the rest of
    the cut is assembled by growing balls of radius < 1/2 around terminals
    of still-connected pairs, deleting each ball before the next iteration.
    The output always passes is_multicut.
    """
    if net.directed:
        raise InputError("this rounding applies to undirected instances")
    k = demands.k
    k_eff = effective_k(k)
    logk = math.log2(k_eff)
    guarantee = MULTICUT_GUARANTEE * logk * metric.objective
    if k == 0:
        empty = CutSolution(edges=(), assignment={}, cost=0.0)
        return MulticutRounding(empty, (), (), k_eff, guarantee)

    threshold = 1.0 / (4.0 * logk)
    f0 = [e.id for e in net.edges if metric.lengths[e.id] >= threshold]
    cut_set = set(f0)
    all_edge_ids = {e.id for e in net.edges}
    live_nodes = set(net.nodes)
    live_edges = all_edge_ids - cut_set
    balls = []
    while True:
        target = None
        for s, t, _ in demands.pairs:
            if s in live_nodes and t in live_nodes:
                reach = reachable_from(
                    net, s, frozenset(all_edge_ids - live_edges),
                    live_nodes=live_nodes,
                )
                if t in reach:
                    target = (s, t)
                    break
        if target is None:
            break
        growth = region_grow_ball(
            net, metric, target[0], delta=0.5, k_eff=k_eff,
            live_nodes=live_nodes, live_edges=live_edges,
        )
        balls.append(growth)
        cut_set.update(growth.boundary)
        ball_nodes = set(growth.ball)
        live_nodes -= ball_nodes
        live_edges = {
            eid for eid in live_edges
            if net.edge(eid).u in live_nodes and net.edge(eid).v in live_nodes
        } - set(growth.boundary)

    eids = net.sorted_edge_ids(cut_set)
    if len(eids) <= max_brute_edges:
        cost, assignment = cut_cost(net, eids, max_edges=max_brute_edges)
    else:
        assignment = _fallback_assignment(net, metric, eids, threshold, balls)
        cost = assignment_cost(net, assignment)
    separated, dem = separated_pairs(net, eids, demands)
    cut = CutSolution(
        edges=eids, assignment=assignment, cost=cost,
        separated=separated, demand_separated=dem,
    )
    if not is_multicut(net, eids, demands):
        raise InternalError("rounded multicut fails to separate some pair")
    return MulticutRounding(cut, tuple(net.sorted_edge_ids(f0)), tuple(balls), k_eff, guarantee)


def _fallback_assignment(net, metric, eids, threshold, balls):
    """Valid assignment without brute force: ball assignments first, then
    long edges to the endpoint carrying at least half the length."""
    assignment: dict[EdgeId, NodeId] = {}
    for growth in balls:
        for eid, node in growth.assignment.items():
            if eid in eids:
                assignment.setdefault(eid, node)
    for eid in eids:
        if eid not in assignment:
            e = net.edge(eid)
            assignment[eid] = (
                e.u if metric.split(eid, e.u) >= metric.split(eid, e.v) else e.v
            )
    return assignment


# -- bipartition conversion ------------------------------------------------------


@dataclass(frozen=True)
class BipartitionResult:
    side: tuple[NodeId, ...]
    cut: CutSolution
    component_count: int
    crossing_demand: float


MAX_EXHAUSTIVE_COMPONENTS = 20


def to_bipartition_cut(
    net: PolymatroidalNetwork,
    cut_edges: Iterable[EdgeId],
    demands: DemandSet,
    max_brute_edges: int = MAX_BRUTE_CUT_EDGES,
) -> BipartitionResult:
    """Convert an edge cut into a vertex bipartition cut delta(S) <= F.

    Components of the cut graph are grouped to put at least half the
    separated demand across the bipartition (exhaustive maximum cut up to 20
    components, greedy local search beyond), so the bipartition's sparsity
    is at most twice the input cut's.
    """
    if net.directed:
        raise InputError("bipartition cuts apply to undirected instances")
    eids = net.sorted_edge_ids(cut_edges)
    separated, dem = separated_pairs(net, eids, demands)
    if dem <= 0.0:
        raise InputError("input cut separates zero demand")

    removed = frozenset(eids)
    comp_of: dict[NodeId, int] = {}
    comps: list[set[NodeId]] = []
    for v in net.nodes:
        if v in comp_of:
            continue
        comp = reachable_from(net, v, removed)
        idx = len(comps)
        comps.append(comp)
        for w in comp:
            comp_of[w] = idx
    h = len(comps)

    weights: dict[tuple[int, int], float] = {}
    separated_set = set(separated)
    for s, t, d, idx, direction in demands.ordered_units():
        if (idx, direction) not in separated_set:
            continue
        a, b = comp_of[s], comp_of[t]
        key = (min(a, b), max(a, b))
        weights[key] = weights.get(key, 0.0) + d

    if h <= MAX_EXHAUSTIVE_COMPONENTS:
        side_mask = _exhaustive_max_cut(h, weights)
    else:
        side_mask = _local_search_max_cut(h, weights)

    crossing = sum(
        w for (a, b), w in weights.items()
        if (side_mask >> a & 1) != (side_mask >> b & 1)
    )
    side_nodes = set()
    for idx in range(h):
        if side_mask >> idx & 1:
            side_nodes |= comps[idx]
    boundary = [
        e.id for e in net.edges if (e.u in side_nodes) != (e.v in side_nodes)
    ]
    b_ids = net.sorted_edge_ids(boundary)
    cost, assignment = cut_cost(net, b_ids, max_edges=max_brute_edges)
    sep_b, dem_b = separated_pairs(net, b_ids, demands)
    return BipartitionResult(
        side=tuple(sorted(side_nodes, key=str)),
        cut=CutSolution(
            edges=b_ids, assignment=assignment, cost=cost,
            separated=sep_b, demand_separated=dem_b,
        ),
        component_count=h,
        crossing_demand=crossing,
    )


def _exhaustive_max_cut(h: int, weights: dict[tuple[int, int], float]) -> int:
    """Maximum-weight bipartition over component masks, vectorized.

    Component 0 is pinned outside the chosen side, halving the enumeration;
    ties resolve to the numerically smallest mask.
    """
    if h == 1:
        return 0
    n_masks = 1 << (h - 1)
    totals = np.zeros(n_masks)
    masks = np.arange(n_masks, dtype=np.int64)
    for (a, b), w in weights.items():
        bit_a = np.zeros(n_masks, dtype=bool) if a == 0 else (masks >> (a - 1) & 1).astype(bool)
        bit_b = np.zeros(n_masks, dtype=bool) if b == 0 else (masks >> (b - 1) & 1).astype(bool)
        totals[bit_a != bit_b] += w
    best = int(np.argmax(totals))  # first occurrence wins: smallest mask
    return best << 1


def _local_search_max_cut(h: int, weights: dict[tuple[int, int], float]) -> int:
    """Deterministic local search; at a local optimum every component has at
    least half its incident weight crossing, so the cut weight is at least
    half the total."""
    incident: dict[int, list[tuple[int, float]]] = {i: [] for i in range(h)}
    for (a, b), w in weights.items():
        incident[a].append((b, w))
        incident[b].append((a, w))
    side = [i % 2 for i in range(h)]
    improved = True
    while improved:
        improved = False
        for i in range(h):
            cross = sum(w for j, w in incident[i] if side[j] != side[i])
            stay = sum(w for j, w in incident[i] if side[j] == side[i])
            if stay > cross:
                side[i] ^= 1
                improved = True
    mask = 0
    for i in range(h):
        if side[i]:
            mask |= 1 << i
    return mask
