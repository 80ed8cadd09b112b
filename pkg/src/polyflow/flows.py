"""Maximum throughput and maximum concurrent multicommodity flow.

Edge-based LP formulations with full enumeration of the per-node subset
capacity constraints (2^deg - 1 rows per node side), per-commodity
conservation and exact dual-ready solves.  Undirected edges are modeled as
two opposite arcs per commodity whose summed usage occupies the single
undirected slot.  Symmetric demands become 2k ordered commodities tied by
rate-equality rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import CapabilityError, InputError, PolyflowError
from .lp import LinearProgram, solve_lp
from .network import DemandSet, EdgeId, NodeId, PolymatroidalNetwork

#: Maximum node-side degree for which subset constraints are enumerated.
DEFAULT_DEGREE_BOUND = 12


@dataclass(frozen=True)
class FlowSolution:
    """A solved multicommodity flow.

    ``directional_flows[c]`` maps (edge id, head node) to the amount of
    commodity c entering that head over the edge; ``edge_flows[c]`` is the
    per-edge total usage (both directions combined for undirected edges).
    """

    kind: str  # "throughput" | "concurrent"
    commodities: tuple[tuple[NodeId, NodeId, float, int, int], ...]
    rates: tuple[float, ...]
    objective: float
    edge_flows: tuple[dict[EdgeId, float], ...]
    directional_flows: tuple[dict[tuple[EdgeId, NodeId], float], ...]
    lam: float | None = None
    unbounded: bool = False

    def total_edge_usage(self) -> dict[EdgeId, float]:
        out: dict[EdgeId, float] = {}
        for flows in self.edge_flows:
            for e, f in flows.items():
                out[e] = out.get(e, 0.0) + f
        return out

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "objective": self.objective,
            "lambda": self.lam,
            "unbounded": self.unbounded,
            "commodities": [
                {
                    "source": str(s),
                    "target": str(t),
                    "demand": d,
                    "pair": i,
                    "direction": "reverse" if r else "forward",
                    "rate": rate,
                    "edge_flows": {str(e): f for e, f in flows.items()},
                }
                for (s, t, d, i, r), rate, flows in zip(
                    self.commodities, self.rates, self.edge_flows
                )
            ],
        }


def _check_degree_bound(net: PolymatroidalNetwork, degree_bound: int):
    for v in net.nodes:
        for side in net.sides():
            deg = len(net.slots(v, side))
            if deg > degree_bound:
                raise CapabilityError(
                    f"node {v!r} side {side!r} has degree {deg}; subset "
                    f"enumeration bound is {degree_bound}"
                )


class _FlowModel:
    """Shared LP assembly for both flow objectives."""

    def __init__(self, net: PolymatroidalNetwork, demands: DemandSet,
                 degree_bound: int):
        _check_degree_bound(net, degree_bound)
        self.net = net
        self.units = demands.ordered_units()
        self.lp = LinearProgram(sense="max")
        # arc variables: per commodity, per (edge, head) direction
        self.arc_vars: list[dict[tuple[EdgeId, NodeId], int]] = []
        for _ in self.units:
            per: dict[tuple[EdgeId, NodeId], int] = {}
            for e in net.edges:
                per[(e.id, e.v)] = self.lp.add_variable(lo=0.0)
                if not net.directed:
                    per[(e.id, e.u)] = self.lp.add_variable(lo=0.0)
            self.arc_vars.append(per)

    def edge_usage_columns(self, eid: EdgeId) -> dict[int, float]:
        cols: dict[int, float] = {}
        for per in self.arc_vars:
            for key, var in per.items():
                if key[0] == eid:
                    cols[var] = cols.get(var, 0.0) + 1.0
        return cols

    def add_capacity_rows(self):
        net = self.net
        for v in net.nodes:
            for side in net.sides():
                slots = net.slots(v, side)
                oracle = net.oracle(v, side)
                deg = len(slots)
                for mask in range(1, 1 << deg):
                    coeffs: dict[int, float] = {}
                    for i, eid in enumerate(slots):
                        if mask >> i & 1:
                            for var, c in self.edge_usage_columns(eid).items():
                                coeffs[var] = coeffs.get(var, 0.0) + c
                    self.lp.add_constraint(
                        coeffs, "<=", oracle.value_of_mask(mask)
                    )

    def add_conservation_rows(self, source_rhs: list[dict[int, float]]):
        """Conservation at non-terminals; at each source the net outflow
        equals the row described by ``source_rhs[c]`` (vars moved left)."""
        net = self.net
        for c, (s, t, _, _, _) in enumerate(self.units):
            per = self.arc_vars[c]
            balance: dict[NodeId, dict[int, float]] = {v: {} for v in net.nodes}

            def add(v, var, coef):
                row = balance[v]
                row[var] = row.get(var, 0.0) + coef

            for e in net.edges:
                add(e.v, per[(e.id, e.v)], 1.0)   # into head
                add(e.u, per[(e.id, e.v)], -1.0)  # out of tail
                if not net.directed:
                    add(e.u, per[(e.id, e.u)], 1.0)
                    add(e.v, per[(e.id, e.u)], -1.0)
            for v in net.nodes:
                if v == t:
                    continue  # implied by the remaining balances
                if v == s:
                    # net outflow of the source equals the rate expression:
                    # (outflow - inflow) - rate = 0
                    coeffs = {var: -c_ for var, c_ in balance[v].items()}
                    for var, c_ in source_rhs[c].items():
                        coeffs[var] = coeffs.get(var, 0.0) - c_
                    self.lp.add_constraint(coeffs, "=", 0.0)
                else:
                    self.lp.add_constraint(balance[v], "=", 0.0)

    def extract(self, x, rates, kind, objective, lam=None) -> FlowSolution:
        net = self.net
        directional = []
        per_edge = []
        for per in self.arc_vars:
            dirs = {}
            totals: dict[EdgeId, float] = {}
            for (eid, head), var in per.items():
                amt = max(0.0, float(x[var]))
                dirs[(eid, head)] = amt
                totals[eid] = totals.get(eid, 0.0) + amt
            directional.append(dirs)
            per_edge.append(totals)
        return FlowSolution(
            kind=kind,
            commodities=tuple(self.units),
            rates=tuple(rates),
            objective=objective,
            edge_flows=tuple(per_edge),
            directional_flows=tuple(directional),
            lam=lam,
        )


def max_throughput_flow(
    net: PolymatroidalNetwork,
    demands: DemandSet,
    degree_bound: int = DEFAULT_DEGREE_BOUND,
) -> FlowSolution:
    """Maximize the total rate over all commodities.

    Under symmetric demands the 2k ordered commodities are tied pairwise by
    rate equality and the objective counts both directions.
    """
    if demands.k == 0:
        return FlowSolution("throughput", (), (), 0.0, (), ())
    model = _FlowModel(net, demands, degree_bound)
    lp = model.lp
    rate_vars = [lp.add_variable(lo=0.0, obj=1.0) for _ in model.units]
    model.add_conservation_rows([{rv: 1.0} for rv in rate_vars])
    model.add_capacity_rows()
    if demands.symmetric:
        by_pair: dict[int, list[int]] = {}
        for c, (_, _, _, idx, _) in enumerate(model.units):
            by_pair.setdefault(idx, []).append(rate_vars[c])
        for pair_vars in by_pair.values():
            fwd, rev = pair_vars
            lp.add_constraint({fwd: 1.0, rev: -1.0}, "=", 0.0)
    sol = solve_lp(lp)
    if sol.status != "optimal":
        raise PolyflowError(f"throughput LP came back {sol.status}")
    rates = [float(sol.x[rv]) for rv in rate_vars]
    return model.extract(sol.x, rates, "throughput", sol.objective)


def max_concurrent_flow(
    net: PolymatroidalNetwork,
    demands: DemandSet,
    degree_bound: int = DEFAULT_DEGREE_BOUND,
) -> FlowSolution:
    """Maximize lambda such that every commodity routes lambda * D_i."""
    units = demands.ordered_units()
    if not units or all(d == 0.0 for _, _, d, _, _ in units):
        return FlowSolution(
            "concurrent", tuple(units), tuple(0.0 for _ in units),
            math.inf, tuple({} for _ in units), tuple({} for _ in units),
            lam=math.inf, unbounded=True,
        )
    model = _FlowModel(net, demands, degree_bound)
    lp = model.lp
    lam_var = lp.add_variable(lo=0.0, obj=1.0)
    model.add_conservation_rows(
        [{lam_var: d} for _, _, d, _, _ in model.units]
    )
    model.add_capacity_rows()
    sol = solve_lp(lp)
    if sol.status != "optimal":
        raise PolyflowError(f"concurrent LP came back {sol.status}")
    lam = float(sol.x[lam_var])
    rates = [lam * d for _, _, d, _, _ in model.units]
    return model.extract(sol.x, rates, "concurrent", sol.objective, lam=lam)


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    worst_violation: float
    detail: str


def check_flow_feasibility(
    net: PolymatroidalNetwork,
    flow: FlowSolution,
    tol: float = 1e-7,
) -> FeasibilityReport:
    """Verify non-negativity, conservation and every subset constraint."""
    worst = 0.0
    detail = "feasible"

    def bump(v, what):
        nonlocal worst, detail
        if v > worst:
            worst = v
            detail = what

    for c, dirs in enumerate(flow.directional_flows):
        for key, amt in dirs.items():
            bump(-amt, f"negative flow on {key} (commodity {c})")
    for c, (s, t, _, _, _) in enumerate(flow.commodities):
        balance: dict[NodeId, float] = {v: 0.0 for v in net.nodes}
        for (eid, head), amt in flow.directional_flows[c].items():
            e = net.edge(eid)
            tail = e.u if head == e.v else e.v
            balance[head] += amt
            balance[tail] -= amt
        for v in net.nodes:
            if v in (s, t):
                continue
            bump(abs(balance[v]), f"conservation at {v!r} (commodity {c})")
        rate = flow.rates[c] if c < len(flow.rates) else 0.0
        bump(abs(-balance[s] - rate), f"rate balance at source {s!r}")
    usage = flow.total_edge_usage()
    for v in net.nodes:
        for side in net.sides():
            slots = net.slots(v, side)
            oracle = net.oracle(v, side)
            for mask in range(1, 1 << len(slots)):
                lhs = sum(
                    usage.get(eid, 0.0)
                    for i, eid in enumerate(slots)
                    if mask >> i & 1
                )
                bump(
                    lhs - oracle.value_of_mask(mask),
                    f"capacity at node {v!r} side {side!r} mask {mask:b}",
                )
    return FeasibilityReport(worst <= tol, worst, detail)


@dataclass(frozen=True)
class PathDecomposition:
    """Per-commodity path flows; cycles are peeled off and reported."""

    paths: tuple[tuple[tuple[tuple[NodeId, ...], tuple[EdgeId, ...], float], ...], ...]
    cycles: tuple[tuple[int, tuple[EdgeId, ...], float], ...]

    def commodity_total(self, c: int) -> float:
        return sum(amount for _, _, amount in self.paths[c])


def decompose_to_paths(
    net: PolymatroidalNetwork,
    flow: FlowSolution,
    tol: float = 1e-9,
) -> PathDecomposition:
    """Standard flow decomposition on the directional support.

    Produces at most |arcs| paths per commodity; leftover circulation is
    extracted as cycles and reported, not silently dropped.
    """
    all_paths = []
    cycles = []
    for c, (s, t, _, _, _) in enumerate(flow.commodities):
        residual = {
            key: amt for key, amt in flow.directional_flows[c].items() if amt > tol
        }

        def out_arcs(u):
            arcs = []
            for (eid, head), amt in residual.items():
                if amt <= tol:
                    continue
                e = net.edge(eid)
                tail = e.u if head == e.v else e.v
                if tail == u:
                    arcs.append((net.edge_index(eid), eid, head))
            arcs.sort()
            return arcs

        paths = []
        while True:
            # deterministic DFS for an s->t path in the residual support
            stack = [(s, [], [])]
            found = None
            visited = set()
            while stack:
                u, nodes_so_far, edges_so_far = stack.pop()
                if u in visited:
                    continue
                visited.add(u)
                if u == t:
                    found = (nodes_so_far + [t], edges_so_far)
                    break
                for _, eid, head in reversed(out_arcs(u)):
                    stack.append((head, nodes_so_far + [u], edges_so_far + [(eid, head)]))
            if found is None:
                break
            nodes, arc_keys = found
            amount = min(residual[k] for k in arc_keys)
            for k in arc_keys:
                residual[k] -= amount
                if residual[k] <= tol:
                    residual.pop(k)
            paths.append(
                (tuple(nodes), tuple(eid for eid, _ in arc_keys), amount)
            )
        # leftover circulation: extract cycles deterministically
        while residual:
            start_key = min(residual, key=lambda k: net.edge_index(k[0]))
            e = net.edge(start_key[0])
            u0 = e.u if start_key[1] == e.v else e.v
            path_nodes = [u0]
            path_keys = []
            seen_at = {u0: 0}
            u = u0
            while True:
                arcs = out_arcs(u)
                if not arcs:
                    # dead end cannot happen in a circulation; drop the stray arc
                    residual.pop(start_key, None)
                    path_keys = []
                    break
                _, eid, head = arcs[0]
                path_keys.append((eid, head))
                u = head
                if u in seen_at:
                    cut_from = seen_at[u]
                    cyc_keys = path_keys[cut_from:]
                    amount = min(residual[k] for k in cyc_keys)
                    for k in cyc_keys:
                        residual[k] -= amount
                        if residual[k] <= tol:
                            residual.pop(k)
                    cycles.append(
                        (c, tuple(eid for eid, _ in cyc_keys), amount)
                    )
                    break
                seen_at[u] = len(path_nodes)
                path_nodes.append(u)
        all_paths.append(tuple(paths))
    return PathDecomposition(tuple(all_paths), tuple(cycles))
