"""Fractional cut relaxations with Lovász-extension objectives.

Both relaxations carry, per edge uv, a length ell(e) split between the
endpoints as ell(e,u) + ell(e,v) = ell(e).  The convex per-node objective
sum_v rho_hat(d_v) is linearized through subset variables d_v(S) >= 0 with
ell(e,v) = sum over S containing e of d_v(S); the normalization row
sum_S d_v(S) = 1 is dropped, which is value-preserving for polymatroids.
Distance constraints use one node-potential vector per commodity instead of
exponentially many path rows.

The multicut relaxation requires dist(s_i, t_i) >= 1 per pair (the two
directions jointly reaching 1 under symmetric demands).  The sparsest-cut
relaxation normalizes the demand-weighted distance sum to 1, which by the
homogeneity of the extension loses nothing.  Both are exact LP duals of the
corresponding flow problems, with one caveat: under symmetric demands the
bidirectional throughput objective counts each pair's common rate twice,
so there the multicut relaxation certifies exactly half the flow value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import CapabilityError, InputError, InternalError, PolyflowError
from .flows import DEFAULT_DEGREE_BOUND, _check_degree_bound, max_concurrent_flow, max_throughput_flow
from .lp import LinearProgram, solve_lp
from .network import (
    DemandSet,
    EdgeId,
    NodeId,
    PolymatroidalNetwork,
    shortest_distances,
)
from .submodular import lovasz_extension


@dataclass(frozen=True)
class FractionalCutMetric:
    """Edge lengths with endpoint splits and the Lovász-extension objective."""

    lengths: dict[EdgeId, float]
    splits: dict[tuple[EdgeId, NodeId], float]
    objective: float
    problem: str  # "multicut" | "sparsest"

    def split(self, eid: EdgeId, node: NodeId) -> float:
        return self.splits.get((eid, node), 0.0)

    def node_vector(self, net: PolymatroidalNetwork, v: NodeId, side: str):
        return [self.split(eid, v) for eid in net.slots(v, side)]

    def arcs(self, net: PolymatroidalNetwork):
        for e in net.edges:
            yield (e.u, e.v, self.lengths[e.id])
            if not net.directed:
                yield (e.v, e.u, self.lengths[e.id])

    def distances_from(self, net: PolymatroidalNetwork, source: NodeId):
        return shortest_distances(self.arcs(net), source)

    def distance(self, net: PolymatroidalNetwork, u: NodeId, v: NodeId) -> float:
        return self.distances_from(net, u).get(v, math.inf)

    def extension_objective(self, net: PolymatroidalNetwork) -> float:
        """Recompute the objective via the Lovász extension of the splits."""
        total = 0.0
        for v in net.nodes:
            for side in net.sides():
                vec = self.node_vector(net, v, side)
                if vec:
                    cap = max(1.0, max(vec))
                    oracle = net.oracle(v, side)
                    # splits can exceed 1 in the sparsest relaxation; use
                    # homogeneity to evaluate the extension on [0,1]^n
                    total += cap * lovasz_extension(
                        oracle, [x / cap for x in vec]
                    )
        return total

    def scaled(self, factor: float) -> "FractionalCutMetric":
        return FractionalCutMetric(
            lengths={e: l * factor for e, l in self.lengths.items()},
            splits={k: s * factor for k, s in self.splits.items()},
            objective=self.objective * factor,
            problem=self.problem,
        )

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "objective": self.objective,
            "lengths": {str(e): l for e, l in self.lengths.items()},
            "splits": [
                {"edge": str(e), "node": str(v), "value": s}
                for (e, v), s in sorted(self.splits.items(), key=lambda kv: str(kv[0]))
            ],
        }


class _RelaxationModel:
    """Shared LP assembly for the two cut relaxations."""

    def __init__(self, net: PolymatroidalNetwork, demands: DemandSet,
                 degree_bound: int, cap_lengths: bool):
        _check_degree_bound(net, degree_bound)
        self.net = net
        self.demands = demands
        self.lp = LinearProgram(sense="min")
        hi = 1.0 if cap_lengths else math.inf

        # subset variables d_v(S), objective rho_v(S)
        self.subset_vars: dict[tuple[NodeId, str], list[int]] = {}
        for v in net.nodes:
            for side in net.sides():
                slots = net.slots(v, side)
                oracle = net.oracle(v, side)
                per = [-1]  # index 0 (empty set) unused
                for mask in range(1, 1 << len(slots)):
                    per.append(
                        self.lp.add_variable(lo=0.0, obj=oracle.value_of_mask(mask))
                    )
                self.subset_vars[(v, side)] = per

        # split and length variables with their defining equalities
        self.split_vars: dict[tuple[EdgeId, NodeId], int] = {}
        self.length_vars: dict[EdgeId, int] = {}
        for e in net.edges:
            su = self.lp.add_variable(lo=0.0, hi=hi)
            sv = self.lp.add_variable(lo=0.0, hi=hi)
            le = self.lp.add_variable(lo=0.0, hi=hi)
            self.split_vars[(e.id, e.u)] = su
            self.split_vars[(e.id, e.v)] = sv
            self.length_vars[e.id] = le
            self.lp.add_constraint({su: 1.0, sv: 1.0, le: -1.0}, "=", 0.0)
        for e in net.edges:
            if net.directed:
                ends = ((e.u, "out"), (e.v, "in"))
            else:
                ends = ((e.u, "all"), (e.v, "all"))
            for node, side in ends:
                slots = net.slots(node, side)
                pos = slots.index(e.id)
                coeffs = {
                    self.subset_vars[(node, side)][mask]: 1.0
                    for mask in range(1, 1 << len(slots))
                    if mask >> pos & 1
                }
                coeffs[self.split_vars[(e.id, node)]] = -1.0
                self.lp.add_constraint(coeffs, "=", 0.0)

    def potential_vector(self) -> dict[NodeId, int]:
        phi = {
            v: self.lp.add_variable(lo=-math.inf, hi=math.inf)
            for v in self.net.nodes
        }
        for e in self.net.edges:
            arcs = [(e.u, e.v)]
            if not self.net.directed:
                arcs.append((e.v, e.u))
            for a, b in arcs:
                self.lp.add_constraint(
                    {phi[b]: 1.0, phi[a]: -1.0, self.length_vars[e.id]: -1.0},
                    "<=",
                    0.0,
                )
        return phi

    def extract(self, sol, problem: str) -> FractionalCutMetric:
        splits = {}
        for (eid, node), var in self.split_vars.items():
            splits[(eid, node)] = max(0.0, float(sol.x[var]))
        lengths = {}
        for e in self.net.edges:
            lengths[e.id] = splits[(e.id, e.u)] + splits[(e.id, e.v)]
        return FractionalCutMetric(
            lengths=lengths, splits=splits,
            objective=float(sol.objective), problem=problem,
        )


def solve_multicut_relaxation(
    net: PolymatroidalNetwork,
    demands: DemandSet,
    degree_bound: int = DEFAULT_DEGREE_BOUND,
) -> FractionalCutMetric:
    """Fractional multicut: minimize the extension objective subject to
    dist(s_i, t_i) >= 1 per pair (both directions jointly under symmetric
    demands).  Lengths are capped at 1, which never changes the value."""
    if demands.k == 0:
        return FractionalCutMetric(
            lengths={e.id: 0.0 for e in net.edges},
            splits={},
            objective=0.0,
            problem="multicut",
        )
    model = _RelaxationModel(net, demands, degree_bound, cap_lengths=True)
    if demands.symmetric:
        for s, t, _ in demands.pairs:
            phi_f = model.potential_vector()
            phi_r = model.potential_vector()
            model.lp.add_constraint(
                {phi_f[t]: 1.0, phi_f[s]: -1.0, phi_r[s]: 1.0, phi_r[t]: -1.0},
                ">=",
                1.0,
            )
    else:
        for s, t, _ in demands.pairs:
            phi = model.potential_vector()
            model.lp.add_constraint({phi[t]: 1.0, phi[s]: -1.0}, ">=", 1.0)
    sol = solve_lp(model.lp)
    if sol.status != "optimal":
        raise PolyflowError(f"multicut relaxation LP came back {sol.status}")
    return model.extract(sol, "multicut")


def solve_sparsest_relaxation(
    net: PolymatroidalNetwork,
    demands: DemandSet,
    degree_bound: int = DEFAULT_DEGREE_BOUND,
) -> FractionalCutMetric:
    """Fractional sparsest cut: minimize the extension objective subject to
    the demand-weighted distance sum equal to 1 (per separated direction
    under symmetric demands)."""
    units = demands.ordered_units()
    if not units or all(d == 0.0 for _, _, d, _, _ in units):
        raise InputError("sparsest relaxation needs positive total demand")
    model = _RelaxationModel(net, demands, degree_bound, cap_lengths=False)
    norm_row: dict[int, float] = {}
    for s, t, d, _, _ in units:
        if d == 0.0:
            continue
        phi = model.potential_vector()
        norm_row[phi[t]] = norm_row.get(phi[t], 0.0) + d
        norm_row[phi[s]] = norm_row.get(phi[s], 0.0) - d
    model.lp.add_constraint(norm_row, "=", 1.0)
    sol = solve_lp(model.lp)
    if sol.status != "optimal":
        raise PolyflowError(f"sparsest relaxation LP came back {sol.status}")
    metric = model.extract(sol, "sparsest")

    # Rescale so the normalization holds exactly for the *shortest-path*
    # distances of the extracted lengths (homogeneity of the objective).
    weighted = 0.0
    dist_cache: dict[NodeId, dict[NodeId, float]] = {}
    for s, t, d, _, _ in units:
        if d == 0.0:
            continue
        if s not in dist_cache:
            dist_cache[s] = metric.distances_from(net, s)
        dst = dist_cache[s].get(t, math.inf)
        if math.isinf(dst):
            return metric  # a positive-demand pair is disconnected: value 0
        weighted += d * dst
    if weighted <= 0.5:
        raise InternalError(
            f"sparsest relaxation normalization came out at {weighted}"
        )
    return metric.scaled(1.0 / weighted)


@dataclass(frozen=True)
class DualEquivalenceReport:
    """Numerical certificate that the relaxations match their flow duals."""

    throughput: float
    multicut_relaxation: float
    throughput_residual: float
    concurrent: float | None
    sparsest_relaxation: float | None
    concurrent_residual: float | None
    symmetric: bool

    @property
    def max_residual(self) -> float:
        vals = [self.throughput_residual]
        if self.concurrent_residual is not None:
            vals.append(self.concurrent_residual)
        return max(vals)


def verify_dual_equivalence(
    net: PolymatroidalNetwork,
    demands: DemandSet,
    degree_bound: int = DEFAULT_DEGREE_BOUND,
) -> DualEquivalenceReport:
    """Solve both flows and both relaxations, reporting |flow - relaxation|
    scaled by 1 + value.

    Under symmetric demands the throughput pair is compared as
    |throughput - 2 * relaxation|: the bidirectional rate objective counts
    each pair twice while the either-direction multicut constraint does not.
    """
    tput = max_throughput_flow(net, demands, degree_bound)
    mc = solve_multicut_relaxation(net, demands, degree_bound)
    factor = 2.0 if demands.symmetric else 1.0
    t_res = abs(tput.objective - factor * mc.objective) / (
        1.0 + abs(tput.objective)
    )
    conc = sparsest = c_res = None
    if any(d > 0 for _, _, d in demands.pairs):
        flow = max_concurrent_flow(net, demands, degree_bound)
        sp = solve_sparsest_relaxation(net, demands, degree_bound)
        conc = flow.lam
        sparsest = sp.objective
        c_res = abs(flow.lam - sp.objective) / (1.0 + abs(flow.lam))
    return DualEquivalenceReport(
        throughput=tput.objective,
        multicut_relaxation=mc.objective,
        throughput_residual=t_res,
        concurrent=conc,
        sparsest_relaxation=sparsest,
        concurrent_residual=c_res,
        symmetric=demands.symmetric,
    )
