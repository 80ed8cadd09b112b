"""Dense linear programs with dual extraction.

Thin incremental builder plus a solve wrapper around scipy's HiGHS backend.
Duals follow the sensitivity convention: ``duals[i]`` is the derivative of
the stated objective (min or max) with respect to the i-th constraint's
right-hand side.  Instances are single-use; independent solves may run
concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import InputError, SolverError

FEASIBILITY_TOL = 1e-9
OPTIMALITY_TOL = 1e-8


@dataclass
class LinearProgram:
    """An LP under construction: bounded variables plus <=, =, >= rows."""

    sense: str = "min"
    obj: list[float] = field(default_factory=list)
    lower: list[float] = field(default_factory=list)
    upper: list[float] = field(default_factory=list)
    rows: list[dict[int, float]] = field(default_factory=list)
    relations: list[str] = field(default_factory=list)
    rhs: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.sense not in ("min", "max"):
            raise InputError(f"sense must be 'min' or 'max', got {self.sense!r}")

    @property
    def num_variables(self) -> int:
        return len(self.obj)

    @property
    def num_constraints(self) -> int:
        return len(self.rows)

    def add_variable(
        self, lo: float = 0.0, hi: float = math.inf, obj: float = 0.0
    ) -> int:
        if math.isnan(lo) or math.isnan(hi) or not math.isfinite(obj):
            raise InputError("variable bounds must not be NaN; objective finite")
        self.obj.append(float(obj))
        self.lower.append(float(lo))
        self.upper.append(float(hi))
        return len(self.obj) - 1

    def add_constraint(self, coeffs: dict[int, float], rel: str, rhs: float) -> int:
        if rel not in ("<=", "=", ">="):
            raise InputError(f"relation must be <=, = or >=, got {rel!r}")
        if not math.isfinite(rhs):
            raise InputError("constraint rhs must be finite")
        for j, c in coeffs.items():
            if not 0 <= j < len(self.obj):
                raise InputError(f"constraint references unknown variable {j}")
            if not math.isfinite(c):
                raise InputError("constraint coefficients must be finite")
        self.rows.append({j: float(c) for j, c in coeffs.items() if c != 0.0})
        self.relations.append(rel)
        self.rhs.append(float(rhs))
        return len(self.rows) - 1


@dataclass(frozen=True)
class LpSolution:
    """Solver outcome; ``duals[i]`` = d(objective)/d(rhs_i) when optimal."""

    status: str  # optimal | infeasible | unbounded
    x: np.ndarray | None
    duals: np.ndarray | None
    objective: float

    def primal(self, j: int) -> float:
        return float(self.x[j])


def solve_lp(lp: LinearProgram, tol: float = OPTIMALITY_TOL) -> LpSolution:
    """Solve, returning primal values, objective and per-constraint duals."""
    if lp.num_variables == 0:
        raise InputError("linear program has no variables")
    n = lp.num_variables
    sign = 1.0 if lp.sense == "min" else -1.0
    c = sign * np.asarray(lp.obj, dtype=float)

    ub_rows, ub_rhs, ub_src = [], [], []  # (row index, flip) per A_ub row
    eq_rows, eq_rhs, eq_src = [], [], []
    for idx, (row, rel, b) in enumerate(zip(lp.rows, lp.relations, lp.rhs)):
        if rel == "=":
            eq_rows.append(row)
            eq_rhs.append(b)
            eq_src.append(idx)
        elif rel == "<=":
            ub_rows.append(row)
            ub_rhs.append(b)
            ub_src.append((idx, 1.0))
        else:  # >=  ->  negate
            ub_rows.append({j: -v for j, v in row.items()})
            ub_rhs.append(-b)
            ub_src.append((idx, -1.0))

    def rows_to_csr(rows):
        data, ri, ci = [], [], []
        for i, row in enumerate(rows):
            for j, v in row.items():
                ri.append(i)
                ci.append(j)
                data.append(v)
        return sparse.csr_matrix((data, (ri, ci)), shape=(len(rows), n))

    A_ub = rows_to_csr(ub_rows) if ub_rows else None
    A_eq = rows_to_csr(eq_rows) if eq_rows else None
    bounds = [
        (lo if lo != -math.inf else None, hi if hi != math.inf else None)
        for lo, hi in zip(lp.lower, lp.upper)
    ]
    res = linprog(
        c,
        A_ub=A_ub,
        b_ub=np.asarray(ub_rhs) if ub_rows else None,
        A_eq=A_eq,
        b_eq=np.asarray(eq_rhs) if eq_rows else None,
        bounds=bounds,
        method="highs",
    )
    if res.status == 2:
        return LpSolution("infeasible", None, None, math.nan)
    if res.status == 3:
        unbounded_obj = -math.inf if lp.sense == "min" else math.inf
        return LpSolution("unbounded", None, None, unbounded_obj)
    if res.status != 0:
        raise SolverError(f"LP backend failed: {res.message}")

    x = np.asarray(res.x, dtype=float)
    duals = np.zeros(lp.num_constraints)
    if ub_rows:
        for (idx, flip), marg in zip(ub_src, np.asarray(res.ineqlin.marginals)):
            duals[idx] = sign * flip * marg
    if eq_rows:
        for idx, marg in zip(eq_src, np.asarray(res.eqlin.marginals)):
            duals[idx] = sign * marg

    objective = float(sign * res.fun)
    _verify_solution(lp, x, objective, duals, tol)
    return LpSolution("optimal", x, duals, objective)


def _verify_solution(lp, x, objective, duals, tol):
    """Feasibility and strong-duality residual checks on the returned point."""
    scale = 1.0 + abs(objective)
    for lo, hi, xj in zip(lp.lower, lp.upper, x):
        if xj < lo - FEASIBILITY_TOL * scale or xj > hi + FEASIBILITY_TOL * scale:
            raise SolverError(f"variable value {xj} violates bounds [{lo}, {hi}]")
    for row, rel, b in zip(lp.rows, lp.relations, lp.rhs):
        lhs = sum(v * x[j] for j, v in row.items())
        viol = {
            "<=": lhs - b,
            ">=": b - lhs,
            "=": abs(lhs - b),
        }[rel]
        if viol > 1e-6 * scale:
            raise SolverError(f"constraint residual {viol} exceeds tolerance")
    # Duality gap: dual objective = sum_i duals_i * rhs_i + bound terms; HiGHS
    # already certifies optimality, so only a coarse sanity check on the duals
    # is done here (finite, correct sign for inequalities).
    for rel, d in zip(lp.relations, duals):
        if not math.isfinite(d):
            raise SolverError("non-finite dual value")
        if lp.sense == "min" and rel == "<=" and d > tol:
            raise SolverError("sign-inconsistent dual for <= row in min problem")
        if lp.sense == "min" and rel == ">=" and d < -tol:
            raise SolverError("sign-inconsistent dual for >= row in min problem")
