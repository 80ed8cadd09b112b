"""Polymatroid value oracles and their continuous extensions.

A polymatroid here is a normalized (value 0 on the empty set), monotone,
submodular set function over an indexed ground set of edge slots.  Oracles
are immutable after construction and evaluate subsets given either as index
iterables or as bitmasks over the canonical index order.

Construction is deliberately permissive: a ``Modular`` oracle with a negative
weight, say, can be built and then flagged by :func:`check_polymatroid`.
Finiteness of all parameters is the only hard constraint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

from .errors import CapabilityError, InputError

#: Largest ground set for which full 2^n tables are enumerated.
MAX_TABLE_GROUND = 16

#: Largest ground set for which the exhaustive polymatroid check runs.
MAX_CHECK_GROUND = 12


@dataclass(frozen=True)
class GroundSet:
    """An ordered finite ground set; positions 0..size-1 are canonical."""

    labels: tuple[Hashable, ...]

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise InputError(f"ground set labels not distinct: {self.labels!r}")
        object.__setattr__(self, "_pos", {lab: i for i, lab in enumerate(self.labels)})

    @property
    def size(self) -> int:
        return len(self.labels)

    def position(self, label: Hashable) -> int:
        try:
            return self._pos[label]
        except KeyError:
            raise InputError(f"label {label!r} not in ground set") from None

    def mask_of(self, labels: Iterable[Hashable]) -> int:
        mask = 0
        for lab in labels:
            mask |= 1 << self.position(lab)
        return mask


def _check_finite(values, what: str):
    for v in values:
        if not math.isfinite(v):
            raise InputError(f"{what} must be finite, got {v!r}")


class SubmodularOracle:
    """Value-oracle base class; subclasses implement :meth:`value_of_mask`."""

    ground: GroundSet

    def __init__(self, ground: GroundSet):
        self.ground = ground

    @property
    def size(self) -> int:
        return self.ground.size

    def value_of_mask(self, mask: int) -> float:
        raise NotImplementedError

    def value(self, subset: Iterable[int]) -> float:
        """Evaluate on a set of element indices."""
        mask = 0
        n = self.ground.size
        for i in subset:
            if not 0 <= i < n:
                raise InputError(f"element index {i} out of range for ground size {n}")
            mask |= 1 << i
        return self.value_of_mask(mask)

    def table(self) -> list[float]:
        """All 2^n values indexed by subset bitmask."""
        n = self.ground.size
        if n > MAX_TABLE_GROUND:
            raise CapabilityError(
                f"ground size {n} exceeds table limit {MAX_TABLE_GROUND}"
            )
        return [self.value_of_mask(m) for m in range(1 << n)]


class Modular(SubmodularOracle):
    """rho(S) = sum of per-element weights; the edge-capacitated special case."""

    def __init__(self, ground: GroundSet, weights: Sequence[float]):
        super().__init__(ground)
        if len(weights) != ground.size:
            raise InputError("one weight per ground element required")
        _check_finite(weights, "modular weights")
        self.weights = tuple(float(w) for w in weights)

    def value_of_mask(self, mask: int) -> float:
        total = 0.0
        w = self.weights
        while mask:
            i = (mask & -mask).bit_length() - 1
            total += w[i]
            mask &= mask - 1
        return total


class UniformRankCap(SubmodularOracle):
    """rho(S) = cap for every non-empty S, 0 on the empty set.

    This is the joint capacity of a shared medium: any positive usage of the
    slot group is limited by the same cap.  With cap = 2c(v) it encodes a
    node capacity c(v) at an internal node of an undirected network.
    """

    def __init__(self, ground: GroundSet, cap: float):
        super().__init__(ground)
        _check_finite((cap,), "cap")
        self.cap = float(cap)

    def value_of_mask(self, mask: int) -> float:
        return self.cap if mask else 0.0


class PartitionRankCap(SubmodularOracle):
    """Ground set partitioned into blocks; block j contributes cap_j whenever
    the subset touches it: rho(S) = sum_j cap_j * [S intersects B_j]."""

    def __init__(
        self,
        ground: GroundSet,
        blocks: Sequence[Sequence[int]],
        caps: Sequence[float],
    ):
        super().__init__(ground)
        if len(blocks) != len(caps):
            raise InputError("one cap per block required")
        _check_finite(caps, "block caps")
        seen = set()
        masks = []
        for block in blocks:
            mask = 0
            for i in block:
                if not 0 <= i < ground.size:
                    raise InputError(f"block element {i} out of range")
                if i in seen:
                    raise InputError(f"element {i} appears in two blocks")
                seen.add(i)
                mask |= 1 << i
            masks.append(mask)
        if len(seen) != ground.size:
            raise InputError("blocks must partition the ground set")
        self.block_masks = tuple(masks)
        self.caps = tuple(float(c) for c in caps)

    def value_of_mask(self, mask: int) -> float:
        return sum(c for bm, c in zip(self.block_masks, self.caps) if mask & bm)


class ConcaveOfWeight(SubmodularOracle):
    """rho(S) = phi(sum of weights in S) for a piecewise-linear phi.

    ``breakpoints`` is a list of (x, y) points starting at (0, 0) with
    strictly increasing x; beyond the last point phi continues with
    ``final_slope``.  Concave non-decreasing phi with non-negative weights
    yields a polymatroid.
    """

    def __init__(
        self,
        ground: GroundSet,
        weights: Sequence[float],
        breakpoints: Sequence[tuple[float, float]],
        final_slope: float = 0.0,
    ):
        super().__init__(ground)
        if len(weights) != ground.size:
            raise InputError("one weight per ground element required")
        _check_finite(weights, "weights")
        _check_finite((final_slope,), "final slope")
        pts = [(float(x), float(y)) for x, y in breakpoints]
        if not pts or pts[0] != (0.0, 0.0):
            raise InputError("breakpoints must start at (0, 0)")
        for (x0, _), (x1, _) in zip(pts, pts[1:]):
            if not x1 > x0:
                raise InputError("breakpoint x values must strictly increase")
        _check_finite([x for x, _ in pts], "breakpoint x")
        _check_finite([y for _, y in pts], "breakpoint y")
        self.weights = tuple(float(w) for w in weights)
        self.breakpoints = tuple(pts)
        self.final_slope = float(final_slope)

    def _phi(self, x: float) -> float:
        pts = self.breakpoints
        if x >= pts[-1][0]:
            return pts[-1][1] + self.final_slope * (x - pts[-1][0])
        lo = 0
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            if x <= x1:
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            lo += 1
        return pts[-1][1]

    def value_of_mask(self, mask: int) -> float:
        total = 0.0
        while mask:
            i = (mask & -mask).bit_length() - 1
            total += self.weights[i]
            mask &= mask - 1
        return self._phi(total)


class ExplicitTable(SubmodularOracle):
    """Arbitrary set function given by its full 2^n value table."""

    def __init__(self, ground: GroundSet, values: Sequence[float]):
        super().__init__(ground)
        if ground.size > MAX_TABLE_GROUND:
            raise InputError(
                f"explicit tables limited to ground size {MAX_TABLE_GROUND}"
            )
        if len(values) != 1 << ground.size:
            raise InputError(
                f"table needs {1 << ground.size} values, got {len(values)}"
            )
        _check_finite(values, "table values")
        self.values = tuple(float(v) for v in values)

    def value_of_mask(self, mask: int) -> float:
        return self.values[mask]


def evaluate(oracle: SubmodularOracle, subset: Iterable[int]) -> float:
    """rho(S) for a subset of element indices; evaluate(oracle, ()) == 0
    holds for every normalized oracle."""
    return oracle.value(subset)


def _validated_point(oracle: SubmodularOracle, x: Sequence[float]) -> list[float]:
    if len(x) != oracle.ground.size:
        raise InputError(
            f"point has {len(x)} coordinates, ground size is {oracle.ground.size}"
        )
    out = []
    for xi in x:
        if not math.isfinite(xi) or xi < -1e-9 or xi > 1 + 1e-9:
            raise InputError(f"coordinate {xi!r} outside [0, 1]")
        out.append(min(1.0, max(0.0, float(xi))))
    return out


def _descending_order(x: Sequence[float]) -> list[int]:
    # Ties broken by element index so chains are deterministic.
    return sorted(range(len(x)), key=lambda i: (-x[i], i))


def lovasz_extension(oracle: SubmodularOracle, x: Sequence[float]) -> float:
    """Continuous extension via the sorted-gap formula.

    Sort coordinates descending, let S_j be the top-j prefix sets; the value
    is sum_j (x_{i_j} - x_{i_{j+1}}) rho(S_j) with a trailing 0.  Equals
    rho(S) on indicator vectors and is positively homogeneous on [0, 1]^n.
    """
    xs = _validated_point(oracle, x)
    order = _descending_order(xs)
    total = 0.0
    mask = 0
    for pos, i in enumerate(order):
        mask |= 1 << i
        nxt = xs[order[pos + 1]] if pos + 1 < len(order) else 0.0
        gap = xs[i] - nxt
        if gap != 0.0:
            total += gap * oracle.value_of_mask(mask)
    return total


@dataclass(frozen=True)
class ChainDecomposition:
    """Distribution over a nested chain of subsets reconstructing a point.

    ``sets`` are strictly nested index tuples with positive weights; together
    with ``alpha_empty`` the weights sum to 1 and x_i = sum of weights of
    chain sets containing i.
    """

    sets: tuple[tuple[int, ...], ...]
    weights: tuple[float, ...]
    alpha_empty: float
    dimension: int

    def reconstruct(self) -> list[float]:
        x = [0.0] * self.dimension
        for s, w in zip(self.sets, self.weights):
            for i in s:
                x[i] += w
        return x

    def extension_value(self, oracle: SubmodularOracle) -> float:
        return sum(
            w * oracle.value(s) for s, w in zip(self.sets, self.weights)
        )


def chain_decompose(x: Sequence[float]) -> ChainDecomposition:
    """Decompose x in [0,1]^n into the optimal chain distribution."""
    for xi in x:
        if not math.isfinite(xi) or xi < -1e-9 or xi > 1 + 1e-9:
            raise InputError(f"coordinate {xi!r} outside [0, 1]")
    xs = [min(1.0, max(0.0, float(xi))) for xi in x]
    order = _descending_order(xs)
    sets: list[tuple[int, ...]] = []
    weights: list[float] = []
    prefix: list[int] = []
    for pos, i in enumerate(order):
        prefix.append(i)
        nxt = xs[order[pos + 1]] if pos + 1 < len(order) else 0.0
        gap = xs[i] - nxt
        if gap > 0.0:
            sets.append(tuple(sorted(prefix)))
            weights.append(gap)
    alpha_empty = 1.0 - (xs[order[0]] if order else 0.0)
    return ChainDecomposition(
        sets=tuple(sets),
        weights=tuple(weights),
        alpha_empty=alpha_empty,
        dimension=len(xs),
    )


def convex_closure_value(oracle: SubmodularOracle, x: Sequence[float]) -> float:
    """Optimal value of the distribution LP

        min sum_S alpha_S rho(S)   s.t.  sum_S alpha_S = 1,
                                         sum_{S contains i} alpha_S = x_i,
                                         alpha >= 0,

    solved by full subset enumeration.  Coincides with the Lovasz extension
    exactly when the oracle is submodular.
    """
    from .lp import LinearProgram, solve_lp

    n = oracle.ground.size
    if n > MAX_TABLE_GROUND:
        raise CapabilityError(
            f"convex closure enumerates subsets; ground size {n} exceeds "
            f"{MAX_TABLE_GROUND}"
        )
    xs = _validated_point(oracle, x)
    lp = LinearProgram(sense="min")
    for mask in range(1 << n):
        lp.add_variable(lo=0.0, obj=oracle.value_of_mask(mask))
    lp.add_constraint({m: 1.0 for m in range(1 << n)}, "=", 1.0)
    for i in range(n):
        lp.add_constraint(
            {m: 1.0 for m in range(1 << n) if m >> i & 1}, "=", xs[i]
        )
    sol = solve_lp(lp)
    if sol.status != "optimal":
        from .errors import SolverError

        raise SolverError(f"closure LP unexpectedly {sol.status}")
    return sol.objective


@dataclass(frozen=True)
class PolymatroidReport:
    """Result of the exhaustive polymatroid check."""

    normalized: bool
    monotone: bool
    submodular: bool
    monotone_violation: tuple[tuple[int, ...], int] | None = None
    submodular_violation: tuple[tuple[int, ...], int, int] | None = None

    @property
    def is_polymatroid(self) -> bool:
        return self.normalized and self.monotone and self.submodular


def check_polymatroid(
    oracle: SubmodularOracle, eps: float = 1e-9
) -> PolymatroidReport:
    """Exhaustively verify normalization, monotonicity and submodularity.

    Submodularity is checked in the local marginal form
    rho(M+i) + rho(M+j) >= rho(M+i+j) + rho(M), which is equivalent to the
    pairwise form for arbitrary set functions.
    """
    n = oracle.ground.size
    if n > MAX_CHECK_GROUND:
        raise CapabilityError(
            f"polymatroid check is exhaustive; ground size {n} exceeds "
            f"{MAX_CHECK_GROUND}"
        )
    tab = [oracle.value_of_mask(m) for m in range(1 << n)]
    normalized = abs(tab[0]) <= eps

    monotone = True
    mono_viol = None
    for m in range(1 << n):
        for i in range(n):
            if m >> i & 1:
                continue
            if tab[m | (1 << i)] < tab[m] - eps:
                monotone = False
                mono_viol = (_mask_to_tuple(m), i)
                break
        if not monotone:
            break

    submodular = True
    sub_viol = None
    for m in range(1 << n):
        for i in range(n):
            if m >> i & 1:
                continue
            for j in range(i + 1, n):
                if m >> j & 1:
                    continue
                lhs = tab[m | (1 << i)] + tab[m | (1 << j)]
                rhs = tab[m | (1 << i) | (1 << j)] + tab[m]
                if lhs < rhs - eps:
                    submodular = False
                    sub_viol = (_mask_to_tuple(m), i, j)
                    break
            if not submodular:
                break
        if not submodular:
            break

    return PolymatroidReport(
        normalized=normalized,
        monotone=monotone,
        submodular=submodular,
        monotone_violation=mono_viol,
        submodular_violation=sub_viol,
    )


def _mask_to_tuple(mask: int) -> tuple[int, ...]:
    out = []
    while mask:
        i = (mask & -mask).bit_length() - 1
        out.append(i)
        mask &= mask - 1
    return tuple(out)
