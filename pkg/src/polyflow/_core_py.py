"""Pure-Python brute-force kernels.

Reference implementation of the hot enumeration loops; the compiled
extension in ``_core.pyx`` mirrors these exactly (same Gray-code walk, same
floating-point operation order, same tie-breaking), so both backends return
bit-identical results.

Shared conventions:

* Each cut edge i has two endpoint choices: side a (tail) and side b (head).
  An assignment is a bitmask; bit i set means edge i goes to side b.
* Table t occupies ``values[offsets[t] : offsets[t+1]]``, indexed by the
  bitmask of assigned slots local to that node side.
* Assignment enumeration walks the reflected Gray code maintaining a running
  total; candidates are re-summed from scratch before accepting, so the
  reported minima carry no incremental drift.
"""

from __future__ import annotations

BACKEND_NAME = "python"

_GUARD = 1e-7  # running-total slack before an exact re-summation


def min_assignment_cost(tbl_a, bit_a, tbl_b, bit_b, offsets, values):
    """Minimum grouped-oracle cost over all 2^m endpoint assignments.

    Returns (cost, assignment bitmask).  Ties keep the first minimum in
    Gray-code order.
    """
    m = len(tbl_a)
    if m == 0:
        return 0.0, 0
    n_tables = len(offsets) - 1
    masks = [0] * n_tables
    for i in range(m):
        masks[tbl_a[i]] |= 1 << bit_a[i]

    def fresh_total():
        return sum(values[offsets[t] + masks[t]] for t in range(n_tables))

    total = fresh_total()
    best = total
    best_assign = 0
    gray = 0
    for step in range(1, 1 << m):
        i = (step & -step).bit_length() - 1
        gray ^= 1 << i
        ta = tbl_a[i]
        tb = tbl_b[i]
        total -= values[offsets[ta] + masks[ta]]
        total -= values[offsets[tb] + masks[tb]]
        if gray >> i & 1:
            masks[ta] &= ~(1 << bit_a[i])
            masks[tb] |= 1 << bit_b[i]
        else:
            masks[tb] &= ~(1 << bit_b[i])
            masks[ta] |= 1 << bit_a[i]
        total += values[offsets[ta] + masks[ta]]
        total += values[offsets[tb] + masks[tb]]
        if total < best + _GUARD:
            cand = fresh_total()
            if cand < best:
                best = cand
                best_assign = gray
    return best, best_assign


def _separation(cut_mask, edge_u, edge_v, directed, pair_src, pair_dst):
    """Per ordered pair: 1 if the pair is separated once cut edges are removed.

    Nodes are indexed 0..n-1 and tracked in a reachability bitmask.
    """
    m = len(edge_u)
    sep = []
    reach_cache = {}
    for s, t in zip(pair_src, pair_dst):
        reach = reach_cache.get(s)
        if reach is None:
            reach = 1 << s
            changed = True
            while changed:
                changed = False
                for i in range(m):
                    if cut_mask >> i & 1:
                        continue
                    u_bit = 1 << edge_u[i]
                    v_bit = 1 << edge_v[i]
                    if reach & u_bit and not reach & v_bit:
                        reach |= v_bit
                        changed = True
                    if not directed and reach & v_bit and not reach & u_bit:
                        reach |= u_bit
                        changed = True
            reach_cache[s] = reach
        sep.append(0 if reach >> t & 1 else 1)
    return sep


def brute_cut_search(
    mode,
    edge_u,
    edge_v,
    directed,
    tbl_a,
    bit_a,
    tbl_b,
    bit_b,
    offsets,
    values,
    pair_src,
    pair_dst,
    pair_dem,
    pair_group,
    n_groups,
):
    """Exhaustive scan over all edge subsets F.

    mode 0: minimum-cost multicut (every group must have a separated member).
    mode 1: minimum sparsity nu(F)/D(F) over subsets with D(F) > 0.

    Subsets are enumerated as ascending bitmasks with strict improvement, so
    the lexicographically smallest optimum is returned.  Returns
    (found, best_mask, best_cost, best_demand, best_assignment).
    """
    m = len(edge_u)
    n_pairs = len(pair_src)
    best_cost = 0.0
    best_dem = 0.0
    best_mask = -1
    best_assign = 0
    found = False
    for fmask in range(1 << m):
        sep = _separation(fmask, edge_u, edge_v, directed, pair_src, pair_dst)
        dem = 0.0
        group_hit = [0] * n_groups
        for p in range(n_pairs):
            if sep[p]:
                dem += pair_dem[p]
                group_hit[pair_group[p]] = 1
        if mode == 0:
            if not all(group_hit):
                continue
        else:
            if dem <= 0.0:
                continue
        sub_tbl_a, sub_bit_a, sub_tbl_b, sub_bit_b = [], [], [], []
        for i in range(m):
            if fmask >> i & 1:
                sub_tbl_a.append(tbl_a[i])
                sub_bit_a.append(bit_a[i])
                sub_tbl_b.append(tbl_b[i])
                sub_bit_b.append(bit_b[i])
        cost, assign = min_assignment_cost(
            sub_tbl_a, sub_bit_a, sub_tbl_b, sub_bit_b, offsets, values
        )
        if not found:
            better = True
        elif mode == 0:
            better = cost < best_cost
        else:
            better = cost * best_dem < best_cost * dem
        if better:
            found = True
            best_cost = cost
            best_dem = dem
            best_mask = fmask
            best_assign = assign
    return found, best_mask, best_cost, best_dem, best_assign
