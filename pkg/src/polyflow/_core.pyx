# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled brute-force kernels.

Mirrors ``_core_py`` operation for operation (same Gray-code walk, same
floating-point order, same tie-breaking) so the two backends are
interchangeable bit for bit.  See that module for the interface contract.
"""

from libc.stdlib cimport free, malloc

BACKEND_NAME = "compiled"

cdef double _GUARD = 1e-7


cdef int _ctz(unsigned long long x) nogil:
    cdef int i = 0
    while not (x >> i) & 1:
        i += 1
    return i


cdef double _fresh_total(double[::1] values, long long[::1] offsets,
                         long long* masks, int n_tables) nogil:
    cdef double total = 0.0
    cdef int t
    for t in range(n_tables):
        total += values[offsets[t] + masks[t]]
    return total


cdef void _min_assignment(int m, int* tbl_a, int* bit_a, int* tbl_b,
                          int* bit_b, long long[::1] offsets,
                          double[::1] values, long long* masks, int n_tables,
                          double* out_cost,
                          unsigned long long* out_assign) nogil:
    cdef int i, t, ta, tb
    cdef unsigned long long gray = 0, step
    cdef double total, best, cand
    cdef unsigned long long best_assign = 0
    for t in range(n_tables):
        masks[t] = 0
    for i in range(m):
        masks[tbl_a[i]] |= 1LL << bit_a[i]
    total = _fresh_total(values, offsets, masks, n_tables)
    best = total
    for step in range(1, 1ULL << m):
        i = _ctz(step)
        gray ^= 1ULL << i
        ta = tbl_a[i]
        tb = tbl_b[i]
        total -= values[offsets[ta] + masks[ta]]
        total -= values[offsets[tb] + masks[tb]]
        if (gray >> i) & 1:
            masks[ta] &= ~(1LL << bit_a[i])
            masks[tb] |= 1LL << bit_b[i]
        else:
            masks[tb] &= ~(1LL << bit_b[i])
            masks[ta] |= 1LL << bit_a[i]
        total += values[offsets[ta] + masks[ta]]
        total += values[offsets[tb] + masks[tb]]
        if total < best + _GUARD:
            cand = _fresh_total(values, offsets, masks, n_tables)
            if cand < best:
                best = cand
                best_assign = gray
    out_cost[0] = best
    out_assign[0] = best_assign


def min_assignment_cost(tbl_a, bit_a, tbl_b, bit_b, offsets, values):
    """Minimum grouped-oracle cost over all 2^m endpoint assignments."""
    cdef int m = len(tbl_a)
    if m == 0:
        return 0.0, 0
    cdef long long[::1] offs = _as_i64(offsets)
    cdef double[::1] vals = _as_f64(values)
    cdef int n_tables = offs.shape[0] - 1
    cdef int* c_ta = <int*> malloc(4 * m * sizeof(int))
    cdef long long* masks = <long long*> malloc(n_tables * sizeof(long long))
    if c_ta == NULL or masks == NULL:
        free(c_ta)
        free(masks)
        raise MemoryError()
    cdef int* c_ba = c_ta + m
    cdef int* c_tb = c_ta + 2 * m
    cdef int* c_bb = c_ta + 3 * m
    cdef int i
    for i in range(m):
        c_ta[i] = tbl_a[i]
        c_ba[i] = bit_a[i]
        c_tb[i] = tbl_b[i]
        c_bb[i] = bit_b[i]
    cdef double cost = 0.0
    cdef unsigned long long assign = 0
    try:
        _min_assignment(m, c_ta, c_ba, c_tb, c_bb, offs, vals, masks,
                        n_tables, &cost, &assign)
    finally:
        free(c_ta)
        free(masks)
    return cost, int(assign)


cdef _as_i64(obj):
    import numpy as np
    return np.ascontiguousarray(obj, dtype=np.int64)


cdef _as_f64(obj):
    import numpy as np
    return np.ascontiguousarray(obj, dtype=np.float64)


def brute_cut_search(
    int mode,
    edge_u,
    edge_v,
    bint directed,
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
    int n_groups,
):
    """Exhaustive scan over all edge subsets; see _core_py.brute_cut_search."""
    cdef int m = len(edge_u)
    cdef int n_pairs = len(pair_src)
    cdef long long[::1] offs = _as_i64(offsets)
    cdef double[::1] vals = _as_f64(values)
    cdef int n_tables = offs.shape[0] - 1

    cdef int* buf = <int*> malloc((6 * m + 4 * m + 3 * n_pairs) * sizeof(int))
    cdef double* dembuf = <double*> malloc(n_pairs * sizeof(double))
    cdef int* hit = <int*> malloc((n_groups if n_groups > 0 else 1) * sizeof(int))
    cdef long long* masks = <long long*> malloc(
        (n_tables if n_tables > 0 else 1) * sizeof(long long))
    if buf == NULL or dembuf == NULL or hit == NULL or masks == NULL:
        free(buf)
        free(dembuf)
        free(hit)
        free(masks)
        raise MemoryError()
    cdef int* c_eu = buf
    cdef int* c_ev = buf + m
    cdef int* c_ta = buf + 2 * m
    cdef int* c_ba = buf + 3 * m
    cdef int* c_tb = buf + 4 * m
    cdef int* c_bb = buf + 5 * m
    cdef int* s_ta = buf + 6 * m
    cdef int* s_ba = buf + 7 * m
    cdef int* s_tb = buf + 8 * m
    cdef int* s_bb = buf + 9 * m
    cdef int* c_src = buf + 10 * m
    cdef int* c_dst = buf + 10 * m + n_pairs
    cdef int* c_grp = buf + 10 * m + 2 * n_pairs

    cdef int i, p
    for i in range(m):
        c_eu[i] = edge_u[i]
        c_ev[i] = edge_v[i]
        c_ta[i] = tbl_a[i]
        c_ba[i] = bit_a[i]
        c_tb[i] = tbl_b[i]
        c_bb[i] = bit_b[i]
    for p in range(n_pairs):
        c_src[p] = pair_src[p]
        c_dst[p] = pair_dst[p]
        c_grp[p] = pair_group[p]
        dembuf[p] = pair_dem[p]

    cdef bint found = False
    cdef double best_cost = 0.0, best_dem = 0.0, dem, cost
    cdef long long best_mask = -1
    cdef unsigned long long best_assign = 0, assign
    cdef unsigned long long fmask, reach, u_bit, v_bit
    cdef bint changed, ok, better
    cdef int sub_m, g
    cdef unsigned long long last_src_reach
    cdef int last_src

    try:
        for fmask in range(1ULL << m):
            dem = 0.0
            for g in range(n_groups):
                hit[g] = 0
            last_src = -1
            last_src_reach = 0
            for p in range(n_pairs):
                if c_src[p] == last_src:
                    reach = last_src_reach
                else:
                    reach = 1ULL << c_src[p]
                    changed = True
                    while changed:
                        changed = False
                        for i in range(m):
                            if (fmask >> i) & 1:
                                continue
                            u_bit = 1ULL << c_eu[i]
                            v_bit = 1ULL << c_ev[i]
                            if (reach & u_bit) and not (reach & v_bit):
                                reach |= v_bit
                                changed = True
                            if (not directed) and (reach & v_bit) and not (reach & u_bit):
                                reach |= u_bit
                                changed = True
                    last_src = c_src[p]
                    last_src_reach = reach
                if not (reach >> c_dst[p]) & 1:
                    dem += dembuf[p]
                    hit[c_grp[p]] = 1
            if mode == 0:
                ok = True
                for g in range(n_groups):
                    if not hit[g]:
                        ok = False
                        break
                if not ok:
                    continue
            else:
                if dem <= 0.0:
                    continue
            sub_m = 0
            for i in range(m):
                if (fmask >> i) & 1:
                    s_ta[sub_m] = c_ta[i]
                    s_ba[sub_m] = c_ba[i]
                    s_tb[sub_m] = c_tb[i]
                    s_bb[sub_m] = c_bb[i]
                    sub_m += 1
            _min_assignment(sub_m, s_ta, s_ba, s_tb, s_bb, offs, vals,
                            masks, n_tables, &cost, &assign)
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
                best_mask = <long long> fmask
                best_assign = assign
    finally:
        free(buf)
        free(dembuf)
        free(hit)
        free(masks)
    return bool(found), int(best_mask), best_cost, best_dem, int(best_assign)
