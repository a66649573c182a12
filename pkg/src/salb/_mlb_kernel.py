"""Compiled twin of the load-balancing search in mlb.py.

The jitted function replays the pure-Python depth-first search
instruction for instruction (same child order, same symmetry skip,
same bound arithmetic in the same floating-point order), so both
backends return bit-identical incumbents, proven bounds, and node
counts. mlb.py falls back to the Python loop when numba is absent.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def search(costs, classes, neg_suffix, min_suffix, pos_suffix, loads0, budget_left, best_val, best_assign):
    """Branch and bound over targets in branching order.

    costs: (n, m) increments, rows already permuted into branching
    order; best_assign: (n,) warm-start assignment in the same order,
    updated in place. Returns (best value, smallest bound of a subtree
    the budget cut off, nodes entered, exhausted flag).
    """
    n, m = costs.shape
    loads = loads0.copy()
    abandoned = np.inf
    used = 0
    exhausted = False

    fl = np.empty(m, np.float64)

    # root bound: floors waterfill vs mean, as in the Python bound()
    for q in range(m):
        fl[q] = loads[q] + neg_suffix[0, q]
    fl.sort()
    lb = fl[m - 1]
    demand = pos_suffix[0]
    cap = 0.0
    filled = False
    for k in range(1, m):
        band = (fl[k] - fl[k - 1]) * k
        if cap + band >= demand:
            lvl = fl[k - 1] + (demand - cap) / k
            if lvl > lb:
                lb = lvl
            filled = True
            break
        cap += band
    if not filled:
        lvl = fl[m - 1] + (demand - cap) / m
        if lvl > lb:
            lb = lvl
    tot = min_suffix[0]
    for q in range(m):
        tot += loads[q]
    avg = tot / m
    if avg > lb:
        lb = avg
    if lb >= best_val:
        return best_val, abandoned, used, False
    if budget_left <= 0:
        return best_val, lb, used, True
    budget_left -= 1
    used += 1
    if n == 0:
        val = loads[0]
        for q in range(1, m):
            if loads[q] > val:
                val = loads[q]
        if val < best_val:
            best_val = val
        return best_val, abandoned, used, False

    corder = np.empty((n, m), np.int64)
    cptr = np.empty(n, np.int64)
    applied = np.empty(n, np.int64)
    tried_cls = np.empty((n, m), np.int64)
    tried_load = np.empty((n, m), np.float64)
    tried_cnt = np.empty(n, np.int64)
    assign_buf = np.empty(n, np.int64)

    # frame 0: children by resulting load, ties to the smaller machine
    row = costs[0]
    for q in range(m):
        key = loads[q] + row[q]
        pos = q
        while pos > 0:
            pj = corder[0, pos - 1]
            pkey = loads[pj] + row[pj]
            if pkey > key or (pkey == key and pj > q):
                corder[0, pos] = pj
                pos -= 1
            else:
                break
        corder[0, pos] = q
    cptr[0] = 0
    tried_cnt[0] = 0
    applied[0] = -1

    d = 0
    while d >= 0:
        if d == n:
            val = loads[0]
            for q in range(1, m):
                if loads[q] > val:
                    val = loads[q]
            if val < best_val:
                best_val = val
                for t in range(n):
                    best_assign[t] = assign_buf[t]
            d -= 1
            continue
        if applied[d] >= 0:
            loads[applied[d]] -= costs[d, applied[d]]
            applied[d] = -1
        descended = False
        while cptr[d] < m:
            j = corder[d, cptr[d]]
            cptr[d] += 1
            skip = False
            for t in range(tried_cnt[d]):
                if tried_cls[d, t] == classes[j] and tried_load[d, t] == loads[j]:
                    skip = True
                    break
            if skip:
                continue
            tried_cls[d, tried_cnt[d]] = classes[j]
            tried_load[d, tried_cnt[d]] = loads[j]
            tried_cnt[d] += 1

            d1 = d + 1
            row_j = costs[d, j]
            for q in range(m):
                fl[q] = loads[q] + neg_suffix[d1, q]
            fl[j] += row_j
            fl.sort()
            lb = fl[m - 1]
            demand = pos_suffix[d1]
            cap = 0.0
            filled = False
            for k in range(1, m):
                band = (fl[k] - fl[k - 1]) * k
                if cap + band >= demand:
                    lvl = fl[k - 1] + (demand - cap) / k
                    if lvl > lb:
                        lb = lvl
                    filled = True
                    break
                cap += band
            if not filled:
                lvl = fl[m - 1] + (demand - cap) / m
                if lvl > lb:
                    lb = lvl
            tot = min_suffix[d1]
            for q in range(m):
                tot += loads[q]
            avg = (tot + row_j) / m
            if avg > lb:
                lb = avg

            if lb >= best_val:
                continue
            if budget_left <= 0:
                exhausted = True
                if lb < abandoned:
                    abandoned = lb
                continue
            budget_left -= 1
            used += 1
            assign_buf[d] = j
            loads[j] += row_j
            applied[d] = j
            if d1 < n:
                rownext = costs[d1]
                for q in range(m):
                    key = loads[q] + rownext[q]
                    pos = q
                    while pos > 0:
                        pj = corder[d1, pos - 1]
                        pkey = loads[pj] + rownext[pj]
                        if pkey > key or (pkey == key and pj > q):
                            corder[d1, pos] = pj
                            pos -= 1
                        else:
                            break
                    corder[d1, pos] = q
                cptr[d1] = 0
                tried_cnt[d1] = 0
                applied[d1] = -1
            d = d1
            descended = True
            break
        if not descended:
            d -= 1
    return best_val, abandoned, used, exhausted


@njit(cache=True)
def lex_search(costs, classes, neg_suffix, min_suffix, pos_suffix, loads0, budget_left, opt_plus_tol, assign):
    """First assignment within tolerance of the optimum, visiting
    machines in index order at every element: the lexicographically
    smallest optimal assignment vector. Mirrors the Python sweep in
    mlb.py. Returns (found, nodes entered, exhausted flag)."""
    n, m = costs.shape
    loads = loads0.copy()
    used = 0
    exhausted = False

    fl = np.empty(m, np.float64)

    # bound of the current loads at a given depth, as in _make_bound
    for q in range(m):
        fl[q] = loads[q] + neg_suffix[0, q]
    fl.sort()
    tot = 0.0
    for q in range(m):
        tot += loads[q]
    best = (tot + min_suffix[0]) / m
    demand = pos_suffix[0]
    cap = 0.0
    level = fl[m - 1]
    filled = False
    for k in range(1, m):
        band = (fl[k] - fl[k - 1]) * k
        if cap + band >= demand:
            level = fl[k - 1] + (demand - cap) / k
            filled = True
            break
        cap += band
    if not filled:
        level = fl[m - 1] + (demand - cap) / m
    if fl[m - 1] > level:
        level = fl[m - 1]
    lb = level if level >= best else best
    if lb > opt_plus_tol:
        return False, used, exhausted
    if budget_left <= 0:
        return False, used, True
    budget_left -= 1
    used += 1
    if n == 0:
        return True, used, exhausted

    cptr = np.zeros(n, np.int64)
    applied = np.empty(n, np.int64)
    tried_cls = np.empty((n, m), np.int64)
    tried_load = np.empty((n, m), np.float64)
    tried_cnt = np.zeros(n, np.int64)
    applied[0] = -1

    d = 0
    while d >= 0:
        if d == n:
            return True, used, exhausted
        if applied[d] >= 0:
            loads[applied[d]] -= costs[d, applied[d]]
            applied[d] = -1
        descended = False
        while cptr[d] < m:
            j = cptr[d]
            cptr[d] += 1
            skip = False
            for t in range(tried_cnt[d]):
                if tried_cls[d, t] == classes[j] and tried_load[d, t] == loads[j]:
                    skip = True
                    break
            if skip:
                continue
            tried_cls[d, tried_cnt[d]] = classes[j]
            tried_load[d, tried_cnt[d]] = loads[j]
            tried_cnt[d] += 1

            loads[j] += costs[d, j]
            d1 = d + 1
            for q in range(m):
                fl[q] = loads[q] + neg_suffix[d1, q]
            fl.sort()
            tot = 0.0
            for q in range(m):
                tot += loads[q]
            best = (tot + min_suffix[d1]) / m
            demand = pos_suffix[d1]
            cap = 0.0
            level = fl[m - 1]
            filled = False
            for k in range(1, m):
                band = (fl[k] - fl[k - 1]) * k
                if cap + band >= demand:
                    level = fl[k - 1] + (demand - cap) / k
                    filled = True
                    break
                cap += band
            if not filled:
                level = fl[m - 1] + (demand - cap) / m
            if fl[m - 1] > level:
                level = fl[m - 1]
            lb = level if level >= best else best

            if lb > opt_plus_tol:
                loads[j] -= costs[d, j]
                continue
            if budget_left <= 0:
                exhausted = True
                loads[j] -= costs[d, j]
                continue
            budget_left -= 1
            used += 1
            assign[d] = j
            applied[d] = j
            if d1 < n:
                cptr[d1] = 0
                tried_cnt[d1] = 0
                applied[d1] = -1
            d = d1
            descended = True
            break
        if not descended:
            d -= 1
    return False, used, exhausted
