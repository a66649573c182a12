"""Modular load balancing: minimize the maximum machine load.

Machine j starts at offset b_j and pays costs[j, i] for each target i
it receives. The exact solver is a depth-first branch and bound that
remains correct for negative increments (which the modularization
iterations produce); the threshold-LP solver is the classic rounding
2-approximation and requires nonnegative data.

Searches are deterministic: targets are branched in descending
cost-spread order, machines tried by resulting load, and among optimal
assignments the lexicographically smallest assignment vector is
returned (a second, element-ordered sweep). An optional node budget
turns the exact solver into a deterministic any-time search that also
reports a proven bound on the true optimum.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .lp import EQUAL, LESS, LpProblem, solve_lp
from .setfn import CapabilityError, Partition

EXACT_N_LIMIT = 30
VALUE_TOL = 1e-9

_KERNEL = None
_KERNEL_TRIED = False


def _compiled_search():
    """The jitted twin of the Python search, or None when numba is
    unavailable. Both produce bit-identical results; see _mlb_kernel."""
    global _KERNEL, _KERNEL_TRIED
    if not _KERNEL_TRIED:
        _KERNEL_TRIED = True
        try:
            from ._mlb_kernel import search

            _KERNEL = search
        except Exception:
            _KERNEL = None
    return _KERNEL


@dataclass(frozen=True, eq=False)
class MlbProblem:
    """offsets: (m,) start load per machine; costs: (m, n) increment of
    machine j for target i in costs[j, i]. Entries may be negative."""

    offsets: np.ndarray
    costs: np.ndarray

    def __post_init__(self) -> None:
        if self.offsets.ndim != 1 or self.costs.ndim != 2:
            raise ValueError("offsets must be (m,), costs must be (m, n)")
        if self.costs.shape[0] != self.offsets.shape[0]:
            raise ValueError("offsets and costs disagree on the machine count")
        if not (np.isfinite(self.offsets).all() and np.isfinite(self.costs).all()):
            raise ValueError("all data must be finite")

    @property
    def m(self) -> int:
        return self.offsets.shape[0]

    @property
    def n(self) -> int:
        return self.costs.shape[1]

    def makespan(self, assignment: Sequence[int]) -> float:
        loads = self.offsets.astype(np.float64).copy()
        for i, j in enumerate(assignment):
            loads[j] += self.costs[j, i]
        return float(loads.max())


def mlb_problem(offsets, costs) -> MlbProblem:
    return MlbProblem(np.asarray(offsets, dtype=np.float64), np.asarray(costs, dtype=np.float64))


def mlb_to_json(p: MlbProblem) -> str:
    return json.dumps({"m": p.m, "n": p.n, "b": p.offsets.tolist(), "c": p.costs.tolist()}, sort_keys=True)


def mlb_from_json(text: str) -> MlbProblem:
    payload = json.loads(text)
    p = mlb_problem(payload["b"], payload["c"])
    if p.m != payload["m"] or p.n != payload["n"]:
        raise ValueError("declared sizes do not match the cost matrix")
    return p


@dataclass(frozen=True)
class MlbResult:
    partition: Partition
    value: float
    proven_bound: float  # <= true optimum; equals value when the search completed
    nodes: int
    complete: bool


class _Budget:
    __slots__ = ("left", "used", "exhausted")

    def __init__(self, limit: Optional[int]):
        self.left = math.inf if limit is None else int(limit)
        self.used = 0
        self.exhausted = False

    def spend(self) -> bool:
        if self.left <= 0:
            self.exhausted = True
            return False
        self.left -= 1
        self.used += 1
        return True


def _suffix_tables(m: int, costs, order):
    """Per-depth suffix aggregates over the branching order:
    neg_suffix[d][j] is every negative increment machine j could still
    absorb, min_suffix[d] the per-target cheapest increments left, and
    pos_suffix[d] the per-target cheapest nonnegative increments left."""
    n = len(order)
    neg_suffix = [[0.0] * m for _ in range(n + 1)]
    min_suffix = [0.0] * (n + 1)
    pos_suffix = [0.0] * (n + 1)
    for d in range(n - 1, -1, -1):
        row = costs[order[d]]
        for j in range(m):
            neg_suffix[d][j] = neg_suffix[d + 1][j] + min(0.0, row[j])
        min_suffix[d] = min_suffix[d + 1] + min(row)
        pos_suffix[d] = pos_suffix[d + 1] + min(max(0.0, c) for c in row)
    return [tuple(r) for r in neg_suffix], min_suffix, pos_suffix


def _make_bound(m: int, costs, order):
    """Lower bound on the best completable makespan at a search node.

    Three ingredients, all valid for arbitrary signs: floors
    f_j = load_j plus every negative increment machine j could still
    absorb (its final load cannot go lower); the mean bound (loads plus
    the per-target cheapest increments, averaged); and a waterfill
    step: each remaining target adds at least min_j max(0, c_ji)
    somewhere above the floors, so the smallest T with
    sum_j max(0, T - f_j) >= that positive demand is a bound too.
    """
    neg_suffix, min_suffix, pos_suffix = _suffix_tables(m, costs, order)

    def bound(loads: list[float], depth: int) -> float:
        ns = neg_suffix[depth]
        floors = [loads[j] + ns[j] for j in range(m)]
        floors.sort()
        best = (sum(loads) + min_suffix[depth]) / m
        demand = pos_suffix[depth]
        cap = 0.0
        level = floors[-1]
        for k in range(1, m):
            band = (floors[k] - floors[k - 1]) * k
            if cap + band >= demand:
                level = floors[k - 1] + (demand - cap) / k
                break
            cap += band
        else:
            level = floors[-1] + (demand - cap) / m
        if floors[-1] > level:
            level = floors[-1]
        return level if level >= best else best

    return bound


def _machine_classes(p: MlbProblem) -> list[int]:
    """Class id per machine; machines with identical offsets and cost
    rows are interchangeable, which lets the search skip mirrored
    branches once their current loads coincide."""
    seen: dict[tuple, int] = {}
    classes = []
    for j in range(p.m):
        key = (float(p.offsets[j]),) + tuple(float(x) for x in p.costs[j])
        classes.append(seen.setdefault(key, j))
    return classes


def solve_mlb_exact(
    p: MlbProblem,
    node_budget: Optional[int] = None,
    warm_start: Optional[Sequence[int]] = None,
) -> tuple[Partition, float]:
    """Minimize the makespan exactly. Without a budget the target count
    is capped at EXACT_N_LIMIT and ties resolve to the lexicographically
    smallest assignment vector; with a budget the search is any-time and
    returns its incumbent. See solve_mlb_detailed for the proven bound."""
    res = solve_mlb_detailed(p, node_budget=node_budget, warm_start=warm_start)
    return res.partition, res.value


def solve_mlb_detailed(
    p: MlbProblem,
    node_budget: Optional[int] = None,
    warm_start: Optional[Sequence[int]] = None,
    backend: str = "auto",
) -> MlbResult:
    if backend not in ("auto", "python", "compiled"):
        raise ValueError(f"unknown backend {backend!r}")
    m, n = p.m, p.n
    if node_budget is None and n > EXACT_N_LIMIT:
        raise CapabilityError(
            f"exact search is capped at {EXACT_N_LIMIT} targets; pass node_budget for an any-time run"
        )
    if n == 0:
        val = float(p.offsets.max())
        return MlbResult(Partition((), m), val, val, 0, True)

    costs = [[float(p.costs[j, i]) for j in range(m)] for i in range(n)]  # [target][machine]
    spread = [max(c) - min(c) for c in costs]
    order = sorted(range(n), key=lambda i: (-spread[i], -min(costs[i]), i))

    classes = _machine_classes(p)
    loads0 = [float(b) for b in p.offsets]
    neg_suffix, min_suffix, pos_suffix = _suffix_tables(m, costs, order)
    root_bound = _make_bound(m, costs, order)

    budget = _Budget(node_budget)
    best_val = math.inf
    best_assign: Optional[list[int]] = None
    abandoned = math.inf  # smallest bound of a subtree the budget cut off

    if warm_start is not None:
        ws = list(warm_start)
        if len(ws) != n:
            raise ValueError("warm start must assign every target")
        best_val = p.makespan(ws)
        best_assign = ws
    else:  # greedy completion seeds the incumbent
        loads = loads0.copy()
        ws = [0] * n
        for i in order:
            row = costs[i]
            j = min(range(m), key=lambda q: (loads[q] + row[q], q))
            loads[j] += row[j]
            ws[i] = j
        best_val = max(loads)
        best_assign = ws

    kernel = None
    if backend != "python":
        kernel = _compiled_search()
        if kernel is None and backend == "compiled":
            raise RuntimeError("compiled backend requested but numba is not importable")

    if kernel is not None:
        costs_ord = np.array([costs[i] for i in order], dtype=np.float64)
        assign_ord = np.array([best_assign[i] for i in order], dtype=np.int64)
        limit = (1 << 62) if node_budget is None else int(node_budget)
        bv, ab, used, exhausted = kernel(
            costs_ord,
            np.array(classes, dtype=np.int64),
            np.array(neg_suffix, dtype=np.float64),
            np.array(min_suffix, dtype=np.float64),
            np.array(pos_suffix, dtype=np.float64),
            np.array(loads0, dtype=np.float64),
            limit,
            float(best_val),
            assign_ord,
        )
        best_val = float(bv)
        abandoned = float(ab)
        out = list(best_assign)
        for d, i in enumerate(order):
            out[i] = int(assign_ord[d])
        best_assign = out
        budget.used = int(used)
        budget.exhausted = bool(exhausted)
        budget.left = math.inf if node_budget is None else max(0, int(node_budget) - budget.used)
        return _finish(p, costs, classes, budget, best_val, best_assign, abandoned, root_bound(loads0, 0), kernel)

    assign = [0] * n
    range_m = range(m)

    def dfs(depth: int, loads: list[float]) -> None:
        # invariant: the caller established bound(loads, depth) < best_val
        nonlocal best_val, best_assign, abandoned
        if depth == n:
            val = max(loads)
            if val < best_val:
                best_val = val
                best_assign = assign.copy()
            return
        i = order[depth]
        row = costs[i]
        d1 = depth + 1
        ns = neg_suffix[d1]
        demand = pos_suffix[d1]
        avg_base = min_suffix[d1]
        base = [loads[q] + ns[q] for q in range_m]
        for q in range_m:
            avg_base += loads[q]
        children = [(loads[q] + row[q], q) for q in range_m]
        children.sort()
        tried: list[tuple[int, float]] = []
        for _, j in children:
            key = (classes[j], loads[j])
            if key in tried:
                continue  # interchangeable with an already-tried machine
            tried.append(key)
            # child bound, inlined: waterfill over floors vs mean bound
            fl = base.copy()
            fl[j] += row[j]
            fl.sort()
            level = fl[-1]
            cap = 0.0
            for k in range(1, m):
                band = (fl[k] - fl[k - 1]) * k
                if cap + band >= demand:
                    lvl = fl[k - 1] + (demand - cap) / k
                    if lvl > level:
                        level = lvl
                    break
                cap += band
            else:
                lvl = fl[-1] + (demand - cap) / m
                if lvl > level:
                    level = lvl
            avg = (avg_base + row[j]) / m
            lb = level if level >= avg else avg
            if lb < best_val:
                if budget.spend():
                    assign[i] = j
                    loads[j] += row[j]
                    dfs(d1, loads)
                    loads[j] -= row[j]
                elif lb < abandoned:
                    abandoned = lb

    root_lb = root_bound(loads0, 0)
    if root_lb < best_val:
        if budget.spend():
            dfs(0, loads0.copy())
        else:
            abandoned = root_lb
    return _finish(p, costs, classes, budget, best_val, best_assign, abandoned, root_lb)


def _finish(p, costs, classes, budget, best_val, best_assign, abandoned, root_lb, kernel=None) -> MlbResult:
    complete = not budget.exhausted
    value = p.makespan(best_assign)
    # A truncated search still proves: the optimum is at least the best
    # of (cheapest cut-off subtree, root relaxation), and at most value.
    proven = value if complete else max(min(value, abandoned), root_lb)
    if complete:
        # The optimum is proven; a second element-ordered sweep resolves
        # ties to the lexicographically smallest assignment vector.
        lex = _lex_smallest_optimum(p, costs, classes, value, budget, kernel)
        if lex is not None:
            best_assign = lex
            value = p.makespan(best_assign)
    return MlbResult(Partition(tuple(best_assign), p.m), value, float(proven), budget.used, complete)


def _lex_smallest_optimum(
    p: MlbProblem, costs, classes, opt: float, budget: _Budget, kernel=None
) -> Optional[list[int]]:
    """Element-ordered sweep: the first complete assignment within
    VALUE_TOL of the optimum is the lexicographically smallest one.
    Returns None only when a node budget ran out mid-sweep."""
    m, n = p.m, p.n
    if kernel is not None:
        from . import _mlb_kernel

        neg_suffix, min_suffix, pos_suffix = _suffix_tables(m, costs, list(range(n)))
        assign_arr = np.zeros(n, dtype=np.int64)
        limit = (1 << 62) if budget.left == math.inf else int(budget.left)
        found, used, exhausted = _mlb_kernel.lex_search(
            np.array(costs, dtype=np.float64).reshape(n, m),
            np.array(classes, dtype=np.int64),
            np.array(neg_suffix, dtype=np.float64).reshape(n + 1, m),
            np.array(min_suffix, dtype=np.float64),
            np.array(pos_suffix, dtype=np.float64),
            np.array([float(b) for b in p.offsets], dtype=np.float64),
            limit,
            opt + VALUE_TOL,
            assign_arr,
        )
        budget.used += int(used)
        if budget.left != math.inf:
            budget.left = max(0, budget.left - int(used))
        budget.exhausted = budget.exhausted or bool(exhausted)
        if not found:
            if not budget.exhausted:
                raise RuntimeError("lexicographic sweep lost the optimum; this is a bug")
            return None
        return [int(x) for x in assign_arr]

    bound = _make_bound(m, costs, list(range(n)))
    assign = [0] * n
    found: Optional[list[int]] = None

    def dfs(depth: int, loads: list[float]) -> bool:
        # invariant: bound(loads, depth) <= opt + VALUE_TOL held by the caller
        nonlocal found
        if depth == n:
            found = assign.copy()
            return True
        row = costs[depth]
        tried: list[tuple[int, float]] = []
        for j in range(m):
            key = (classes[j], loads[j])
            if key in tried:
                continue
            tried.append(key)
            assign[depth] = j
            loads[j] += row[j]
            ok = False
            if bound(loads, depth + 1) <= opt + VALUE_TOL and budget.spend():
                ok = dfs(depth + 1, loads)
            loads[j] -= row[j]
            if ok:
                return True
        return False

    loads0 = [float(b) for b in p.offsets]
    if bound(loads0, 0) <= opt + VALUE_TOL and budget.spend():
        dfs(0, loads0)
    if found is None and not budget.exhausted:
        raise RuntimeError("lexicographic sweep lost the optimum; this is a bug")
    return found


# ---------------------------------------------------------------------------
# Threshold-LP rounding


class NegativeDataError(ValueError):
    """The rounding solver keeps its guarantee only on nonnegative data."""


def solve_mlb_lst(p: MlbProblem) -> tuple[Partition, float]:
    """2-approximate makespan via threshold feasibility: binary-search
    the threshold T over feasibility of the assignment LP pruned to
    pairs with b_j + c_ij <= T, then round the basic fractional solution
    by matching each fractional target to one of its machines. Requires
    nonnegative offsets and costs; route negative data to
    solve_mlb_exact instead."""
    if (p.offsets < 0).any() or (p.costs < 0).any():
        raise NegativeDataError(
            "threshold rounding needs nonnegative offsets and costs; use solve_mlb_exact"
        )
    m, n = p.m, p.n
    if n == 0:
        return Partition((), m), float(p.offsets.max())

    b = p.offsets.astype(np.float64)
    c = p.costs.astype(np.float64)

    # Feasible upper start: list scheduling; certified lower start.
    loads = b.copy()
    for i in range(n):
        j = int(np.argmin(loads + c[:, i]))
        loads[j] += c[j, i]
    hi = float(loads.max())
    lo = max(
        float(b.max()),
        float((b[:, None] + c).min(axis=0).max()) if n else 0.0,
        float((b.sum() + c.min(axis=0).sum()) / m),
    )
    hi = max(hi, lo)

    feasible_x = _threshold_lp(p, hi)
    if feasible_x is None:
        raise RuntimeError("list-scheduling threshold must be feasible; this is a bug")
    for _ in range(64):
        if hi - lo <= 1e-12 * max(1.0, abs(hi)):
            break
        mid = (lo + hi) / 2.0
        x = _threshold_lp(p, mid)
        if x is None:
            lo = mid
        else:
            hi, feasible_x = mid, x

    assignment = _round_assignment(p, feasible_x)
    part = Partition(tuple(assignment), m)
    return part, p.makespan(assignment)


def _threshold_lp(p: MlbProblem, t: float) -> Optional[np.ndarray]:
    """Basic feasible point of the pruned assignment LP at threshold t,
    or None. Variables are x[i, j] flattened for allowed pairs only."""
    m, n = p.m, p.n
    allowed = [[j for j in range(m) if p.offsets[j] + p.costs[j, i] <= t + 1e-12] for i in range(n)]
    if any(not js for js in allowed):
        return None
    var_of = {}
    for i in range(n):
        for j in allowed[i]:
            var_of[i, j] = len(var_of)
    nv = len(var_of)
    rows = []
    for i in range(n):
        coeffs = [0.0] * nv
        for j in allowed[i]:
            coeffs[var_of[i, j]] = 1.0
        rows.append((coeffs, EQUAL, 1.0))
    for j in range(m):
        coeffs = [0.0] * nv
        touched = False
        for i in range(n):
            if (i, j) in var_of:
                coeffs[var_of[i, j]] = float(p.costs[j, i])
                touched = True
        if touched:
            rows.append((coeffs, LESS, float(t - p.offsets[j])))
    sol = solve_lp(LpProblem(tuple([0.0] * nv), tuple((tuple(r[0]), r[1], r[2]) for r in rows), True))
    if not sol.optimal:
        return None
    x = np.zeros((n, m))
    for (i, j), k in var_of.items():
        x[i, j] = sol.x[k]
    return x


def _round_assignment(p: MlbProblem, x: np.ndarray) -> list[int]:
    m, n = p.m, p.n
    assignment = [-1] * n
    fractional = []
    for i in range(n):
        j_int = int(np.argmax(x[i]))
        if x[i, j_int] >= 1.0 - 1e-6:
            assignment[i] = j_int
        else:
            fractional.append(i)

    # A basic solution's fractional support forms trees and at most one
    # cycle per component, so the targets can be matched one-per-machine.
    edges = {i: [j for j in range(m) if x[i, j] > 1e-7] for i in fractional}
    matched_machine: dict[int, int] = {}

    def augment(i: int, seen: set[int]) -> bool:
        for j in edges[i]:
            if j in seen:
                continue
            seen.add(j)
            if j not in matched_machine or augment(matched_machine[j], seen):
                matched_machine[j] = i
                return True
        return False

    for i in fractional:
        if not augment(i, set()):
            raise RuntimeError("fractional targets admit no machine matching; LP point not basic")
    for j, i in matched_machine.items():
        assignment[i] = j
    return assignment
