"""Shared fixtures and independent reference oracles.

The reference implementations here deliberately avoid the library's
algorithms: spanning trees by edge-subset enumeration, LPs by vertex
enumeration, assignments and tours by exhaustive search. They are the
second route for every dual-route check in the suite.
"""

import itertools
import math

import numpy as np

from salb.metric import FacilityInstance, Metric, validate_metric
from salb.setfn import GroundSet, OracleFlags, SetFunctionOracle

# Four-node metric whose tree costs drop when the central point joins:
# pairwise 5 among {root, 1, 3}, and 2 at distance 3 from everything.
MSTA = [
    [0.0, 5.0, 3.0, 5.0],
    [5.0, 0.0, 3.0, 5.0],
    [3.0, 3.0, 0.0, 3.0],
    [5.0, 5.0, 3.0, 0.0],
]

# Four-node metric with a far point 1 reachable cheaply via 2 or 3;
# tree costs: {1}:5, pairs:6, everything:9.
MSTB = [
    [0.0, 5.0, 3.0, 3.0],
    [5.0, 0.0, 3.0, 3.0],
    [3.0, 3.0, 0.0, 6.0],
    [3.0, 3.0, 6.0, 0.0],
]


def msta_metric() -> Metric:
    return validate_metric(MSTA)


def mstb_metric() -> Metric:
    return validate_metric(MSTB)


def fl_instance() -> FacilityInstance:
    """Two facilities (unit opening cost), three customers."""
    return FacilityInstance((1.0, 1.0), np.array([[1.0, 3.0], [1.0, 1.5], [2.0, 1.0]]))


def quad_oracle(n: int = 3) -> SetFunctionOracle:
    """f(S) = (7 - |S|) |S|: normalized, nondecreasing (for n <= 3),
    submodular, with total curvature 2/3 at n = 3."""
    flags = OracleFlags(
        normalized=True,
        nonnegative=True,
        nondecreasing=True,
        subadditive=True,
        submodular=True,
        s_minimal=True,
    )
    return SetFunctionOracle(GroundSet(n), lambda m: float((7 - m.bit_count()) * m.bit_count()), flags, "quad")


def modular_suite(rows) -> list[SetFunctionOracle]:
    """One nonnegative modular oracle per weight row."""
    out = []
    for row in rows:
        flags = OracleFlags(
            normalized=True, nonnegative=True, nondecreasing=True,
            subadditive=True, submodular=True, s_minimal=True,
        )

        def fn(mask, row=tuple(row)):
            return float(sum(w for k, w in enumerate(row) if mask >> k & 1))

        out.append(SetFunctionOracle(GroundSet(len(row)), fn, flags, "modular"))
    return out


def coverage_oracle(seed: int, n: int, items: int = 10) -> SetFunctionOracle:
    """Weighted coverage function: element i covers a random item set;
    f(S) is the total weight covered. Submodular, nondecreasing."""
    rng = np.random.default_rng(seed)
    weights = rng.uniform(0.5, 2.0, items)
    covers = [set(rng.choice(items, size=rng.integers(1, items // 2 + 1), replace=False)) for _ in range(n)]

    def fn(mask: int) -> float:
        hit = set()
        for i in range(n):
            if mask >> i & 1:
                hit |= covers[i]
        return float(sum(weights[k] for k in hit))

    flags = OracleFlags(
        normalized=True, nonnegative=True, nondecreasing=True,
        subadditive=True, submodular=True, s_minimal=True,
    )
    return SetFunctionOracle(GroundSet(n), fn, flags, f"coverage{seed}")


# ---------------------------------------------------------------------------
# Independent reference oracles


def mst_cost_by_enumeration(d: np.ndarray, nodes: list[int]) -> float:
    """Cheapest spanning tree over `nodes` by trying every edge subset
    of size k-1 and keeping the connected acyclic ones."""
    k = len(nodes)
    if k <= 1:
        return 0.0
    edges = [(i, j) for i in range(k) for j in range(i + 1, k)]
    best = math.inf
    for combo in itertools.combinations(edges, k - 1):
        parent = list(range(k))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        ok = True
        cost = 0.0
        for i, j in combo:
            ri, rj = find(i), find(j)
            if ri == rj:
                ok = False
                break
            parent[ri] = rj
            cost += float(d[nodes[i], nodes[j]])
        if ok and cost < best:
            best = cost
    return best


def facility_cost_by_assignment(inst: FacilityInstance, customers: list[int]) -> float:
    """Serve the customers by trying every customer->facility map."""
    if not customers:
        return 0.0
    best = math.inf
    for assign in itertools.product(range(inst.facilities), repeat=len(customers)):
        used = set(assign)
        cost = sum(inst.open_costs[j] for j in used)
        cost += sum(inst.connect[c - 1, j] for c, j in zip(customers, assign))
        best = min(best, float(cost))
    return best


def mlb_opt_by_enumeration(p) -> tuple[tuple[int, ...], float]:
    """Best assignment over all m^n machine choices; first optimum in
    lexicographic order wins."""
    best, best_a = math.inf, None
    for a in itertools.product(range(p.m), repeat=p.n):
        v = p.makespan(a)
        if v < best:
            best, best_a = v, a
    return best_a, best


def lp_opt_by_vertices(c, rows, maximize=True):
    """LP optimum by enumerating basic points: intersections of every
    n-subset of the constraint planes (including x_i = 0), filtered for
    feasibility. Assumes a bounded feasible optimum exists."""
    c = np.asarray(c, dtype=float)
    n = len(c)
    planes = []
    for coeffs, rel, rhs in rows:
        planes.append((np.asarray(coeffs, dtype=float), rel, float(rhs)))
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        planes.append((e, ">=", 0.0))
    best = None
    for combo in itertools.combinations(range(len(planes)), n):
        a = np.array([planes[k][0] for k in combo])
        b = np.array([planes[k][2] for k in combo])
        try:
            x = np.linalg.solve(a, b)
        except np.linalg.LinAlgError:
            continue
        feas = True
        for coeffs, rel, rhs in planes:
            v = float(coeffs @ x)
            if rel == "<=" and v > rhs + 1e-7:
                feas = False
            elif rel == ">=" and v < rhs - 1e-7:
                feas = False
            elif rel == "==" and abs(v - rhs) > 1e-7:
                feas = False
            if not feas:
                break
        if not feas:
            continue
        val = float(c @ x)
        if best is None or (val > best if maximize else val < best):
            best = val
    return best


def best_open_tour(d: np.ndarray, root: int, targets: list[int]) -> float:
    """Cheapest open path from the root through all targets, by
    enumerating every visiting order."""
    if not targets:
        return 0.0
    best = math.inf
    for perm in itertools.permutations(targets):
        cost = float(d[root, perm[0]])
        for a, b in zip(perm, perm[1:]):
            cost += float(d[a, b])
        best = min(best, cost)
    return best


def random_euclidean_points(seed: int, k: int, extent: float = 10.0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, extent, size=(k, 2))
