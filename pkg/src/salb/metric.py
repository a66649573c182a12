"""Rooted metrics and the spanning-tree / facility-location oracles.

A Metric stores the full distance matrix over {root} union V with the
root at index 0 and element i of V at row i, so 1-based element labels
double as matrix indices. Spanning trees are grown with Prim's
algorithm and deterministic smallest-index tie-breaking, which keeps
tree-derived weights and all downstream traces reproducible.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass

import numpy as np

from .setfn import (
    TOL,
    CapabilityError,
    GroundSet,
    OracleFlags,
    SetFunctionOracle,
    cardinality,
)


class MetricError(ValueError):
    """The distance matrix is not a metric; the message names indices."""


@dataclass(frozen=True, eq=False)
class Metric:
    """Validated symmetric nonnegative matrix satisfying the triangle
    inequality. Build via validate_metric."""

    d: np.ndarray

    @property
    def size(self) -> int:
        return self.d.shape[0]

    @property
    def n(self) -> int:
        """Number of non-root elements under the root-at-0 convention."""
        return self.size - 1

    def ground(self) -> GroundSet:
        return GroundSet(self.n)


def validate_metric(d, tol: float = TOL) -> Metric:
    """Check symmetry, zero diagonal, nonnegativity, and all triangle
    inequalities; raise MetricError naming the first offending indices."""
    arr = np.asarray(d, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise MetricError(f"distance matrix must be square, got shape {arr.shape}")
    k = arr.shape[0]
    if k == 0:
        raise MetricError("distance matrix must have at least one node")
    for i in range(k):
        if arr[i, i] != 0:
            raise MetricError(f"nonzero diagonal at node {i}: {arr[i, i]}")
    for i in range(k):
        for j in range(i + 1, k):
            if arr[i, j] != arr[j, i]:
                raise MetricError(f"asymmetry at ({i}, {j}): {arr[i, j]} != {arr[j, i]}")
            if arr[i, j] < 0:
                raise MetricError(f"negative distance at ({i}, {j}): {arr[i, j]}")
    for j in range(k):  # d(i,k) <= d(i,j) + d(j,k), vectorized over (i,k) per middle node
        via = arr[:, j][:, None] + arr[j, :][None, :]
        bad = arr > via + tol
        if bad.any():
            i, l = np.argwhere(bad)[0]
            raise MetricError(
                f"triangle violation ({i}, {j}, {l}): d({i},{l})={arr[i, l]} > {arr[i, j]} + {arr[j, l]}"
            )
    return Metric(arr)


@dataclass(frozen=True)
class SpanningTree:
    """A minimum spanning tree over {root} union S. `parent` maps each
    non-root node to its neighbor on the path toward the root."""

    root: int
    nodes: tuple[int, ...]  # includes the root
    parent: dict[int, int]
    cost: float

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.parent.items()))


def _prim(d: np.ndarray, idx: list[int]) -> tuple[float, dict[int, int]]:
    """Prim from idx[0] over the submatrix d[idx][:, idx]. Ties go to
    the smallest local index, hence to the smallest node label when
    idx is sorted after the root."""
    k = len(idx)
    if k == 1:
        return 0.0, {}
    sub = d[np.ix_(idx, idx)]
    in_tree = np.zeros(k, dtype=bool)
    in_tree[0] = True
    best = sub[0].copy()
    best[0] = np.inf
    parent_loc = np.zeros(k, dtype=np.int64)
    total = 0.0
    parents: dict[int, int] = {}
    for _ in range(k - 1):
        masked = np.where(in_tree, np.inf, best)
        v = int(np.argmin(masked))
        total += float(best[v])
        parents[idx[v]] = idx[int(parent_loc[v])]
        in_tree[v] = True
        better = sub[v] < best
        parent_loc[better] = v
        best = np.where(better, sub[v], best)
        best[v] = np.inf
    return total, parents


def mst(metric: Metric, root: int, subset_mask: int) -> SpanningTree:
    """Minimum spanning tree of {root} union the masked elements."""
    metric.ground().check_mask(subset_mask)
    elems = metric.ground().elements(subset_mask)
    if root in elems:
        raise ValueError(f"root {root} also appears as an element of the subset")
    idx = [root, *elems]
    cost, parents = _prim(metric.d, idx)
    return SpanningTree(root, tuple(idx), parents, cost)


def mst_oracle(metric: Metric, root: int = 0) -> SetFunctionOracle:
    """The spanning-tree cost as a set function of the covered elements:
    normalized, nonnegative, subadditive, and singleton-minimal, but in
    general neither nondecreasing nor submodular."""
    ground = metric.ground()

    @functools.lru_cache(maxsize=None)
    def fn(mask: int) -> float:
        return mst(metric, root, mask).cost

    flags = OracleFlags(normalized=True, nonnegative=True, subadditive=True, s_minimal=True)
    return SetFunctionOracle(ground, fn, flags, "mst")


def mst_beta_oracle(metric: Metric, root: int = 0, beta: float = 0.0) -> SetFunctionOracle:
    """Spanning-tree cost plus a uniform per-element weight beta."""
    if beta < 0:
        raise ValueError(f"per-element weight must be nonnegative, got {beta}")
    base = mst_oracle(metric, root)
    if beta == 0:
        return base

    def fn(mask: int) -> float:
        return base(mask) + beta * cardinality(mask)

    return SetFunctionOracle(base.ground, fn, base.flags, f"mst+{beta:g}|S|")


# ---------------------------------------------------------------------------
# Facility location


@dataclass(frozen=True, eq=False)
class FacilityInstance:
    """Customers connect to opened facilities; opening facility j costs
    open_costs[j] and connecting customer i to it costs connect[i, j].
    Evaluation enumerates facility subsets, so at most 20 facilities."""

    open_costs: tuple[float, ...]
    connect: np.ndarray  # (customers, facilities)

    def __post_init__(self) -> None:
        if self.connect.ndim != 2 or self.connect.shape[1] != len(self.open_costs):
            raise ValueError("connection matrix must be customers x facilities")
        if len(self.open_costs) > 20:
            raise CapabilityError("facility-subset enumeration is capped at 20 facilities")
        if any(o < 0 for o in self.open_costs) or (self.connect < 0).any():
            raise ValueError("facility costs must be nonnegative")

    @property
    def customers(self) -> int:
        return self.connect.shape[0]

    @property
    def facilities(self) -> int:
        return self.connect.shape[1]

    def ground(self) -> GroundSet:
        return GroundSet(self.customers)


def facility_location(inst: FacilityInstance, subset_mask: int) -> float:
    """Cheapest way to serve exactly the masked customers: open some
    nonempty facility set and connect each customer to its best open
    facility. Serving nobody costs nothing."""
    inst.ground().check_mask(subset_mask)
    if subset_mask == 0:
        return 0.0
    if inst.facilities == 0:
        raise ValueError("no facilities available but customers need service")
    rows = [i - 1 for i in inst.ground().elements(subset_mask)]
    conn = inst.connect[rows]
    opens = np.array(inst.open_costs)
    best = np.inf
    for fs in range(1, 1 << inst.facilities):
        cols = [j for j in range(inst.facilities) if fs >> j & 1]
        cost = opens[cols].sum() + conn[:, cols].min(axis=1).sum()
        if cost < best:
            best = float(cost)
    return best


def facility_oracle(inst: FacilityInstance) -> SetFunctionOracle:
    @functools.lru_cache(maxsize=None)
    def fn(mask: int) -> float:
        return facility_location(inst, mask)

    flags = OracleFlags(
        normalized=True, nonnegative=True, nondecreasing=True, subadditive=True, s_minimal=True
    )
    return SetFunctionOracle(inst.ground(), fn, flags, "facility-location")


# ---------------------------------------------------------------------------
# Tree-based cost sharing


@dataclass(frozen=True)
class BirdWeights:
    """Per-element cost shares read off the full spanning tree: each
    element pays the edge to its parent. Shares sum to the full tree
    cost and never overshoot the tree cost of any coalition."""

    weights: tuple[float, ...]
    tree: SpanningTree

    def share(self, subset_mask: int) -> float:
        total = 0.0
        for pos, w in enumerate(self.weights):
            if subset_mask >> pos & 1:
                total += w
        return total


def bird_weights(metric: Metric, root: int = 0) -> BirdWeights:
    ground = metric.ground()
    tree = mst(metric, root, ground.full_mask)
    w = tuple(float(metric.d[i, tree.parent[i]]) for i in range(1, ground.n + 1))
    return BirdWeights(w, tree)


# ---------------------------------------------------------------------------
# Instance generation and JSON formats


def random_euclidean_metric(seed: int, n: int, extent: float = 1.0) -> Metric:
    """Root plus n points placed uniformly in a square of the given
    extent, with exact Euclidean distances."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, extent, size=(n + 1, 2))
    return euclidean_metric(pts)


def euclidean_metric(points) -> Metric:
    pts = np.asarray(points, dtype=np.float64)
    diff = pts[:, None, :] - pts[None, :, :]
    d = np.sqrt((diff * diff).sum(axis=2))
    d = (d + d.T) / 2.0  # force exact symmetry
    np.fill_diagonal(d, 0.0)
    return Metric(d)


def metric_to_json(metric: Metric) -> str:
    payload = {"n": metric.n, "root": 0, "d": metric.d.tolist()}
    return json.dumps(payload, sort_keys=True)


def metric_from_json(text: str) -> Metric:
    payload = json.loads(text)
    d = np.asarray(payload["d"], dtype=np.float64)
    if d.shape != (payload["n"] + 1, payload["n"] + 1):
        raise ValueError(f"matrix shape {d.shape} does not match n = {payload['n']}")
    if payload.get("root", 0) != 0:
        raise ValueError("root must be index 0")
    return validate_metric(d)


def facility_from_json(text: str) -> FacilityInstance:
    payload = json.loads(text)
    connect = np.asarray(payload["connect"], dtype=np.float64)
    inst = FacilityInstance(tuple(float(o) for o in payload["open"]), connect)
    if inst.customers != payload["customers"] or inst.facilities != payload["facilities"]:
        raise ValueError("declared sizes do not match the connection matrix")
    return inst


def facility_to_json(inst: FacilityInstance) -> str:
    payload = {
        "customers": inst.customers,
        "facilities": inst.facilities,
        "open": list(inst.open_costs),
        "connect": inst.connect.tolist(),
    }
    return json.dumps(payload, sort_keys=True)
