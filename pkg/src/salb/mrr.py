"""Multi-robot routing on top of the load-balancing solvers.

An instance is m robot roots and n targets with a full symmetric
distance matrix (Euclidean when generated from coordinates, arbitrary
metric otherwise). Each robot's tree cost is the spanning-tree value
over its root plus its assigned targets, optionally plus a uniform
waiting time per target; the team objective is the worst robot.
Pipelines assign targets (greedy / modularization iterations / an
insertion auction), convert trees to open paths, and attach a
certified lower bound.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .balance import (
    LowerBoundCert,
    MminTrace,
    cert_to_dict,
    greedy,
    initial_partition,
    mmin,
    mst_lower_bound,
    salb_objective,
    trace_to_dict,
)
from .metric import Metric, SpanningTree, mst, mst_beta_oracle, validate_metric
from .mlb import EXACT_N_LIMIT
from .setfn import Partition, SetFunctionOracle, mask_elements

ALGORITHMS = ("GREEDY", "MMIN", "MMIN_GREEDY", "AUCTION_PATH")
DEFAULT_NODE_BUDGET = 600_000
DEFAULT_LB_NODE_BUDGET = 100_000


@dataclass(frozen=True, eq=False)
class MrrInstance:
    """Robots occupy matrix rows 0..m-1, target i sits at row m+i-1.
    Coordinates are kept when the instance was generated from points;
    hand-built matrices leave them as None."""

    m: int
    n: int
    beta: float
    dist: np.ndarray
    seed: Optional[int] = None
    robots: Optional[tuple[tuple[float, float], ...]] = None
    targets: Optional[tuple[tuple[float, float], ...]] = None

    def __post_init__(self) -> None:
        if self.m < 1 or self.n < 0:
            raise ValueError("need at least one robot and a nonnegative target count")
        if self.beta < 0:
            raise ValueError(f"waiting time must be nonnegative, got {self.beta}")
        if self.dist.shape != (self.m + self.n, self.m + self.n):
            raise ValueError("distance matrix shape does not match robots + targets")

    def robot_metric(self, j: int) -> Metric:
        """The robot's view: its root at index 0, every target after."""
        idx = [j, *range(self.m, self.m + self.n)]
        return Metric(self.dist[np.ix_(idx, idx)])


def make_instance(dist, m: int, n: int, beta: float, seed=None, robots=None, targets=None) -> MrrInstance:
    metric = validate_metric(dist)
    return MrrInstance(m, n, float(beta), metric.d, seed, robots, targets)


def generate_instance(seed: int, m: int, n: int, beta: float, extent: float = 1000.0) -> MrrInstance:
    """Seeded uniform placement in a square; exact Euclidean distances.
    The same seed always produces the same instance."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, extent, size=(m + n, 2))
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    dist = (dist + dist.T) / 2.0
    np.fill_diagonal(dist, 0.0)
    robots = tuple((float(x), float(y)) for x, y in pts[:m])
    targets = tuple((float(x), float(y)) for x, y in pts[m:])
    return MrrInstance(m, n, float(beta), dist, int(seed), robots, targets)


def instance_to_json(inst: MrrInstance) -> str:
    if inst.robots is None or inst.targets is None:
        raise ValueError("only coordinate-backed instances serialize to JSON")
    payload = {
        "seed": inst.seed,
        "beta": inst.beta,
        "robots": [list(p) for p in inst.robots],
        "targets": [list(p) for p in inst.targets],
    }
    return json.dumps(payload, sort_keys=True) + "\n"


def instance_from_json(text: str) -> MrrInstance:
    payload = json.loads(text)
    robots = [tuple(map(float, p)) for p in payload["robots"]]
    targets = [tuple(map(float, p)) for p in payload["targets"]]
    pts = np.array(robots + targets, dtype=np.float64)
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    dist = (dist + dist.T) / 2.0
    np.fill_diagonal(dist, 0.0)
    return MrrInstance(
        len(robots),
        len(targets),
        float(payload["beta"]),
        dist,
        payload.get("seed"),
        tuple(robots),
        tuple(targets),
    )


def rtc_oracles(inst: MrrInstance) -> list[SetFunctionOracle]:
    """Per robot, its tree cost (plus waiting time) as a set function of
    the assigned targets."""
    return [mst_beta_oracle(inst.robot_metric(j), 0, inst.beta) for j in range(inst.m)]


# ---------------------------------------------------------------------------
# Paths


@dataclass(frozen=True)
class RobotPath:
    """Open path from a robot's root through its targets; cost is the
    travelled distance plus the waiting time per visited target."""

    visits: tuple[int, ...]  # target labels, in visit order
    cost: float


def path_cost(metric: Metric, visits: Sequence[int], beta: float) -> float:
    total = beta * len(visits)
    prev = 0
    for t in visits:
        total += float(metric.d[prev, t])
        prev = t
    return total


def shortcut_path(metric: Metric, tree: SpanningTree, beta: float = 0.0) -> RobotPath:
    """Walk the tree depth-first from the root (children in ascending
    order) and keep each node's first visit: an open path of travel cost
    at most twice the tree cost under the triangle inequality."""
    children: dict[int, list[int]] = {}
    for child, parent in tree.parent.items():
        children.setdefault(parent, []).append(child)
    for lst in children.values():
        lst.sort()
    visits: list[int] = []
    stack = [tree.root]
    while stack:
        node = stack.pop()
        if node != tree.root:
            visits.append(node)
        stack.extend(reversed(children.get(node, ())))
    return RobotPath(tuple(visits), path_cost(metric, visits, beta))


def insertion_extend(metric: Metric, path: RobotPath, target: int, beta: float) -> RobotPath:
    """Insert the target at the position (either end included) that
    minimizes the resulting open-path cost; ties take the earliest
    position."""
    if target in path.visits:
        raise ValueError(f"target {target} is already on the path")
    visits = path.visits
    k = len(visits)
    d = metric.d
    best_slot = 0
    best_delta = math.inf
    for slot in range(k + 1):
        before = visits[slot - 1] if slot > 0 else 0
        if slot < k:
            after = visits[slot]
            delta = float(d[before, target] + d[target, after] - d[before, after])
        else:
            delta = float(d[before, target])
        if delta < best_delta - 1e-15:
            best_delta = delta
            best_slot = slot
    new_visits = visits[:best_slot] + (target,) + visits[best_slot:]
    return RobotPath(new_visits, path.cost + best_delta + beta)


def auction_path(inst: MrrInstance) -> tuple[list[RobotPath], Partition]:
    """Insertion auction: each round every robot bids its cheapest
    extended path over the unassigned targets, and the smallest
    resulting path cost wins that target. Ties prefer the smaller
    target label, then the smaller robot index."""
    metrics = [inst.robot_metric(j) for j in range(inst.m)]
    paths = [RobotPath((), 0.0) for _ in range(inst.m)]
    assignment = [0] * inst.n
    unassigned = list(range(1, inst.n + 1))
    while unassigned:
        best_key = None
        best_path = None
        for j in range(inst.m):
            for t in unassigned:
                cand = insertion_extend(metrics[j], paths[j], t, inst.beta)
                key = (cand.cost, t, j)
                if best_key is None or key < best_key:
                    best_key, best_path = key, cand
        _, t, j = best_key
        paths[j] = best_path
        assignment[t - 1] = j
        unassigned.remove(t)
    return paths, Partition(tuple(assignment), inst.m)


# ---------------------------------------------------------------------------
# Pipelines


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs for one pipeline run. Budgets are node counts, not wall
    time, so identical configurations reproduce identical results; None
    means choose automatically (unbudgeted up to the exact-search cap,
    a fixed default beyond it)."""

    max_iters: int = 20
    mlb_mode: str = "exact"
    node_budget: Optional[int] = None
    lb_node_budget: Optional[int] = None

    def resolve_budget(self, n: int) -> Optional[int]:
        if self.node_budget is not None:
            return self.node_budget
        return None if n <= EXACT_N_LIMIT else DEFAULT_NODE_BUDGET

    def resolve_lb_budget(self, n: int) -> Optional[int]:
        if self.lb_node_budget is not None:
            return self.lb_node_budget
        return None if n <= EXACT_N_LIMIT else DEFAULT_LB_NODE_BUDGET


@dataclass(frozen=True)
class MrrReport:
    algo: str
    seed: Optional[int]
    m: int
    n: int
    beta: float
    partition: Partition
    paths: tuple[RobotPath, ...]
    rtc: float
    rpc: float
    lb: float
    alpha_max: float
    pseudo_curvature: float
    iters: int
    times: dict[str, float]
    config: dict
    cert: Optional[LowerBoundCert] = None
    trace: Optional[MminTrace] = None


def mst_beta_pseudo_curvature(inst: MrrInstance) -> float:
    """Curvature surrogate of the tree-plus-waiting-time objective,
    taken as the worst robot's value: with no waiting time it is exactly
    one; it strictly decreases as the waiting time grows."""
    if inst.n == 0:
        return 0.0
    if inst.beta == 0.0:
        return 1.0
    worst = -math.inf
    for j in range(inst.m):
        dr = inst.dist[j, inst.m:]
        ratio = float((inst.beta / (dr + inst.beta)).min())
        worst = max(worst, 1.0 - ratio)
    return worst


def _insertion_paths(inst: MrrInstance, partition: Partition) -> list[RobotPath]:
    """Fixed-partition paths: extend each robot's path by its targets in
    ascending label order with the insertion rule."""
    out = []
    for j in range(inst.m):
        metric = inst.robot_metric(j)
        path = RobotPath((), 0.0)
        for t in mask_elements(partition.part(j)):
            path = insertion_extend(metric, path, t, inst.beta)
        out.append(path)
    return out


def _shortcut_paths(inst: MrrInstance, partition: Partition) -> list[RobotPath]:
    out = []
    for j in range(inst.m):
        metric = inst.robot_metric(j)
        tree = mst(metric, 0, partition.part(j))
        out.append(shortcut_path(metric, tree, inst.beta))
    return out


def run_pipeline(inst: MrrInstance, algo: str, cfg: PipelineConfig = PipelineConfig()) -> MrrReport:
    if algo not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algo!r}; choose from {ALGORITHMS}")
    t_start = time.perf_counter()
    times: dict[str, float] = {}
    budget = cfg.resolve_budget(inst.n)
    trace: Optional[MminTrace] = None
    oracles = rtc_oracles(inst)

    t0 = time.perf_counter()
    if algo == "AUCTION_PATH":
        paths, partition = auction_path(inst)
        iters = 0
    elif algo == "GREEDY":
        partition = greedy(oracles)
        iters = 0
        paths = None
    else:
        if algo == "MMIN":
            init = initial_partition(oracles, mlb_mode=cfg.mlb_mode, node_budget=budget)
        else:  # MMIN_GREEDY
            init = greedy(oracles)
        trace = mmin(oracles, init, max_iters=cfg.max_iters, node_budget=budget)
        partition = trace.best_partition
        iters = trace.solves
        paths = None
    times["assign"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if paths is None:
        paths = _shortcut_paths(inst, partition) if algo == "GREEDY" else _insertion_paths(inst, partition)
    times["paths"] = time.perf_counter() - t0

    rtc = salb_objective(oracles, partition)
    rpc = max((p.cost for p in paths), default=0.0)

    t0 = time.perf_counter()
    cert = mst_lower_bound(
        [inst.robot_metric(j) for j in range(inst.m)],
        inst.beta,
        partition,
        node_budget=cfg.resolve_lb_budget(inst.n),
    )
    times["lb"] = time.perf_counter() - t0
    times["total"] = time.perf_counter() - t_start

    return MrrReport(
        algo=algo,
        seed=inst.seed,
        m=inst.m,
        n=inst.n,
        beta=inst.beta,
        partition=partition,
        paths=tuple(paths),
        rtc=rtc,
        rpc=rpc,
        lb=cert.value,
        alpha_max=cert.alpha,
        pseudo_curvature=mst_beta_pseudo_curvature(inst),
        iters=iters,
        times=times,
        config={
            "max_iters": cfg.max_iters,
            "mlb_mode": cfg.mlb_mode,
            "node_budget": budget,
            "lb_node_budget": cfg.resolve_lb_budget(inst.n),
        },
        cert=cert,
        trace=trace,
    )


def report_to_dict(report: MrrReport) -> dict:
    return {
        "algo": report.algo,
        "seed": report.seed,
        "m": report.m,
        "n": report.n,
        "beta": report.beta,
        "assignment": list(report.partition.assignment),
        "paths": [{"visits": list(p.visits), "cost": p.cost} for p in report.paths],
        "rtc": report.rtc,
        "rpc": report.rpc,
        "lb": report.lb,
        "alpha_max": report.alpha_max,
        "pseudo_curvature": report.pseudo_curvature,
        "iters": report.iters,
        "times": report.times,
        "config": report.config,
        "cert": cert_to_dict(report.cert) if report.cert else None,
        "trace": trace_to_dict(report.trace) if report.trace else None,
    }


def verify_report(inst: MrrInstance, report: MrrReport) -> None:
    """Recompute every headline number of a report from its stored
    partition, paths, and the instance; raise on any mismatch."""
    oracles = rtc_oracles(inst)
    rtc = salb_objective(oracles, report.partition)
    if rtc != report.rtc:
        raise ValueError(f"stored rtc {report.rtc} != recomputed {rtc}")
    for j, p in enumerate(report.paths):
        c = path_cost(inst.robot_metric(j), p.visits, inst.beta)
        if abs(c - p.cost) > 1e-9:
            raise ValueError(f"stored path cost {p.cost} != recomputed {c} for robot {j}")
    rpc = max((p.cost for p in report.paths), default=0.0)
    if abs(rpc - report.rpc) > 1e-9:
        raise ValueError(f"stored rpc {report.rpc} != recomputed {rpc}")
    cert = mst_lower_bound(
        [inst.robot_metric(j) for j in range(inst.m)],
        inst.beta,
        report.partition,
        node_budget=report.config.get("lb_node_budget"),
    )
    if cert.value != report.lb or cert.alpha != report.alpha_max:
        raise ValueError("stored lower bound does not reproduce")
