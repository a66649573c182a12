"""Minimax load balancing with subadditive per-part costs.

The objective of a partition is the largest per-part oracle value. The
solver suite: a greedy assigner, the modularization-minimization loop
(fit modular approximations at the current partition, re-solve the
modular load-balancing problem, repeat), an exhaustive reference
solver, and lower-bound certificates built from approximate modular
minorizations (tree cost shares, or exact polymatroid minorizations in
the submodular case).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .interp import submodular_minorization
from .metric import Metric, bird_weights, mst, mst_beta_oracle
from .mlb import MlbResult, mlb_problem, solve_mlb_detailed, solve_mlb_lst
from .setfn import (
    CapabilityError,
    ModularFn,
    Partition,
    SetFunctionOracle,
    cardinality,
)

MODULAR_SCHEMES = ("local", "remove_at_ground", "add_at_empty")
BRUTE_FORCE_LIMIT = 10_000_000
VERIFY_N_LIMIT = 10


def _check_suite(gs: Sequence[SetFunctionOracle]) -> tuple[int, int]:
    if not gs:
        raise ValueError("need at least one oracle")
    n = gs[0].ground.n
    for g in gs:
        if g.ground.n != n:
            raise ValueError("all oracles must share one ground set")
    return len(gs), n


def salb_objective(gs: Sequence[SetFunctionOracle], partition: Partition) -> float:
    """Largest per-part value: max_j g_j(S_j)."""
    m, n = _check_suite(gs)
    if partition.m != m or partition.n != n:
        raise ValueError("partition shape does not match the oracle suite")
    return max(g(mask) for g, mask in zip(gs, partition.parts()))


def greedy(gs: Sequence[SetFunctionOracle]) -> Partition:
    """Assign one element per round: every part nominates the unassigned
    element with the cheapest extension, the cheapest nomination wins.
    Ties prefer the smallest element, then the smallest part index."""
    m, n = _check_suite(gs)
    parts = [0] * m
    unassigned = list(range(1, n + 1))
    assignment = [0] * n
    while unassigned:
        best = None  # (value, element, part)
        for j, g in enumerate(gs):
            for i in unassigned:
                val = g(parts[j] | 1 << (i - 1))
                key = (val, i, j)
                if best is None or key < best:
                    best = key
        val, i, j = best
        parts[j] |= 1 << (i - 1)
        assignment[i - 1] = j
        unassigned.remove(i)
    return Partition(tuple(assignment), m)


def modular_approx(g: SetFunctionOracle, anchor_mask: int, scheme: str = "local") -> ModularFn:
    """Modular approximation of g anchored at a set: agrees with g at
    the anchor exactly in every scheme.

    local: add marginals at the anchor, remove marginals at the anchor.
    remove_at_ground: removal marginals taken at the full ground set.
    add_at_empty: addition marginals taken at the empty set.
    The two alternative schemes majorize a submodular g but not a
    merely subadditive one.
    """
    if scheme not in MODULAR_SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {MODULAR_SCHEMES}")
    ground = g.ground
    ground.check_mask(anchor_mask)
    full = ground.full_mask
    anchor_val = g(anchor_mask)
    offset = anchor_val
    weights = []
    for i in range(1, ground.n + 1):
        bit = 1 << (i - 1)
        if anchor_mask & bit:
            if scheme == "remove_at_ground":
                w = g(full) - g(full & ~bit)
            else:
                w = anchor_val - g(anchor_mask & ~bit)
            offset -= w
        else:
            if scheme == "add_at_empty":
                w = g(bit) - g(0)
            else:
                w = g(anchor_mask | bit) - anchor_val
        weights.append(float(w))
    return ModularFn(float(offset), tuple(weights))


def _mlb_from_modulars(models: Sequence[ModularFn]) -> "MlbProblem":
    return mlb_problem(
        [mo.offset for mo in models], [list(mo.weights) for mo in models]
    )


def initial_partition(
    gs: Sequence[SetFunctionOracle],
    mlb_mode: str = "exact",
    node_budget: Optional[int] = None,
) -> Partition:
    """Balance the singleton values: machine j pays g_j({i}) for element
    i, no offsets. Solved exactly by default; the threshold-rounding
    solver may be configured when the data is nonnegative."""
    m, n = _check_suite(gs)
    costs = [[marginal_free(g, i) for i in range(1, n + 1)] for g in gs]
    prob = mlb_problem([0.0] * m, costs)
    if mlb_mode == "lst":
        part, _ = solve_mlb_lst(prob)
        return part
    if mlb_mode != "exact":
        raise ValueError(f"unknown mlb mode {mlb_mode!r}")
    res = solve_mlb_detailed(prob, node_budget=node_budget)
    return res.partition


def marginal_free(g: SetFunctionOracle, i: int) -> float:
    """Singleton value g({i}); the cost row of the initial balancing."""
    return g(1 << (i - 1))


@dataclass(frozen=True)
class MminStep:
    iteration: int
    partition: Partition
    true_objective: float
    model_objective: float  # nan at iteration 0: the start has no model


@dataclass(frozen=True)
class MminTrace:
    """Record of one modularization-minimization run. steps[0] is the
    initial partition; each later step is one re-solve. A terminal
    re-solve that reproduces the previous partition (fixed point) or any
    earlier one (cycle) is not appended, the reason field records it."""

    steps: tuple[MminStep, ...]
    reason: str  # fixed_point | cycle | iteration_cap
    solves: int

    @property
    def best_step(self) -> MminStep:
        return min(self.steps, key=lambda s: (s.true_objective, s.iteration))

    @property
    def best_partition(self) -> Partition:
        return self.best_step.partition

    @property
    def best_objective(self) -> float:
        return self.best_step.true_objective


def mmin(
    gs: Sequence[SetFunctionOracle],
    init: Partition,
    max_iters: int = 100,
    node_budget: Optional[int] = None,
    scheme: str = "local",
) -> MminTrace:
    """Iterate: fit modular approximations at the current partition,
    solve the modular load-balancing problem, move there. Stops at a
    fixed point, on revisiting any earlier partition, or at the
    iteration cap; the best partition under the true objective is
    tracked across the whole run, so the result never loses to the
    start."""
    m, n = _check_suite(gs)
    if init.m != m or init.n != n:
        raise ValueError("initial partition shape does not match the oracle suite")

    def true_obj(p: Partition) -> float:
        return salb_objective(gs, p)

    steps = [MminStep(0, init, true_obj(init), math.nan)]
    visited = {init.assignment}
    current = init
    reason = "iteration_cap"
    solves = 0
    for k in range(1, max_iters + 1):
        models = [modular_approx(g, current.part(j), scheme) for j, g in enumerate(gs)]
        res = solve_mlb_detailed(
            _mlb_from_modulars(models), node_budget=node_budget, warm_start=current.assignment
        )
        solves += 1
        nxt = res.partition
        if nxt == current:
            reason = "fixed_point"
            break
        if nxt.assignment in visited:
            reason = "cycle"
            break
        steps.append(MminStep(k, nxt, true_obj(nxt), res.value))
        visited.add(nxt.assignment)
        current = nxt
    return MminTrace(tuple(steps), reason, solves)


def brute_force_salb(gs: Sequence[SetFunctionOracle]) -> tuple[Partition, float]:
    """Exhaustive minimization of the minimax objective over all m^n
    assignments; ties resolve to the lexicographically smallest
    assignment vector."""
    m, n = _check_suite(gs)
    if m**n > BRUTE_FORCE_LIMIT:
        raise CapabilityError(f"{m}^{n} assignments exceed the brute-force limit")
    memo: list[dict[int, float]] = [{} for _ in range(m)]

    def val(j: int, mask: int) -> float:
        cache = memo[j]
        v = cache.get(mask)
        if v is None:
            v = gs[j](mask)
            cache[mask] = v
        return v

    best = math.inf
    best_assign: Optional[tuple[int, ...]] = None
    import itertools

    for assign in itertools.product(range(m), repeat=n):
        masks = [0] * m
        for pos, j in enumerate(assign):
            masks[j] |= 1 << pos
        v = max(val(j, masks[j]) for j in range(m))
        if v < best:
            best = v
            best_assign = assign
    return Partition(best_assign, m), best


# ---------------------------------------------------------------------------
# Lower bounds


@dataclass(frozen=True)
class LowerBoundCert:
    """A certified lower bound on the minimax optimum: value =
    mlb_bound / alpha where mlb_bound is a proven bound on the modular
    load-balancing optimum under the stored minorizations. When that
    solve ran to completion, mlb_bound equals the makespan of the
    stored partition, so the certificate is recomputable from its own
    fields."""

    alpha: float
    minorizations: tuple[ModularFn, ...]
    partition: Partition
    mlb_makespan: float
    mlb_bound: float
    value: float
    per_part_alpha: Optional[tuple[float, ...]] = None
    complete: bool = True


class DegenerateGeometryError(ValueError):
    """All cost shares of a nonempty part vanish (coincident points)."""


def lower_bound(
    gs: Sequence[SetFunctionOracle],
    minorizations: Sequence[ModularFn],
    alpha: float,
    node_budget: Optional[int] = None,
    per_part_alpha: Optional[tuple[float, ...]] = None,
) -> LowerBoundCert:
    """Certify max_j g_j >= mlb_bound / alpha for every partition, given
    minorizations with alpha * g_j(S) >= M_j(S) everywhere. The warrant
    is the caller's, but it is spot-checked by full enumeration on
    small ground sets."""
    m, n = _check_suite(gs)
    if alpha < 1.0:
        raise ValueError(f"alpha must be at least 1, got {alpha}")
    if len(minorizations) != m:
        raise ValueError("need one minorization per part")
    for mo in minorizations:
        if mo.n != n:
            raise ValueError("minorization arity differs from the ground set")
    if n <= VERIFY_N_LIMIT:
        for j, (g, mo) in enumerate(zip(gs, minorizations)):
            for mask in g.ground.subsets():
                if alpha * g(mask) < mo(mask) - 1e-9:
                    raise ValueError(
                        f"minorization {j} exceeds alpha * g at mask {mask:#x}: "
                        f"{mo(mask)} > {alpha} * {g(mask)}"
                    )
    res: MlbResult = solve_mlb_detailed(_mlb_from_modulars(minorizations), node_budget=node_budget)
    return LowerBoundCert(
        alpha=float(alpha),
        minorizations=tuple(minorizations),
        partition=res.partition,
        mlb_makespan=res.value,
        mlb_bound=res.proven_bound,
        value=res.proven_bound / alpha,
        per_part_alpha=per_part_alpha,
        complete=res.complete,
    )


def mst_lower_bound(
    metrics: Sequence[Metric],
    beta: float,
    partition: Partition,
    node_budget: Optional[int] = None,
) -> LowerBoundCert:
    """Lower bound for tree-cost balancing from per-tree cost shares.

    For each part, the cost shares (plus beta) are scaled so the
    minorization is tight at that part; the certificate then uses the
    worst per-part scale. Empty parts contribute scale 1 and the plain
    shares."""
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    m = len(metrics)
    if partition.m != m:
        raise ValueError("partition part count differs from the metric count")
    n = partition.n
    for mtr in metrics:
        if mtr.n != n:
            raise ValueError("every metric must cover the full element set")
    alphas = []
    minors = []
    for j, mtr in enumerate(metrics):
        bw = bird_weights(mtr)
        part = partition.part(j)
        size = cardinality(part)
        if size:
            share = bw.share(part)
            if share == 0.0:
                raise DegenerateGeometryError(
                    f"part {j} has zero total cost share; its points coincide with their tree parents"
                )
            tree_val = mst(mtr, 0, part).cost + beta * size
            alpha_j = tree_val / (share + beta * size)
        else:
            alpha_j = 1.0
        alphas.append(float(alpha_j))
        minors.append(ModularFn(0.0, tuple(alpha_j * (w + beta) for w in bw.weights)))
    alpha = max(alphas)
    gs = [mst_beta_oracle(mtr, 0, beta) for mtr in metrics]
    cert = lower_bound(gs, minors, alpha, node_budget=node_budget, per_part_alpha=tuple(alphas))
    return cert


def smlb_lower_bound(
    fs: Sequence[SetFunctionOracle],
    partition: Partition,
    node_budget: Optional[int] = None,
) -> LowerBoundCert:
    """Exact (scale 1) lower bound for submodular suites: per part, the
    prefix-greedy minorization anchored at that part."""
    m, n = _check_suite(fs)
    if partition.m != m or partition.n != n:
        raise ValueError("partition shape does not match the oracle suite")
    minors = [submodular_minorization(f, partition.part(j)) for j, f in enumerate(fs)]
    return lower_bound(fs, minors, 1.0, node_budget=node_budget)


# ---------------------------------------------------------------------------
# Serialization


def trace_to_dict(trace: MminTrace) -> dict:
    return {
        "reason": trace.reason,
        "solves": trace.solves,
        "best": {
            "iteration": trace.best_step.iteration,
            "assignment": list(trace.best_partition.assignment),
            "objective": trace.best_objective,
        },
        "steps": [
            {
                "iteration": s.iteration,
                "assignment": list(s.partition.assignment),
                "true_objective": s.true_objective,
                "model_objective": None if math.isnan(s.model_objective) else s.model_objective,
            }
            for s in trace.steps
        ],
    }


def cert_to_dict(cert: LowerBoundCert) -> dict:
    return {
        "alpha": cert.alpha,
        "value": cert.value,
        "mlb_makespan": cert.mlb_makespan,
        "mlb_bound": cert.mlb_bound,
        "complete": cert.complete,
        "assignment": list(cert.partition.assignment),
        "per_part_alpha": list(cert.per_part_alpha) if cert.per_part_alpha else None,
        "minorizations": [
            {"offset": mo.offset, "weights": list(mo.weights)} for mo in cert.minorizations
        ],
    }
