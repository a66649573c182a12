"""Ground sets, subset masks, and set-function oracles.

Subsets of the ground set V = {1, ..., n} are plain Python ints used as
bit masks: bit k-1 stands for element k. Public APIs speak 1-based
element labels; masks are the internal currency shared by every oracle
and solver in this package.

Exhaustive operations (audits, curvature, unconstrained minimization)
enumerate subsets and are capped at n <= 20.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional

import numpy as np

TOL = 1e-9  # absolute tolerance for every inequality audit
ENUM_LIMIT = 20  # cap for exhaustive subset enumeration
MASK_WIDTH_LIMIT = 63


class CapabilityError(RuntimeError):
    """An exhaustive operation was asked to exceed its enumeration bound."""


@dataclass(frozen=True)
class GroundSet:
    """The ground set {1, ..., n}; n = 0 (empty universe) is allowed."""

    n: int

    def __post_init__(self) -> None:
        if not 0 <= self.n <= MASK_WIDTH_LIMIT:
            raise ValueError(f"ground set size must be in [0, {MASK_WIDTH_LIMIT}], got {self.n}")

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    def mask(self, elements: Iterable[int]) -> int:
        """Bit mask for a collection of 1-based elements."""
        m = 0
        for e in elements:
            if not 1 <= e <= self.n:
                raise ValueError(f"element {e} outside ground set of size {self.n}")
            m |= 1 << (e - 1)
        return m

    def elements(self, mask: int) -> tuple[int, ...]:
        """1-based elements of a mask, ascending."""
        self.check_mask(mask)
        return tuple(i + 1 for i in range(self.n) if mask >> i & 1)

    def check_mask(self, mask: int) -> int:
        if mask < 0 or mask & ~self.full_mask:
            raise ValueError(f"mask {mask:#x} has bits outside ground set of size {self.n}")
        return mask

    def subsets(self) -> Iterator[int]:
        """All 2^n masks, ascending. Requires n <= ENUM_LIMIT."""
        if self.n > ENUM_LIMIT:
            raise CapabilityError(f"cannot enumerate 2^{self.n} subsets (limit n <= {ENUM_LIMIT})")
        return iter(range(1 << self.n))


def cardinality(mask: int) -> int:
    return mask.bit_count()


def mask_elements(mask: int) -> tuple[int, ...]:
    """1-based element labels of a mask, ascending, without a GroundSet."""
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def iter_submasks(mask: int) -> Iterator[int]:
    """All submasks of `mask`, descending, ending with 0."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


@dataclass(frozen=True)
class OracleFlags:
    """Declared structural properties of a set function. Flags are
    promises made by the constructor, not verified facts; audits check
    them on small instances."""

    normalized: bool = False
    nonnegative: bool = False
    nondecreasing: bool = False
    subadditive: bool = False
    submodular: bool = False
    s_minimal: bool = False


@dataclass(frozen=True, eq=False)
class SetFunctionOracle:
    """An evaluatable set function g: 2^V -> R.

    `fn` maps a mask to a value and must be pure (same mask, same
    value); constructors are expected to wrap expensive evaluations in
    a cache. Oracles are immutable and safe to share across threads.
    """

    ground: GroundSet
    fn: Callable[[int], float]
    flags: OracleFlags = OracleFlags()
    name: str = "g"

    def __call__(self, mask: int) -> float:
        self.ground.check_mask(mask)
        return float(self.fn(mask))

    def table(self) -> np.ndarray:
        """Values at every subset, indexed by mask. Requires n <= ENUM_LIMIT."""
        return np.array([self(s) for s in self.ground.subsets()], dtype=np.float64)


def oracle_from_table(ground: GroundSet, values, flags: OracleFlags, name: str = "g") -> SetFunctionOracle:
    vals = [float(v) for v in values]
    if len(vals) != 1 << ground.n:
        raise ValueError("value table must have one entry per subset")
    return SetFunctionOracle(ground, vals.__getitem__, flags, name)


@dataclass(frozen=True)
class ModularFn:
    """M(S) = offset + sum of weights over S; the approximation currency
    of the modularization iterations and of every lower bound."""

    offset: float
    weights: tuple[float, ...]

    @property
    def n(self) -> int:
        return len(self.weights)

    def __call__(self, mask: int) -> float:
        total = self.offset
        w = self.weights
        i = 0
        while mask:
            if mask & 1:
                total += w[i]
            mask >>= 1
            i += 1
        return total

    def total(self) -> float:
        return self.offset + sum(self.weights)

    def as_oracle(self, name: str = "modular") -> SetFunctionOracle:
        nonneg = self.offset >= 0 and all(w >= 0 for w in self.weights)
        flags = OracleFlags(
            normalized=self.offset == 0,
            nonnegative=nonneg,
            nondecreasing=all(w >= 0 for w in self.weights),
            subadditive=nonneg,
            submodular=True,
            s_minimal=all(w >= 0 for w in self.weights),
        )
        return SetFunctionOracle(GroundSet(self.n), self.__call__, flags, name)


@dataclass(frozen=True)
class Partition:
    """An m-partition of the ground set: one part index per element.

    Parts may be empty. Part indices are 0-based; element positions
    follow the 1-based element order. Two partitions are equal iff
    their assignment vectors (and m) are equal.
    """

    assignment: tuple[int, ...]
    m: int

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError("partition needs at least one part")
        for a in self.assignment:
            if not 0 <= a < self.m:
                raise ValueError(f"part index {a} outside [0, {self.m})")

    @property
    def n(self) -> int:
        return len(self.assignment)

    def part(self, j: int) -> int:
        """Mask of the elements assigned to part j."""
        mask = 0
        for pos, a in enumerate(self.assignment):
            if a == j:
                mask |= 1 << pos
        return mask

    def parts(self) -> tuple[int, ...]:
        masks = [0] * self.m
        for pos, a in enumerate(self.assignment):
            masks[a] |= 1 << pos
        return tuple(masks)

    @staticmethod
    def from_parts(masks: Iterable[int], n: int) -> "Partition":
        masks = tuple(masks)
        assignment = [-1] * n
        for j, mask in enumerate(masks):
            for pos in range(n):
                if mask >> pos & 1:
                    if assignment[pos] != -1:
                        raise ValueError(f"element {pos + 1} assigned twice")
                    assignment[pos] = j
        if any(a == -1 for a in assignment):
            missing = [p + 1 for p, a in enumerate(assignment) if a == -1]
            raise ValueError(f"elements {missing} not covered by any part")
        return Partition(tuple(assignment), len(masks))


def marginal(g: SetFunctionOracle, i: int, mask: int) -> float:
    """Marginal value of adding element i to the set `mask`."""
    if not 1 <= i <= g.ground.n:
        raise ValueError(f"element {i} outside ground set of size {g.ground.n}")
    bit = 1 << (i - 1)
    if mask & bit:
        raise ValueError(f"element {i} already belongs to the set")
    return g(mask | bit) - g(mask)


# ---------------------------------------------------------------------------
# Property audits


@dataclass(frozen=True)
class Witness:
    """A concrete violation of a declared property. `sets` holds the
    masks in the inequality's reading order, `values` the corresponding
    oracle values; the violation is lhs < rhs - TOL."""

    sets: tuple[int, ...]
    values: tuple[float, ...]
    lhs: float
    rhs: float


@dataclass(frozen=True)
class PropertyReport:
    prop: str
    holds: Optional[bool]  # None: sampled run, no violation found (not a proof)
    witness: Optional[Witness]
    checked: int
    exhaustive: bool

    def describe(self, ground: GroundSet) -> str:
        if self.holds is True:
            return f"{self.prop}: OK"
        if self.holds is None:
            return f"{self.prop}: no violation found ({self.checked} sampled checks)"
        w = self.witness
        sets = ", ".join("{" + ",".join(map(str, ground.elements(s))) + "}" for s in w.sets)
        return f"{self.prop}: FAIL witness {sets}: {w.lhs:g} < {w.rhs:g}"


AUDIT_PROPERTIES = ("normalized", "nonnegative", "nondecreasing", "subadditive", "submodular", "s_minimal")


def _popcounts(size: int) -> np.ndarray:
    return np.bitwise_count(np.arange(size, dtype=np.uint64)).astype(np.int64)


def _pairwise_audit(table: np.ndarray, n: int, submodular: bool) -> Optional[Witness]:
    """Scan all ordered pairs (S, T) for a violation of the subadditive
    (or submodular) inequality. Witness selection: smallest |S|+|T|,
    then smallest (S, T) masks."""
    size = 1 << n
    masks = np.arange(size, dtype=np.int64)
    pc = _popcounts(size)
    best_key = None
    best = None
    for s in range(size):
        union = table[masks | s]
        rhs = union + table[masks & s] if submodular else union
        viol = table[s] + table < rhs - TOL
        if not viol.any():
            continue
        ts = masks[viol]
        t = int(ts[np.lexsort((ts, pc[ts]))[0]])
        key = (int(pc[s]) + int(pc[t]), s, t)
        if best_key is None or key < best_key:
            best_key = key
            if submodular:
                sets = (s, t, s | t, s & t)
                lhs = float(table[s] + table[t])
                rhs_v = float(table[s | t] + table[s & t])
            else:
                sets = (s, t, s | t)
                lhs = float(table[s] + table[t])
                rhs_v = float(table[s | t])
            best = Witness(sets, tuple(float(table[x]) for x in sets), lhs, rhs_v)
    return best


def _extension_audit(table: np.ndarray, n: int, singleton_lhs: bool) -> Optional[Witness]:
    """Scan pairs (A, A+{i}). With singleton_lhs the inequality checked
    is g({i}) <= g(A+{i}); otherwise g(A) <= g(A+{i}) (a monotonicity
    step). Witness: smallest total cardinality, then smallest masks."""
    size = 1 << n
    masks = np.arange(size, dtype=np.int64)
    pc = _popcounts(size)
    best_key = None
    best = None
    for i in range(n):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        lhs = table[bit] if singleton_lhs else table[without]
        ext = without | bit
        viol = lhs > table[ext] + TOL
        if not np.any(viol):
            continue
        cand = without[viol]
        card_lhs = 1 if singleton_lhs else pc[cand]
        keys = np.lexsort((cand, card_lhs + pc[cand] + 1))
        a = int(cand[keys[0]])
        s_lo = bit if singleton_lhs else a
        key = (int(pc[s_lo]) + int(pc[a | bit]), s_lo, a | bit)
        if best_key is None or key < best_key:
            best_key = key
            best = Witness(
                (s_lo, a | bit),
                (float(table[s_lo]), float(table[a | bit])),
                float(table[a | bit]),
                float(table[s_lo]),
            )
    return best


def audit(g: SetFunctionOracle, prop: str) -> PropertyReport:
    """Exhaustively check one declared property of `g`.

    A violation must exceed TOL. On failure the witness has minimal
    total cardinality, ties broken by smallest masks, so failing audits
    are deterministic. Monotonicity and singleton-minimality scan
    single-element extensions (a violation exists iff a one-step
    violation exists).
    """
    if prop not in AUDIT_PROPERTIES:
        raise ValueError(f"unknown property {prop!r}; choose from {AUDIT_PROPERTIES}")
    n = g.ground.n
    if n > ENUM_LIMIT:
        raise CapabilityError(f"audit enumerates subsets; n = {n} exceeds {ENUM_LIMIT}")
    table = g.table()
    size = 1 << n

    if prop == "normalized":
        v0 = float(table[0])
        ok = abs(v0) <= TOL
        wit = None if ok else Witness((0,), (v0,), min(v0, 0.0), max(v0, 0.0))
        return PropertyReport(prop, ok, wit, 1, True)

    if prop == "nonnegative":
        bad = np.flatnonzero(table < -TOL)
        if len(bad) == 0:
            return PropertyReport(prop, True, None, size, True)
        pc = _popcounts(size)
        s = int(bad[np.lexsort((bad, pc[bad]))[0]])
        return PropertyReport(prop, False, Witness((s,), (float(table[s]),), float(table[s]), 0.0), size, True)

    if prop == "nondecreasing":
        wit = _extension_audit(table, n, singleton_lhs=False)
        return PropertyReport(prop, wit is None, wit, n * (size // 2) if n else 0, True)

    if prop == "s_minimal":
        wit = _extension_audit(table, n, singleton_lhs=True)
        return PropertyReport(prop, wit is None, wit, n * (size // 2) if n else 0, True)

    wit = _pairwise_audit(table, n, submodular=(prop == "submodular"))
    return PropertyReport(prop, wit is None, wit, size * size, True)


def audit_sampled(g: SetFunctionOracle, prop: str, pairs: int = 1000, seed: int = 0) -> PropertyReport:
    """Randomized audit for ground sets too large to enumerate. Never
    claims the property holds: the result is either a witness or
    "no violation found"."""
    if prop not in AUDIT_PROPERTIES:
        raise ValueError(f"unknown property {prop!r}; choose from {AUDIT_PROPERTIES}")
    rng = np.random.default_rng(seed)
    n = g.ground.n
    full = g.ground.full_mask

    def rand_mask() -> int:
        return int(rng.integers(0, full + 1)) if n else 0

    for _ in range(pairs):
        s, t = rand_mask(), rand_mask()
        if prop == "normalized":
            v = g(0)
            if abs(v) > TOL:
                return PropertyReport(prop, False, Witness((0,), (v,), min(v, 0.0), max(v, 0.0)), pairs, False)
        elif prop == "nonnegative":
            v = g(s)
            if v < -TOL:
                return PropertyReport(prop, False, Witness((s,), (v,), v, 0.0), pairs, False)
        elif prop == "nondecreasing":
            lo, hi = s & t, s | t
            if g(lo) > g(hi) + TOL:
                return PropertyReport(prop, False, Witness((lo, hi), (g(lo), g(hi)), g(hi), g(lo)), pairs, False)
        elif prop == "s_minimal":
            if n == 0:
                continue
            i = int(rng.integers(1, n + 1))
            bit = 1 << (i - 1)
            hi = s | bit
            if g(bit) > g(hi) + TOL:
                return PropertyReport(prop, False, Witness((bit, hi), (g(bit), g(hi)), g(hi), g(bit)), pairs, False)
        elif prop == "subadditive":
            if g(s) + g(t) < g(s | t) - TOL:
                sets = (s, t, s | t)
                return PropertyReport(prop, False, Witness(sets, tuple(g(x) for x in sets), g(s) + g(t), g(s | t)), pairs, False)
        else:
            lhs, rhs = g(s) + g(t), g(s | t) + g(s & t)
            if lhs < rhs - TOL:
                sets = (s, t, s | t, s & t)
                return PropertyReport(prop, False, Witness(sets, tuple(g(x) for x in sets), lhs, rhs), pairs, False)
    return PropertyReport(prop, None, None, pairs, False)


# ---------------------------------------------------------------------------
# Curvature and pseudo-curvature


def curvature(g: SetFunctionOracle, mask: int) -> float:
    """Curvature of g at the set `mask`: one minus the worst ratio of a
    marginal gain g(i | A - {i}) to the singleton value g({i}), over
    all A inside the set and i in A, by exhaustive enumeration.

    The formula is evaluated verbatim even for non-monotone g; values
    above 1 then simply record negative marginals. An empty set has no
    (A, i) pair and yields 0.
    """
    g.ground.check_mask(mask)
    k = cardinality(mask)
    if k > ENUM_LIMIT:
        raise CapabilityError(f"curvature enumerates 2^|S| sets; |S| = {k} exceeds {ENUM_LIMIT}")
    if k == 0:
        return 0.0
    singles = {}
    for i in g.ground.elements(mask):
        v = g(1 << (i - 1))
        if v <= 0:
            raise ValueError(f"curvature needs g({{{i}}}) > 0, got {v}")
        singles[i] = v
    worst = math.inf
    for a in iter_submasks(mask):
        if a == 0:
            continue
        ga = g(a)
        for i in g.ground.elements(a):
            ratio = (ga - g(a & ~(1 << (i - 1)))) / singles[i]
            if ratio < worst:
                worst = ratio
    return 1.0 - worst


@dataclass(frozen=True)
class Decomposition:
    """A split g = g_plus + f_plus used to bound curvature from above:
    g_plus subadditive and (approximately) nondecreasing, f_plus
    nonnegative submodular or modular."""

    g_plus: SetFunctionOracle
    f_plus: SetFunctionOracle

    def __post_init__(self) -> None:
        if self.g_plus.ground != self.f_plus.ground:
            raise ValueError("decomposition parts must share a ground set")

    @property
    def ground(self) -> GroundSet:
        return self.g_plus.ground

    def total(self, mask: int) -> float:
        return self.g_plus(mask) + self.f_plus(mask)


def verify_decomposition(g: SetFunctionOracle, dec: Decomposition, trials: int = 64, seed: int = 0) -> None:
    """Spot-check g(S) = g_plus(S) + f_plus(S) on random subsets."""
    if g.ground != dec.ground:
        raise ValueError("decomposition ground set differs from the oracle's")
    rng = np.random.default_rng(seed)
    full = g.ground.full_mask
    for _ in range(trials):
        s = int(rng.integers(0, full + 1)) if g.ground.n else 0
        if abs(g(s) - dec.total(s)) > TOL:
            raise ValueError(f"decomposition mismatch at mask {s:#x}: {g(s)} != {dec.total(s)}")


def pseudo_curvature(dec: Decomposition) -> float:
    """Tractable curvature surrogate of g = g_plus + f_plus: one minus
    the worst ratio of the f_plus marginal at the full set to the
    singleton value of g."""
    ground = dec.ground
    if ground.n == 0:
        return 0.0
    full = ground.full_mask
    f_full = dec.f_plus(full)
    worst = math.inf
    for i in range(1, ground.n + 1):
        bit = 1 << (i - 1)
        single = dec.total(bit)
        if single <= 0:
            raise ValueError(f"pseudo-curvature needs g({{{i}}}) > 0, got {single}")
        ratio = (f_full - dec.f_plus(full & ~bit)) / single
        if ratio < worst:
            worst = ratio
    return 1.0 - worst


# ---------------------------------------------------------------------------
# Prize-collecting construction and brute-force minimization


def pcst_oracle(metric, root: int, prizes) -> SetFunctionOracle:
    """Subadditive oracle MST(S) plus the prizes of the uncollected
    elements. Its unconstrained minimum is the prize-collecting tree
    optimum, which is what makes unconstrained subadditive minimization
    hard in general."""
    from .metric import mst_oracle  # deferred: metric builds on this module

    base = mst_oracle(metric, root)
    p = tuple(float(x) for x in prizes)
    if len(p) != base.ground.n:
        raise ValueError("need one prize per element")
    if any(x < 0 for x in p):
        raise ValueError("prizes must be nonnegative")
    total = sum(p)

    def fn(mask: int) -> float:
        collected = 0.0
        rem = mask
        i = 0
        while rem:
            if rem & 1:
                collected += p[i]
            rem >>= 1
            i += 1
        return base(mask) + total - collected

    return SetFunctionOracle(base.ground, fn, OracleFlags(nonnegative=True, subadditive=True), "pcst")


def minimize_unconstrained(g: SetFunctionOracle) -> tuple[int, float]:
    """Exhaustive unconstrained minimization; ties resolve to the
    smallest mask."""
    best_mask = 0
    best = g(0)
    for s in g.ground.subsets():
        v = g(s)
        if v < best:
            best, best_mask = v, s
    return best_mask, best
