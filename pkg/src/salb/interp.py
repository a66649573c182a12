"""Subadditive interpolation of a partially known submodular function.

Known values f(C_i) = f_i define the relaxed feasible region
{z >= 0 : z(C_i) <= f_i}; evaluating the interpolation at S maximizes
z(S) over that region with the in-repo simplex. The result agrees with
f on every sampled set, never undershoots f, and is nondecreasing and
subadditive, although usually not submodular.

The same relaxed region with *all* constraints present is the
polymatroid of f; its linear optimization is solved combinatorially by
the prefix greedy rule, which also yields the exact modular
minorizations used for submodular load-balancing lower bounds.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .lp import lp_max, solve_lp
from .setfn import GroundSet, ModularFn, OracleFlags, SetFunctionOracle


@dataclass(frozen=True)
class SampleCollection:
    """Known values of a set function: pairs (C_i, f_i) with nonempty,
    pairwise distinct C_i and f_i >= 0."""

    ground: GroundSet
    samples: tuple[tuple[int, float], ...]

    def __post_init__(self) -> None:
        seen = set()
        for mask, value in self.samples:
            self.ground.check_mask(mask)
            if mask == 0:
                raise ValueError("sample sets must be nonempty")
            if value < 0:
                raise ValueError(f"sample values must be nonnegative, got {value}")
            if mask in seen:
                raise ValueError(f"duplicate sample set {self.ground.elements(mask)}")
            seen.add(mask)

    @property
    def covered(self) -> int:
        mask = 0
        for m, _ in self.samples:
            mask |= m
        return mask


@dataclass(frozen=True)
class ImitatedPolymatroid:
    """The region {z >= 0 : z(C_i) <= f_i} kept as constraint rows.
    It is bounded exactly when the samples cover the ground set."""

    collection: SampleCollection

    @property
    def is_bounded(self) -> bool:
        return self.collection.covered == self.collection.ground.full_mask

    def uncovered_elements(self) -> tuple[int, ...]:
        ground = self.collection.ground
        missing = ground.full_mask & ~self.collection.covered
        return ground.elements(missing)


class UnboundedInterpolationError(ValueError):
    """The evaluation set contains an element no sample constrains."""


def interp_eval(coll: SampleCollection, subset_mask: int) -> float:
    """Value of the interpolation at a subset: maximize z(S) over the
    imitated region. Every element of S must appear in some sample,
    otherwise the maximum is unbounded and the offending element is
    reported instead."""
    ground = coll.ground
    ground.check_mask(subset_mask)
    if subset_mask == 0:
        return 0.0
    uncovered = subset_mask & ~coll.covered
    if uncovered:
        e = ground.elements(uncovered)[0]
        raise UnboundedInterpolationError(
            f"element {e} is not covered by any sample; z_{e} is unbounded"
        )
    n = ground.n
    objective = [1.0 if subset_mask >> i & 1 else 0.0 for i in range(n)]
    rows = []
    for mask, value in coll.samples:
        coeffs = [1.0 if mask >> i & 1 else 0.0 for i in range(n)]
        rows.append((coeffs, "<=", value))
    sol = solve_lp(lp_max(objective, rows))
    if not sol.optimal:  # uncovered elements were excluded, so this cannot happen
        raise RuntimeError(f"interpolation LP ended with status {sol.status}")
    return sol.value


def interp_oracle(coll: SampleCollection, name: str = "interp") -> SetFunctionOracle:
    """The interpolation as an oracle over the full ground set; requires
    the samples to cover every element."""
    poly = ImitatedPolymatroid(coll)
    if not poly.is_bounded:
        raise UnboundedInterpolationError(
            f"samples leave elements {poly.uncovered_elements()} unconstrained"
        )

    @functools.lru_cache(maxsize=None)
    def fn(mask: int) -> float:
        return interp_eval(coll, mask)

    flags = OracleFlags(
        normalized=True, nonnegative=True, nondecreasing=True, subadditive=True, s_minimal=True
    )
    return SetFunctionOracle(coll.ground, fn, flags, name)


# ---------------------------------------------------------------------------
# Prefix greedy over the polymatroid


def edmonds_greedy(f: SetFunctionOracle, order: Sequence[int]) -> np.ndarray:
    """Prefix-difference weights along a total order of the ground set:
    w[v_h] = f(first h elements) - f(first h-1 elements). For a
    normalized nondecreasing submodular f the weight vector lies in the
    polymatroid and is tight on every prefix."""
    n = f.ground.n
    if sorted(order) != list(range(1, n + 1)):
        raise ValueError(f"order {order!r} is not a permutation of 1..{n}")
    if not f.flags.normalized:
        raise ValueError("prefix greedy needs a normalized oracle")
    w = np.zeros(n)
    prefix = 0
    prev = f(0)
    for v in order:
        prefix |= 1 << (v - 1)
        cur = f(prefix)
        w[v - 1] = cur - prev
        prev = cur
    return w


def submodular_minorization(f: SetFunctionOracle, anchor_mask: int) -> ModularFn:
    """Exact modular minorization of a normalized nondecreasing
    submodular f, tight at the anchor set: run the prefix greedy with
    the anchor's elements first (ascending), the rest after (ascending)."""
    for flag in ("submodular", "nondecreasing", "normalized"):
        if not getattr(f.flags, flag):
            raise ValueError(f"minorization needs an oracle flagged {flag}")
    ground = f.ground
    ground.check_mask(anchor_mask)
    inside = list(ground.elements(anchor_mask))
    outside = [i for i in range(1, ground.n + 1) if not anchor_mask >> (i - 1) & 1]
    w = edmonds_greedy(f, inside + outside)
    return ModularFn(0.0, tuple(float(x) for x in w))


# ---------------------------------------------------------------------------
# JSON format


def samples_from_json(text: str) -> SampleCollection:
    payload = json.loads(text)
    ground = GroundSet(int(payload["n"]))
    samples = tuple(
        (ground.mask(entry["set"]), float(entry["value"])) for entry in payload["samples"]
    )
    return SampleCollection(ground, samples)


def samples_to_json(coll: SampleCollection) -> str:
    payload = {
        "n": coll.ground.n,
        "samples": [
            {"set": list(coll.ground.elements(mask)), "value": value}
            for mask, value in coll.samples
        ],
    }
    return json.dumps(payload, sort_keys=True)
