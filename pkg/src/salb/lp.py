"""Dense two-phase primal simplex with Bland's rule.

Internally every problem is converted to
    minimize c.x   s.t.  A x = b,  x >= 0,  b >= 0
by shifting or splitting bounded variables, flipping rows to make the
right-hand side nonnegative, and adding slack, surplus, and artificial
columns. Bland's smallest-index rule is used for entering and leaving
variables, so the solver cannot cycle and every run is deterministic.
Intended for the dense, desk-scale problems this package generates
(interpolation evaluations and threshold assignment relaxations), not
as a general-purpose LP code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

PIVOT_EPS = 1e-10
FEAS_TOL = 1e-7

LESS, GREATER, EQUAL = "<=", ">=", "=="
RELATIONS = (LESS, GREATER, EQUAL)


@dataclass(frozen=True)
class LpProblem:
    """maximize (or minimize) c.x subject to rows (coeffs, relation, rhs)
    and per-variable bounds (lo, hi); default bounds are [0, inf)."""

    c: tuple[float, ...]
    rows: tuple[tuple[tuple[float, ...], str, float], ...]
    maximize: bool = True
    bounds: Optional[tuple[tuple[float, float], ...]] = None

    def __post_init__(self) -> None:
        nv = len(self.c)
        for coeffs, rel, _ in self.rows:
            if len(coeffs) != nv:
                raise ValueError("constraint arity differs from the variable count")
            if rel not in RELATIONS:
                raise ValueError(f"unknown relation {rel!r}")
        if self.bounds is not None and len(self.bounds) != nv:
            raise ValueError("need one bound pair per variable")

    @property
    def nvars(self) -> int:
        return len(self.c)


@dataclass(frozen=True)
class LpSolution:
    status: str  # optimal | infeasible | unbounded
    value: float
    x: Optional[np.ndarray]

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def lp_max(c: Sequence[float], rows, bounds=None) -> LpProblem:
    return LpProblem(tuple(float(v) for v in c), _freeze_rows(rows), True, _freeze_bounds(bounds))


def lp_min(c: Sequence[float], rows, bounds=None) -> LpProblem:
    return LpProblem(tuple(float(v) for v in c), _freeze_rows(rows), False, _freeze_bounds(bounds))


def _freeze_rows(rows) -> tuple:
    return tuple((tuple(float(a) for a in coeffs), rel, float(rhs)) for coeffs, rel, rhs in rows)


def _freeze_bounds(bounds):
    if bounds is None:
        return None
    return tuple((float(lo), float(hi)) for lo, hi in bounds)


def solve_lp(problem: LpProblem) -> LpSolution:
    """Solve the problem; never raises on valid finite data, statuses
    carry infeasibility and unboundedness instead."""
    nv = problem.nvars
    bounds = problem.bounds or tuple((0.0, math.inf) for _ in range(nv))

    # Rewrite each original variable in terms of nonnegative internal
    # columns: shifted (x = y + lo), or split (x = p - q) when lo = -inf.
    col_of: list[tuple[str, int, float]] = []  # (kind, first internal col, shift)
    ncols = 0
    extra_rows: list[tuple[list[float], str, float]] = []
    for v, (lo, hi) in enumerate(bounds):
        if math.isinf(lo) and lo < 0:
            col_of.append(("split", ncols, 0.0))
            ncols += 2
        else:
            col_of.append(("shift", ncols, lo))
            ncols += 1
        if not math.isinf(hi):
            coeffs = [0.0] * nv
            coeffs[v] = 1.0
            extra_rows.append((coeffs, LESS, hi))

    def expand(coeffs: Sequence[float]) -> tuple[np.ndarray, float]:
        """Original-space row -> internal columns plus rhs correction."""
        out = np.zeros(ncols)
        corr = 0.0
        for v, a in enumerate(coeffs):
            if a == 0.0:
                continue
            kind, j, shift = col_of[v]
            if kind == "split":
                out[j] += a
                out[j + 1] -= a
            else:
                out[j] += a
                corr += a * shift
        return out, corr

    rows_a: list[np.ndarray] = []
    rels: list[str] = []
    rhs: list[float] = []
    for coeffs, rel, b in list(problem.rows) + extra_rows:
        arow, corr = expand(coeffs)
        rows_a.append(arow)
        rels.append(rel)
        rhs.append(b - corr)

    obj, obj_corr = expand(problem.c)
    sense = 1.0 if problem.maximize else -1.0
    cmin = -sense * obj  # internal problem always minimizes

    status, xint, val = _simplex_standard(np.array(rows_a).reshape(len(rows_a), ncols), rels, rhs, cmin)
    if status != "optimal":
        return LpSolution(status, math.nan, None)

    x = np.zeros(nv)
    for v in range(nv):
        kind, j, shift = col_of[v]
        x[v] = (xint[j] - xint[j + 1]) if kind == "split" else xint[j] + shift
    value = float(np.dot(problem.c, x))
    return LpSolution("optimal", value, x)


def _simplex_standard(a: np.ndarray, rels: list[str], rhs: list[float], cmin: np.ndarray):
    """Two-phase simplex for: minimize cmin.x, rows (a, rel, rhs), x >= 0."""
    nrows, ncols = a.shape
    a = a.copy()
    b = np.array(rhs, dtype=np.float64)
    rels = list(rels)
    for i in range(nrows):  # make every right-hand side nonnegative
        if b[i] < 0:
            a[i] = -a[i]
            b[i] = -b[i]
            rels[i] = {LESS: GREATER, GREATER: LESS, EQUAL: EQUAL}[rels[i]]

    slack_cols: list[int] = []
    art_cols: list[int] = []
    blocks: list[np.ndarray] = [a]
    width = ncols
    basis = [-1] * nrows
    for i, rel in enumerate(rels):
        if rel == LESS:
            col = np.zeros((nrows, 1))
            col[i, 0] = 1.0
            blocks.append(col)
            slack_cols.append(width)
            basis[i] = width
            width += 1
        elif rel == GREATER:
            col = np.zeros((nrows, 1))
            col[i, 0] = -1.0
            blocks.append(col)
            width += 1
    for i, rel in enumerate(rels):
        if rel != LESS:
            col = np.zeros((nrows, 1))
            col[i, 0] = 1.0
            blocks.append(col)
            art_cols.append(width)
            basis[i] = width
            width += 1

    tab = np.hstack([np.hstack(blocks), b.reshape(-1, 1)])
    basis = list(basis)

    if art_cols:
        cost1 = np.zeros(width)
        cost1[art_cols] = 1.0
        z1 = _reduced_row(tab, basis, cost1)
        _iterate(tab, basis, z1)
        phase1 = -z1[-1]
        if phase1 > FEAS_TOL:
            return "infeasible", None, math.nan
        art = set(art_cols)
        for i in range(nrows):  # drive leftover artificials out of the basis
            if basis[i] in art:
                pivot_col = next(
                    (j for j in range(width) if j not in art and abs(tab[i, j]) > PIVOT_EPS),
                    None,
                )
                if pivot_col is None:
                    tab[i, :] = 0.0  # redundant row
                    basis[i] = -1
                else:
                    _pivot(tab, basis, i, pivot_col)
        keep_rows = [i for i in range(nrows) if basis[i] != -1]
        keep_cols = [j for j in range(width) if j not in art] + [width]
        remap = {old: new for new, old in enumerate(keep_cols[:-1])}
        tab = tab[np.ix_(keep_rows, keep_cols)]
        basis = [remap[basis[i]] for i in keep_rows]
        width = len(keep_cols) - 1

    cost2 = np.zeros(width)
    cost2[: len(cmin)] = cmin
    z2 = _reduced_row(tab, basis, cost2)
    if not _iterate(tab, basis, z2):
        return "unbounded", None, math.nan

    x = np.zeros(width)
    for i, bv in enumerate(basis):
        x[bv] = tab[i, -1]
    return "optimal", x[: len(cmin)], float(-z2[-1])


def _reduced_row(tab: np.ndarray, basis: list[int], cost: np.ndarray) -> np.ndarray:
    z = np.zeros(tab.shape[1])
    z[: len(cost)] = cost
    for i, bv in enumerate(basis):
        if cost[bv] != 0.0:
            z -= cost[bv] * tab[i]
    return z


def _pivot(tab: np.ndarray, basis: list[int], row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    for i in range(tab.shape[0]):
        if i != row and tab[i, col] != 0.0:
            tab[i] -= tab[i, col] * tab[row]
    basis[row] = col


def _iterate(tab: np.ndarray, basis: list[int], z: np.ndarray) -> bool:
    """Run simplex iterations in place, keeping z as the reduced-cost
    row of a minimization. Returns False on an unbounded ray."""
    nrows, width = tab.shape[0], tab.shape[1] - 1
    while True:
        entering = -1
        for j in range(width):  # Bland: smallest improving index
            if z[j] < -PIVOT_EPS:
                entering = j
                break
        if entering == -1:
            return True
        best_ratio = math.inf
        leaving = -1
        for i in range(nrows):
            aij = tab[i, entering]
            if aij > PIVOT_EPS:
                ratio = tab[i, -1] / aij
                if ratio < best_ratio - PIVOT_EPS or (
                    abs(ratio - best_ratio) <= PIVOT_EPS and (leaving == -1 or basis[i] < basis[leaving])
                ):
                    best_ratio = ratio
                    leaving = i
        if leaving == -1:
            return False
        _pivot(tab, basis, leaving, entering)
        piv = tab[leaving]
        z -= z[entering] * piv
        z[entering] = 0.0
