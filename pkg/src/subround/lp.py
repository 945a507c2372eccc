"""Small dense linear-program solver: two-phase tableau simplex, Bland's rule.

Intended scale is tiny (the per-step direction LPs of the continuous greedy
stage), so the implementation favors determinism and simplicity over speed:
dense numpy tableau, Bland's anti-cycling pivot choice, 1e-9 pivot tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-8

RELATIONS = ("<=", "=", ">=")


@dataclass
class LinearProgram:
    """max/min c·x subject to row constraints and per-variable bounds.

    bounds[i] = (lo, hi); lo may be -inf and hi may be +inf (None means
    unbounded on that side).  Default bounds are [0, +inf).
    """

    objective: np.ndarray
    sense: str = "max"
    constraints: list[tuple[np.ndarray, str, float]] = field(default_factory=list)
    bounds: list[tuple[float, float]] | None = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        if self.sense not in ("max", "min"):
            raise InputError(f"sense must be 'max' or 'min', got {self.sense!r}")
        n = self.objective.size
        norm = []
        for a, rel, b in self.constraints:
            a = np.asarray(a, dtype=float)
            if a.size != n:
                raise InputError(f"constraint row has {a.size} coefficients, expected {n}")
            if rel not in RELATIONS:
                raise InputError(f"relation must be one of {RELATIONS}, got {rel!r}")
            norm.append((a, rel, float(b)))
        self.constraints = norm
        if self.bounds is None:
            self.bounds = [(0.0, math.inf)] * n
        if len(self.bounds) != n:
            raise InputError(f"bounds length {len(self.bounds)} != {n} variables")
        fixed = []
        for lo, hi in self.bounds:
            lo = -math.inf if lo is None else float(lo)
            hi = math.inf if hi is None else float(hi)
            if lo > hi:
                raise InputError(f"bound pair ({lo}, {hi}) has lo > hi")
            fixed.append((lo, hi))
        self.bounds = fixed

    @property
    def n(self) -> int:
        return self.objective.size


@dataclass(frozen=True)
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    point: np.ndarray | None = None
    value: float | None = None


def _pivot(T: np.ndarray, r: int, c: int) -> None:
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _simplex_min(T: np.ndarray, basis: list[int], cost: np.ndarray, enterable: int) -> str:
    """Minimize cost over the canonical tableau T (rows [A | b]).

    Mutates T and basis in place; only columns < enterable may enter the
    basis.  Returns "optimal" or "unbounded".  Bland's rule throughout.
    """
    m = T.shape[0]
    red = np.append(cost, 0.0)
    for r, bv in enumerate(basis):
        if red[bv]:
            red -= red[bv] * T[r]
    for _ in range(50000):
        enter = -1
        for j in range(enterable):
            if red[j] < -PIVOT_TOL:
                enter = j
                break
        if enter < 0:
            return "optimal"
        best_ratio, leave = None, -1
        for r in range(m):
            a = T[r, enter]
            if a > PIVOT_TOL:
                ratio = T[r, -1] / a
                if (
                    best_ratio is None
                    or ratio < best_ratio - PIVOT_TOL
                    or (abs(ratio - best_ratio) <= PIVOT_TOL and basis[r] < basis[leave])
                ):
                    best_ratio, leave = ratio, r
        if leave < 0:
            return "unbounded"
        _pivot(T, leave, enter)
        red -= red[enter] * T[leave]
        basis[leave] = enter
    raise RuntimeError("simplex failed to terminate (iteration cap reached)")


def solve(lp: LinearProgram) -> LpSolution:
    """Deterministic two-phase simplex solve of a small dense LP."""
    n = lp.n
    # shift/split variables so every working variable is >= 0:
    # col_of[i] = (positive-part column, negative-part column or None, lower shift)
    col_of: list[tuple[int, int | None, float]] = []
    ncols = 0
    extra_rows: list[tuple[np.ndarray, str, float]] = []
    for i, (lo, hi) in enumerate(lp.bounds):
        if math.isfinite(lo):
            col_of.append((ncols, None, lo))
            ncols += 1
        else:
            col_of.append((ncols, ncols + 1, 0.0))
            ncols += 2
        if math.isfinite(hi):
            row = np.zeros(n)
            row[i] = 1.0
            extra_rows.append((row, "<=", hi))

    def to_working(a: np.ndarray) -> tuple[np.ndarray, float]:
        row = np.zeros(ncols)
        const = 0.0
        for i in range(n):
            pos, neg, lo = col_of[i]
            row[pos] += a[i]
            if neg is not None:
                row[neg] -= a[i]
            const += a[i] * lo
        return row, const

    rows = []
    for a, rel, rhs in list(lp.constraints) + extra_rows:
        w, const = to_working(np.asarray(a, dtype=float))
        b = rhs - const
        if b < 0:
            w, b = -w, -b
            rel = {"<=": ">=", ">=": "<=", "=": "="}[rel]
        rows.append((w, rel, b))

    m = len(rows)
    nslack = sum(1 for _, rel, _ in rows if rel != "=")
    slack_base = ncols
    art_base = ncols + nslack
    art_rows = [r for r, (_, rel, _) in enumerate(rows) if rel != "<="]
    total = art_base + len(art_rows)

    T = np.zeros((m, total + 1))
    basis = [-1] * m
    si = ai = 0
    for r, (w, rel, b) in enumerate(rows):
        T[r, :ncols] = w
        T[r, -1] = b
        if rel == "<=":
            T[r, slack_base + si] = 1.0
            basis[r] = slack_base + si
            si += 1
        else:
            if rel == ">=":
                T[r, slack_base + si] = -1.0
                si += 1
            T[r, art_base + ai] = 1.0
            basis[r] = art_base + ai
            ai += 1

    if art_rows:
        phase1 = np.zeros(total)
        phase1[art_base:] = 1.0
        if _simplex_min(T, basis, phase1, total) != "optimal":
            raise RuntimeError("phase-1 simplex reported unbounded (cannot happen)")
        resid = sum(T[r, -1] for r in range(m) if basis[r] >= art_base)
        if resid > FEAS_TOL:
            return LpSolution("infeasible")
        keep = []
        for r in range(m):
            if basis[r] >= art_base:
                piv = next((j for j in range(art_base) if abs(T[r, j]) > PIVOT_TOL), None)
                if piv is None:
                    continue  # redundant row
                _pivot(T, r, piv)
                basis[r] = piv
            keep.append(r)
        if len(keep) < m:
            T = T[keep]
            basis = [basis[r] for r in keep]

    cost = np.zeros(total)
    csign = 1.0 if lp.sense == "min" else -1.0
    for i in range(n):
        pos, neg, _ = col_of[i]
        cost[pos] += csign * lp.objective[i]
        if neg is not None:
            cost[neg] -= csign * lp.objective[i]
    T[:, art_base:total] = 0.0  # artificials may never re-enter
    if _simplex_min(T, basis, cost, art_base) == "unbounded":
        return LpSolution("unbounded")

    u = np.zeros(total)
    for r, bv in enumerate(basis):
        u[bv] = T[r, -1]
    point = np.empty(n)
    for i in range(n):
        pos, neg, lo = col_of[i]
        point[i] = u[pos] - (u[neg] if neg is not None else 0.0) + lo
    return LpSolution("optimal", point, float(lp.objective @ point))


def check_feasible(lp: LinearProgram, point: np.ndarray, tol: float = FEAS_TOL) -> bool:
    for a, rel, b in lp.constraints:
        v = float(np.asarray(a) @ point)
        if rel == "<=" and v > b + tol:
            return False
        if rel == ">=" and v < b - tol:
            return False
        if rel == "=" and abs(v - b) > tol:
            return False
    for xi, (lo, hi) in zip(point, lp.bounds):
        if xi < lo - tol or xi > hi + tol:
            return False
    return True
