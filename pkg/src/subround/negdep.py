"""Explicit finite joint distributions and exhaustive negative-dependence checkers.

All five notions (negative cylinder dependence, 1-negative association, weak
negative regression, negative association, negative regression) are verified
by exhaustive scans over monotone 0/1 test functions.  Monotone real-valued
functions are nonnegative combinations of monotone indicators plus constants,
and constants contribute nothing to E[fg] - E[f]E[g] or to conditional-
expectation gaps, so indicator scans are complete.  Non-increasing function
pairs are covered by re-running each scan on the coordinate-reflected table.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import CapacityError, InputError

TOL = 1e-10
PROB_TOL = 1e-12

# hard caps for the exhaustive scans (the notion-specific preconditions)
CYLINDER_MAX_N = 20
ONE_NA_MAX_N = 5
ONE_NA_MAX_SUPPORT = 6
NA_MAX_N = 4
NA_MAX_SUPPORT = 4
MAX_UPSETS = 300_000
UPSET_BLOCK = 4096


@dataclass(frozen=True)
class JointTable:
    """Finite joint distribution of an integer random vector (X_1,...,X_n)."""

    n: int
    support: tuple[tuple[int, ...], ...]
    probs: tuple[float, ...]

    def __init__(self, n: int, support: Sequence[Sequence[int]], probs: Sequence[float]):
        if n < 1:
            raise InputError("JointTable needs n >= 1")
        rows = tuple(tuple(int(v) for v in row) for row in support)
        p = tuple(float(q) for q in probs)
        if len(rows) != len(p) or not rows:
            raise InputError("support and probs must be nonempty and equal-length")
        if any(len(r) != n for r in rows):
            raise InputError("every support point must have length n")
        if len(set(rows)) != len(rows):
            raise InputError("support points must be distinct")
        if any(q < 0 for q in p):
            raise InputError("probabilities must be nonnegative")
        if abs(sum(p) - 1.0) > PROB_TOL:
            raise InputError(f"probabilities sum to {sum(p)!r}, not 1")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "support", rows)
        object.__setattr__(self, "probs", p)

    @property
    def size(self) -> int:
        return len(self.support)

    def prob_array(self) -> np.ndarray:
        return np.asarray(self.probs)

    def support_array(self) -> np.ndarray:
        return np.asarray(self.support, dtype=np.int64)

    def is_binary(self) -> bool:
        return all(v in (0, 1) for row in self.support for v in row)

    def reflect(self) -> "JointTable":
        """Coordinate-wise negation; maps non-increasing test pairs to
        non-decreasing ones."""
        return JointTable(self.n, [tuple(-v for v in row) for row in self.support], self.probs)

    def sample(self, trials: int, rng: np.random.Generator) -> np.ndarray:
        idx = rng.choice(len(self.support), size=trials, p=self.probs)
        return self.support_array()[idx]

    def to_json(self) -> dict:
        return {"n": self.n, "support": [list(r) for r in self.support], "probs": list(self.probs)}

    @classmethod
    def from_json(cls, doc: dict) -> "JointTable":
        try:
            return cls(int(doc["n"]), doc["support"], doc["probs"])
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed joint table document: {exc}") from exc


def load_table(path: str) -> JointTable:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON at line {exc.lineno} col {exc.colno}") from exc
    return JointTable.from_json(doc)


@dataclass(frozen=True)
class DependenceReport:
    notion: str
    holds: bool
    witness: dict | None = None

    def to_json(self) -> dict:
        return {"notion": self.notion, "holds": self.holds, "witness": self.witness}


def marginals(d: JointTable) -> list[dict[int, float]]:
    """Exact marginal distribution of each coordinate, as value -> prob."""
    out: list[dict[int, float]] = []
    for i in range(d.n):
        m: dict[int, float] = {}
        for row, p in zip(d.support, d.probs):
            m[row[i]] = m.get(row[i], 0.0) + p
        out.append(dict(sorted(m.items())))
    return out


def marginal_means(d: JointTable) -> np.ndarray:
    return d.support_array().T @ d.prob_array()


def product_of_marginals(d: JointTable, max_points: int = 1 << 20) -> JointTable:
    """The product measure with the same marginals (the independent copies)."""
    margs = []
    for m in marginals(d):
        margs.append([(v, p) for v, p in m.items() if p > 0.0])
    total = 1
    for m in margs:
        total *= len(m)
        if total > max_points:
            raise CapacityError(f"product support exceeds {max_points} points")
    support = []
    probs = []
    for combo in itertools.product(*margs):
        support.append(tuple(v for v, _ in combo))
        p = 1.0
        for _, q in combo:
            p *= q
        probs.append(p)
    total_p = sum(probs)
    probs = [p / total_p for p in probs]
    return JointTable(d.n, support, probs)


def counterexample_distribution() -> JointTable:
    """Uniform distribution on {(0,3),(1,1),(2,2),(3,0)}: 1-negatively
    associated but not weakly negatively regressing."""
    return JointTable(2, [(0, 3), (1, 1), (2, 2), (3, 0)], [0.25, 0.25, 0.25, 0.25])


# ---------------------------------------------------------------------------
# monotone indicator enumeration


def _projection(d: JointTable, coords: Sequence[int]) -> tuple[list[tuple[int, ...]], np.ndarray]:
    """Distinct projections of the support onto coords, plus per-row point ids."""
    pts = [tuple(row[c] for c in coords) for row in d.support]
    uniq = sorted(set(pts))
    index = {p: i for i, p in enumerate(uniq)}
    return uniq, np.asarray([index[p] for p in pts])


def _dominance(points: list[tuple[int, ...]]) -> list[list[int]]:
    """above[p] = indices q with points[q] >= points[p] componentwise, q != p."""
    above: list[list[int]] = []
    for a, pa in enumerate(points):
        ge = [
            b
            for b, pb in enumerate(points)
            if b != a and all(vb >= va for va, vb in zip(pa, pb))
        ]
        above.append(ge)
    return above


def _upsets(points: list[tuple[int, ...]]) -> Iterator[np.ndarray]:
    """All nonconstant up-sets (monotone 0/1 functions) of the point poset,
    as boolean vectors over points, in a fixed depth-first order."""
    k = len(points)
    order = sorted(range(k), key=lambda i: (-sum(points[i]), points[i]))
    above = _dominance(points)
    members = np.zeros(k, dtype=bool)
    count = 0

    def rec(pos: int, ones: int):
        nonlocal count
        if pos == len(order):
            if 0 < ones < k:
                yield members.copy()
                count += 1
                if count > MAX_UPSETS:
                    raise CapacityError(f"more than {MAX_UPSETS} monotone indicators")
            return
        p = order[pos]
        # taking p requires every dominating point (assigned earlier) taken
        if all(members[q] for q in above[p]):
            members[p] = True
            yield from rec(pos + 1, ones + 1)
            members[p] = False
        yield from rec(pos + 1, ones)

    yield from rec(0, 0)


def _minimal_points(points: list[tuple[int, ...]], members: np.ndarray) -> list[tuple[int, ...]]:
    chosen = [points[i] for i in range(len(points)) if members[i]]
    mins = []
    for p in chosen:
        if not any(q != p and all(a <= b for a, b in zip(q, p)) for q in chosen):
            mins.append(p)
    return sorted(mins)


def _indicator_blocks(
    points: list[tuple[int, ...]], row_ids: np.ndarray
) -> Iterator[tuple[np.ndarray, list[np.ndarray]]]:
    """Yield (rows_matrix, members_list) blocks: rows_matrix is
    (block, nrows) float with the indicator applied per support row."""
    block: list[np.ndarray] = []
    for members in _upsets(points):
        block.append(members)
        if len(block) == UPSET_BLOCK:
            yield np.stack([m[row_ids] for m in block]).astype(float), block
            block = []
    if block:
        yield np.stack([m[row_ids] for m in block]).astype(float), block


def _realizable_values(d: JointTable, i: int) -> list[int]:
    vals: dict[int, float] = {}
    for row, p in zip(d.support, d.probs):
        vals[row[i]] = vals.get(row[i], 0.0) + p
    return sorted(v for v, p in vals.items() if p > 0.0)


# ---------------------------------------------------------------------------
# checkers


def check_cylinder(d: JointTable) -> DependenceReport:
    """Negative cylinder dependence for binary variables: products of ones
    and products of zeros are dominated by the corresponding products of
    marginals, for every index subset."""
    if not d.is_binary():
        raise InputError("cylinder dependence is defined for binary variables only")
    if d.n > CYLINDER_MAX_N:
        raise CapacityError(f"cylinder check needs n <= {CYLINDER_MAX_N}")
    n = d.n
    probs = d.prob_array()
    rows = d.support_array()
    means = rows.T @ probs

    for side in ("ones", "zeros"):
        bits = rows if side == "ones" else 1 - rows
        mean_side = means if side == "ones" else 1 - means
        masks = (bits.astype(np.int64) @ (1 << np.arange(n, dtype=np.int64))).astype(np.int64)
        joint = np.zeros(1 << n)
        np.add.at(joint, masks, probs)
        # superset-sum: joint[S] = Pr[all coords in S equal 1 (resp. 0)]
        t = joint.reshape([2] * n)
        for i in range(n):
            axis = n - 1 - i
            sl0 = [slice(None)] * n
            sl1 = [slice(None)] * n
            sl0[axis], sl1[axis] = 0, 1
            t[tuple(sl0)] += t[tuple(sl1)]
        joint = t.reshape(-1)
        prod = np.array([1.0])
        for i in range(n):
            prod = np.concatenate([prod, prod * mean_side[i]])
        gap = joint - prod
        bad = np.nonzero(gap > TOL)[0]
        if bad.size:
            s = int(bad[0])
            return DependenceReport(
                "cylinder",
                False,
                {
                    "kind": "cylinder",
                    "side": side,
                    "S": [i for i in range(n) if s >> i & 1],
                    "lhs": float(joint[s]),
                    "rhs": float(prod[s]),
                    "violation": float(gap[s]),
                },
            )
    return DependenceReport("cylinder", True)


def _one_na_scan(d: JointTable, reflected: bool) -> dict | None:
    probs = d.prob_array()
    rows = d.support_array()
    for i in range(d.n):
        vals = _realizable_values(d, i)
        rest = [j for j in range(d.n) if j != i]
        if not rest or len(vals) < 2:
            continue
        points, row_ids = _projection(d, rest)
        for t in vals[1:]:
            gvec = (rows[:, i] >= t).astype(float)
            e_g = float(gvec @ probs)
            pg = probs * gvec
            for fmat, block in _indicator_blocks(points, row_ids):
                e_f = fmat @ probs
                e_fg = fmat @ pg
                gap = e_fg - e_f * e_g
                bad = np.nonzero(gap > TOL)[0]
                if bad.size:
                    b = int(bad[0])
                    return {
                        "kind": "one_na",
                        "reflected": reflected,
                        "i": i,
                        "g_threshold": int(t),
                        "f_vars": rest,
                        "f_min_points": [list(p) for p in _minimal_points(points, block[b])],
                        "e_fg": float(e_fg[b]),
                        "e_f": float(e_f[b]),
                        "e_g": e_g,
                        "violation": float(gap[b]),
                    }
    return None


def check_one_na(d: JointTable) -> DependenceReport:
    """1-negative association: E[fg] <= E[f]E[g] for monotone 0/1 g of one
    variable and monotone 0/1 f of the rest, both orientations."""
    if d.n > ONE_NA_MAX_N:
        raise CapacityError(f"1-NA check needs n <= {ONE_NA_MAX_N}")
    if any(len(m) > ONE_NA_MAX_SUPPORT for m in marginals(d)):
        raise CapacityError(f"1-NA check needs per-variable support <= {ONE_NA_MAX_SUPPORT}")
    for reflected, table in ((False, d), (True, d.reflect())):
        witness = _one_na_scan(table, reflected)
        if witness is not None:
            return DependenceReport("one_na", False, witness)
    return DependenceReport("one_na", True)


def _weak_nr_scan(d: JointTable, reflected: bool) -> dict | None:
    probs = d.prob_array()
    rows = d.support_array()
    for i in range(d.n):
        vals = _realizable_values(d, i)
        rest = [j for j in range(d.n) if j != i]
        if not rest or len(vals) < 2:
            continue
        points, row_ids = _projection(d, rest)
        cond = {}
        for v in vals:
            sel = (rows[:, i] == v).astype(float) * probs
            cond[v] = sel / sel.sum()
        for a, b in itertools.combinations(vals, 2):
            for fmat, block in _indicator_blocks(points, row_ids):
                e_a = fmat @ cond[a]
                e_b = fmat @ cond[b]
                gap = e_b - e_a
                bad = np.nonzero(gap > TOL)[0]
                if bad.size:
                    w = int(bad[0])
                    return {
                        "kind": "weak_nr",
                        "reflected": reflected,
                        "i": i,
                        "a": int(a),
                        "b": int(b),
                        "f_vars": rest,
                        "f_min_points": [list(p) for p in _minimal_points(points, block[w])],
                        "e_f_given_a": float(e_a[w]),
                        "e_f_given_b": float(e_b[w]),
                        "violation": float(gap[w]),
                    }
    return None


def check_weak_nr(d: JointTable) -> DependenceReport:
    """Weak negative regression: E[f | X_i = b] <= E[f | X_i = a] for a < b
    and monotone 0/1 f of the remaining variables.  Zero-probability
    conditioning values are skipped."""
    if d.n > ONE_NA_MAX_N:
        raise CapacityError(f"weak-NR check needs n <= {ONE_NA_MAX_N}")
    if any(len(m) > ONE_NA_MAX_SUPPORT for m in marginals(d)):
        raise CapacityError(f"weak-NR check needs per-variable support <= {ONE_NA_MAX_SUPPORT}")
    for reflected, table in ((False, d), (True, d.reflect())):
        witness = _weak_nr_scan(table, reflected)
        if witness is not None:
            return DependenceReport("weak_nr", False, witness)
    return DependenceReport("weak_nr", True)


def _disjoint_pairs(n: int) -> Iterator[tuple[list[int], list[int]]]:
    idx = list(range(n))
    for ri in range(1, n):
        for I in itertools.combinations(idx, ri):
            rest = [j for j in idx if j not in I]
            for rj in range(1, len(rest) + 1):
                for J in itertools.combinations(rest, rj):
                    if J and I < J:  # unordered (I, J): Q is symmetric
                        yield list(I), list(J)
    # the symmetric filter above drops nothing because Q(f,g) = Q(g,f)


def _na_scan(d: JointTable, reflected: bool) -> dict | None:
    probs = d.prob_array()
    for I, J in _disjoint_pairs(d.n):
        pts_i, rows_i = _projection(d, I)
        pts_j, rows_j = _projection(d, J)
        for fmat, fblock in _indicator_blocks(pts_i, rows_i):
            e_f = fmat @ probs
            fprob = fmat * probs
            for gmat, gblock in _indicator_blocks(pts_j, rows_j):
                e_g = gmat @ probs
                e_fg = fprob @ gmat.T
                gap = e_fg - np.outer(e_f, e_g)
                bad = np.argwhere(gap > TOL)
                if bad.size:
                    bi, bj = map(int, bad[0])
                    return {
                        "kind": "na",
                        "reflected": reflected,
                        "I": I,
                        "J": J,
                        "f_min_points": [list(p) for p in _minimal_points(pts_i, fblock[bi])],
                        "g_min_points": [list(p) for p in _minimal_points(pts_j, gblock[bj])],
                        "e_fg": float(e_fg[bi, bj]),
                        "e_f": float(e_f[bi]),
                        "e_g": float(e_g[bj]),
                        "violation": float(gap[bi, bj]),
                    }
    return None


def check_na(d: JointTable) -> DependenceReport:
    """Negative association: E[f g] <= E[f]E[g] over all disjoint index sets
    and monotone 0/1 functions on each side."""
    if d.n > NA_MAX_N:
        raise CapacityError(f"NA check needs n <= {NA_MAX_N}")
    if any(len(m) > NA_MAX_SUPPORT for m in marginals(d)):
        raise CapacityError(f"NA check needs per-variable support <= {NA_MAX_SUPPORT}")
    for reflected, table in ((False, d), (True, d.reflect())):
        witness = _na_scan(table, reflected)
        if witness is not None:
            return DependenceReport("na", False, witness)
    return DependenceReport("na", True)


def _nr_scan(d: JointTable, reflected: bool) -> dict | None:
    probs = d.prob_array()
    for I, J in itertools.chain(_disjoint_pairs(d.n), ((j, i) for i, j in _disjoint_pairs(d.n))):
        pts_i, rows_i = _projection(d, I)
        pts_j, rows_j = _projection(d, J)
        # realizable conditioning values of X_J with their conditional laws
        masses: dict[int, float] = {}
        for rid, p in zip(rows_j, d.probs):
            masses[int(rid)] = masses.get(int(rid), 0.0) + p
        realizable = [pid for pid, mass in sorted(masses.items()) if mass > 0.0]
        cond = {}
        for pid in realizable:
            sel = (rows_j == pid).astype(float) * probs
            cond[pid] = sel / sel.sum()
        for pa, pb in itertools.combinations(realizable, 2):
            a, b = pts_j[pa], pts_j[pb]
            if all(x <= y for x, y in zip(a, b)):
                lo_id, hi_id = pa, pb
            elif all(y <= x for x, y in zip(a, b)):
                lo_id, hi_id = pb, pa
            else:
                continue
            for fmat, fblock in _indicator_blocks(pts_i, rows_i):
                e_lo = fmat @ cond[lo_id]
                e_hi = fmat @ cond[hi_id]
                gap = e_hi - e_lo
                bad = np.nonzero(gap > TOL)[0]
                if bad.size:
                    w = int(bad[0])
                    return {
                        "kind": "nr",
                        "reflected": reflected,
                        "I": list(I),
                        "J": list(J),
                        "a": list(pts_j[lo_id]),
                        "b": list(pts_j[hi_id]),
                        "f_min_points": [list(p) for p in _minimal_points(pts_i, fblock[w])],
                        "e_f_given_a": float(e_lo[w]),
                        "e_f_given_b": float(e_hi[w]),
                        "violation": float(gap[w]),
                    }
    return None


def check_nr(d: JointTable) -> DependenceReport:
    """Negative regression: E[f | X_J = a] >= E[f | X_J = b] for componentwise
    a <= b and monotone 0/1 f of X_I, disjoint I and J."""
    if d.n > NA_MAX_N:
        raise CapacityError(f"NR check needs n <= {NA_MAX_N}")
    if any(len(m) > NA_MAX_SUPPORT for m in marginals(d)):
        raise CapacityError(f"NR check needs per-variable support <= {NA_MAX_SUPPORT}")
    for reflected, table in ((False, d), (True, d.reflect())):
        witness = _nr_scan(table, reflected)
        if witness is not None:
            return DependenceReport("nr", False, witness)
    return DependenceReport("nr", True)


CHECKERS = {
    "cylinder": check_cylinder,
    "one_na": check_one_na,
    "weak_nr": check_weak_nr,
    "na": check_na,
    "nr": check_nr,
}


def check(d: JointTable, notion: str) -> DependenceReport:
    try:
        fn = CHECKERS[notion]
    except KeyError:
        raise InputError(f"unknown notion {notion!r}; choose from {sorted(CHECKERS)}") from None
    return fn(d)


# ---------------------------------------------------------------------------
# witness re-evaluation (used to validate failing reports)


def _indicator_from_mins(min_points: list[list[int]], coords: Sequence[int], row) -> float:
    pt = tuple(row[c] for c in coords)
    return 1.0 if any(all(m <= v for m, v in zip(mp, pt)) for mp in min_points) else 0.0


def reevaluate_witness(d: JointTable, witness: dict) -> float:
    """Recompute a failing report's inequality gap straight from the table.

    Returns the violation magnitude (positive = genuine violation).
    """
    table = d.reflect() if witness.get("reflected") else d
    probs = table.prob_array()
    rows = table.support_array()
    kind = witness["kind"]
    if kind == "cylinder":
        bits = rows if witness["side"] == "ones" else 1 - rows
        sel = np.ones(len(probs))
        for i in witness["S"]:
            sel = sel * bits[:, i]
        lhs = float(sel @ probs)
        rhs = 1.0
        for i in witness["S"]:
            rhs *= float(bits[:, i] @ probs)
        return lhs - rhs
    if kind == "one_na":
        g = (rows[:, witness["i"]] >= witness["g_threshold"]).astype(float)
        f = np.array(
            [_indicator_from_mins(witness["f_min_points"], witness["f_vars"], row) for row in rows]
        )
        return float((f * g) @ probs - (f @ probs) * (g @ probs))
    if kind == "weak_nr":
        f = np.array(
            [_indicator_from_mins(witness["f_min_points"], witness["f_vars"], row) for row in rows]
        )
        sel_a = (rows[:, witness["i"]] == witness["a"]).astype(float) * probs
        sel_b = (rows[:, witness["i"]] == witness["b"]).astype(float) * probs
        return float(f @ sel_b / sel_b.sum() - f @ sel_a / sel_a.sum())
    if kind == "na":
        f = np.array(
            [_indicator_from_mins(witness["f_min_points"], witness["I"], row) for row in rows]
        )
        g = np.array(
            [_indicator_from_mins(witness["g_min_points"], witness["J"], row) for row in rows]
        )
        return float((f * g) @ probs - (f @ probs) * (g @ probs))
    if kind == "nr":
        f = np.array(
            [_indicator_from_mins(witness["f_min_points"], witness["I"], row) for row in rows]
        )
        Jcols = witness["J"]
        sel_a = np.array(
            [1.0 if all(row[c] == v for c, v in zip(Jcols, witness["a"])) else 0.0 for row in rows]
        ) * probs
        sel_b = np.array(
            [1.0 if all(row[c] == v for c, v in zip(Jcols, witness["b"])) else 0.0 for row in rows]
        ) * probs
        return float(f @ sel_b / sel_b.sum() - f @ sel_a / sel_a.sum())
    raise InputError(f"unknown witness kind {kind!r}")
