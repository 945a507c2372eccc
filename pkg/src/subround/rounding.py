"""Dependent (pairwise) rounding and independent rounding of fractional vectors.

The dependent scheme repeatedly picks two fractional coordinates and shifts
mass between them until at most one fractional coordinate remains; each step
preserves the marginals and the coordinate sum, so if the sum is an integer
the output always has exactly that many ones.  The three mass-shift cases are

    s = X_i + X_j < 1:      (s, 0) w.p. X_i/s,       (0, s) w.p. X_j/s
    s = 1:                  (1, 0) w.p. X_i,          (0, 1) w.p. X_j
    1 < s < 2:              (s-1, 1) w.p. (1-X_i)/(2-s), (1, s-1) otherwise

(the last denominator is 2-s so the two branch probabilities sum to one and
the per-step marginals are preserved).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, InputError
from .negdep import JointTable
from .setfn import FractionalVector
from .utils import chunk_sizes, chunked_map

SNAP_TOL = 1e-12
EXACT_DIST_MAX_N = 10


@dataclass(frozen=True)
class PairingPolicy:
    """How the two fractional coordinates of each step are chosen.

    ``fixed-order-sweep`` always pairs the two fractional coordinates that
    come earliest in ``order`` (identity permutation when omitted), which
    fixes the shape of the branching tree; ``random-pair`` draws the pair
    uniformly at each step.
    """

    kind: str = "fixed-order-sweep"
    order: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("fixed-order-sweep", "random-pair"):
            raise InputError(f"unknown pairing policy kind {self.kind!r}")
        if self.order is not None:
            if sorted(self.order) != list(range(len(self.order))):
                raise InputError("order must be a permutation of 0..n-1")

    def resolved_order(self, n: int) -> tuple[int, ...]:
        if self.order is None:
            return tuple(range(n))
        if len(self.order) != n:
            raise InputError(f"policy order has length {len(self.order)}, expected {n}")
        return self.order


@dataclass(frozen=True)
class RoundingStep:
    i: int
    j: int
    case: str  # "I" | "II" | "III"
    branch: int  # 0 = first branch of the case, 1 = second
    prob: float


@dataclass
class RoundingTrace:
    steps: list[RoundingStep] = field(default_factory=list)
    residual: tuple[int, float, int] | None = None  # (index, Bernoulli prob, outcome)


def _snap(v: float) -> float:
    if abs(v) <= SNAP_TOL:
        return 0.0
    if abs(v - 1.0) <= SNAP_TOL:
        return 1.0
    return v


def _step_branches(xi: float, xj: float) -> tuple[str, float, tuple[float, float], tuple[float, float]]:
    """Case label, first-branch probability, and the two candidate updates."""
    s = xi + xj
    if abs(s - 1.0) <= SNAP_TOL:
        return "II", xi, (1.0, 0.0), (0.0, 1.0)
    if s < 1.0:
        return "I", xi / s, (s, 0.0), (0.0, s)
    return "III", (1.0 - xi) / (2.0 - s), (s - 1.0, 1.0), (1.0, s - 1.0)


def srinivasan_round(
    x: FractionalVector,
    policy: PairingPolicy | None = None,
    seed=None,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, RoundingTrace]:
    """Round x to a 0/1 vector by pairwise mass shifts.

    Marginals are preserved exactly (Pr[X_i = 1] = x_i) and the number of
    ones is always floor or ceil of sum(x).  Already-integral coordinates are
    never touched.  Returns the outcome and the per-step trace.
    """
    if policy is None:
        policy = PairingPolicy()
    if rng is None:
        rng = np.random.default_rng(seed)
    n = len(x)
    xs = [_snap(v) for v in x.x]
    trace = RoundingTrace()
    order = policy.resolved_order(n)
    frac = [i for i in order if 0.0 < xs[i] < 1.0]

    while len(frac) >= 2:
        if policy.kind == "random-pair":
            a, b = rng.choice(len(frac), size=2, replace=False)
            i, j = frac[min(a, b)], frac[max(a, b)]
        else:
            i, j = frac[0], frac[1]
        case, p_first, first, second = _step_branches(xs[i], xs[j])
        take_first = rng.random() < p_first
        xs[i], xs[j] = first if take_first else second
        xs[i], xs[j] = _snap(xs[i]), _snap(xs[j])
        trace.steps.append(
            RoundingStep(i, j, case, 0 if take_first else 1, p_first if take_first else 1.0 - p_first)
        )
        frac = [e for e in frac if 0.0 < xs[e] < 1.0]

    if frac:
        i = frac[0]
        p = xs[i]
        outcome = 1 if rng.random() < p else 0
        xs[i] = float(outcome)
        trace.residual = (i, p, outcome)

    return np.array([int(round(v)) for v in xs], dtype=np.int64), trace


def independent_round(
    x: FractionalVector, seed=None, rng: np.random.Generator | None = None
) -> np.ndarray:
    """Set coordinate i to 1 independently with probability x_i."""
    if rng is None:
        rng = np.random.default_rng(seed)
    return (rng.random(len(x)) < np.asarray(x.x)).astype(np.int64)


def scaled_independent_round(
    x: FractionalVector, k1: int, seed=None, rng: np.random.Generator | None = None
) -> np.ndarray:
    """Independent rounding of the vector scaled by 1 - sqrt(ln(k1)/k1).

    Baseline scheme that keeps the number of ones below k1 only with high
    probability instead of surely.
    """
    if k1 < 2:
        raise InputError(f"scaled rounding needs k1 >= 2, got {k1}")
    if rng is None:
        rng = np.random.default_rng(seed)
    scale = 1.0 - math.sqrt(math.log(k1) / k1)
    return (rng.random(len(x)) < scale * np.asarray(x.x)).astype(np.int64)


SCHEMES = ("srinivasan", "independent", "scaled")


def sample_scheme(
    x: FractionalVector,
    scheme: str,
    trials: int,
    seed,
    policy: PairingPolicy | None = None,
    k1: int | None = None,
    chunk: int = 2048,
) -> np.ndarray:
    """trials x n matrix of rounding outcomes.

    Trials are split into chunks with independently derived RNG streams, so
    results do not depend on how chunks are executed or merged.
    """
    if trials < 1:
        raise InputError("trials must be >= 1")
    if scheme not in SCHEMES:
        raise InputError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    if scheme == "scaled" and k1 is None:
        k1 = int(round(x.total))
    sizes = chunk_sizes(trials, chunk)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))

    def run_chunk(size: int, ss: np.random.SeedSequence) -> np.ndarray:
        rng = np.random.default_rng(ss)
        if scheme == "independent":
            return (rng.random((size, len(x))) < np.asarray(x.x)).astype(np.int64)
        if scheme == "scaled":
            scale = 1.0 - math.sqrt(math.log(k1) / k1)
            return (rng.random((size, len(x))) < scale * np.asarray(x.x)).astype(np.int64)
        out = np.empty((size, len(x)), dtype=np.int64)
        for t in range(size):
            out[t], _ = srinivasan_round(x, policy=policy, rng=rng)
        return out

    blocks = chunked_map(run_chunk, list(zip(sizes, seeds)))
    return np.vstack(blocks)


def exact_outcome_distribution(
    x: FractionalVector, policy: PairingPolicy | None = None
) -> JointTable:
    """Expand every branch of the fixed-order pairing tree with its exact
    probability, giving the explicit joint law of the rounded vector."""
    if policy is None:
        policy = PairingPolicy()
    if policy.kind != "fixed-order-sweep":
        raise InputError("exact enumeration requires the fixed-order-sweep policy")
    n = len(x)
    if n > EXACT_DIST_MAX_N:
        raise CapacityError(f"exact outcome enumeration needs n <= {EXACT_DIST_MAX_N}")
    order = policy.resolved_order(n)
    acc: dict[tuple[int, ...], float] = {}

    def rec(xs: tuple[float, ...], prob: float):
        frac = [i for i in order if 0.0 < xs[i] < 1.0]
        if not frac:
            key = tuple(int(round(v)) for v in xs)
            acc[key] = acc.get(key, 0.0) + prob
            return
        if len(frac) == 1:
            i = frac[0]
            lo = list(xs)
            hi = list(xs)
            lo[i], hi[i] = 0.0, 1.0
            rec(tuple(hi), prob * xs[i])
            rec(tuple(lo), prob * (1.0 - xs[i]))
            return
        i, j = frac[0], frac[1]
        _, p_first, first, second = _step_branches(xs[i], xs[j])
        for branch_prob, (vi, vj) in ((p_first, first), (1.0 - p_first, second)):
            if branch_prob <= 0.0:
                continue
            nxt = list(xs)
            nxt[i], nxt[j] = _snap(vi), _snap(vj)
            rec(tuple(nxt), prob * branch_prob)

    rec(tuple(_snap(v) for v in x.x), 1.0)
    outcomes = sorted(acc)
    return JointTable(n, outcomes, [acc[o] for o in outcomes])
