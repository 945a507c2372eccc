"""Exponential-moment domination checks and Chernoff-type tail harnesses.

Two kinds of verification live here.  Exact checks compute expectations by
full summation over explicit joint tables (moment domination, the read-k
product inequality).  Monte-Carlo harnesses sample a rounding scheme or a
distribution and compare empirical tail frequencies against the closed-form
bounds exp(-mu0 * delta^2 / 2) and exp(-D(p0 ± eps || p0) * n / k).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, InputError
from .negdep import JointTable, marginal_means
from .rounding import PairingPolicy, sample_scheme
from .setfn import (
    BRUTEFORCE_MAX_N,
    EXACT_EXTENSION_MAX_N,
    FractionalVector,
    SetFunction,
    TableFunction,
    is_monotone_bruteforce,
    is_submodular_bruteforce,
    is_supermodular_bruteforce,
    multilinear_exact,
    multilinear_mc,
    CoverageFunction,
)

EXACT_SUPPORT_CAP = 1 << 20


def chernoff_lower_bound(mu0: float, delta: float) -> float:
    """exp(-mu0 * delta^2 / 2), the lower-tail bound at relative gap delta."""
    if mu0 < 0:
        raise InputError(f"mu0 must be nonnegative, got {mu0}")
    if not 0.0 < delta <= 1.0:
        raise InputError(f"delta must lie in (0, 1], got {delta}")
    return math.exp(-mu0 * delta * delta / 2.0)


def kl_divergence(p: float, q: float) -> float:
    """Bernoulli KL divergence D(p || q), with 0 ln 0 = 0."""
    if not 0.0 <= p <= 1.0:
        raise InputError(f"p must lie in [0,1], got {p}")
    if not 0.0 <= q <= 1.0:
        raise InputError(f"q must lie in [0,1], got {q}")
    if q in (0.0, 1.0):
        return 0.0 if p == q else math.inf
    out = 0.0
    if p > 0.0:
        out += p * math.log(p / q)
    if p < 1.0:
        out += (1.0 - p) * math.log((1.0 - p) / (1.0 - q))
    return out


def read_k_bounds(p0: float, eps: float, n: int, k: int) -> tuple[float, float]:
    """(upper-tail bound, lower-tail bound) for a read-k family of n
    functions with independent-case mean p0."""
    if k < 1 or n < 1:
        raise InputError("need n >= 1 and k >= 1")
    if eps < 0:
        raise InputError(f"eps must be nonnegative, got {eps}")
    if not 0.0 <= p0 + eps <= 1.0 or not 0.0 <= p0 - eps <= 1.0:
        raise InputError(f"p0 ± eps must stay in [0,1]; got p0={p0}, eps={eps}")
    upper = math.exp(-kl_divergence(p0 + eps, p0) * n / k)
    lower = math.exp(-kl_divergence(p0 - eps, p0) * n / k)
    return upper, lower


def _binary_masks(d: JointTable) -> np.ndarray:
    if not d.is_binary():
        raise InputError("expected a binary joint table")
    rows = d.support_array()
    return rows @ (1 << np.arange(d.n, dtype=np.int64))


def exponential_moment_exact(d: JointTable, f: SetFunction, lam: float) -> float:
    """E[exp(lam * f(X))] by exact summation over the table's support."""
    if d.n != f.n:
        raise InputError(f"table has {d.n} variables but function expects {f.n}")
    if d.size > EXACT_SUPPORT_CAP:
        raise CapacityError(f"support too large for exact summation ({d.size})")
    masks = _binary_masks(d)
    vals = np.array([f.evaluate(int(m)) for m in masks])
    return float(np.exp(lam * vals) @ d.prob_array())


# ---------------------------------------------------------------------------
# submodular lower-tail experiment


@dataclass
class TailExperiment:
    f: SetFunction
    x: FractionalVector
    scheme: str  # "srinivasan" | "independent" | "scaled"
    deltas: list[float]
    trials: int
    seed: int
    policy: PairingPolicy | None = None
    mu0_samples: int = 200_000

    def __post_init__(self):
        if self.trials < 1:
            raise InputError("trials must be >= 1")
        for d in self.deltas:
            if not 0.0 < d <= 1.0:
                raise InputError(f"delta must lie in (0,1], got {d}")


@dataclass(frozen=True)
class TailRow:
    delta: float
    empirical: float
    stderr: float
    bound: float
    ok: bool


@dataclass(frozen=True)
class TailReport:
    mu0: float
    empirical_mean: float
    trials: int
    rows: tuple[TailRow, ...]

    def all_ok(self) -> bool:
        return all(r.ok for r in self.rows)

    def to_json(self) -> dict:
        return {
            "mu0": self.mu0,
            "empirical_mean": self.empirical_mean,
            "trials": self.trials,
            "rows": [vars(r) for r in self.rows],
        }


def attest_unit_marginals(f: SetFunction) -> None:
    """Verify f is monotone submodular with all marginal values in [0,1].

    Brute force for n <= 16; for larger coverage functions the set weights
    bound the marginals by construction.  Raises InputError with a violating
    pair when the scan finds one.
    """
    if f.n <= BRUTEFORCE_MAX_N:
        if not is_monotone_bruteforce(f):
            raise InputError("function is not monotone")
        if not is_submodular_bruteforce(f):
            raise InputError("function is not submodular")
        vals = f.value_table()
        for e in range(f.n):
            masks = np.arange(1 << f.n)
            without = masks[(masks >> e) & 1 == 0]
            marg = vals[without | (1 << e)] - vals[without]
            bad = np.nonzero(marg > 1.0 + 1e-12)[0]
            if bad.size:
                raise InputError(
                    f"marginal value above 1 at element {e}, subset mask {int(without[bad[0]])}"
                )
        return
    if isinstance(f, CoverageFunction):
        for i, s in enumerate(f.sets):
            w = sum(f.weights[u] for u in s)
            if w > 1.0 + 1e-12:
                raise InputError(f"set {i} has weight {w} > 1, marginal bound fails at (e={i}, S=∅)")
        return
    raise CapacityError("cannot attest marginal bounds for a generic function with n > 16")


def eval_outcomes(f: SetFunction, outcomes: np.ndarray) -> np.ndarray:
    """f applied to each 0/1 row of the outcome matrix."""
    masks = outcomes.astype(np.int64) @ (1 << np.arange(f.n, dtype=np.int64))
    if f.n <= EXACT_EXTENSION_MAX_N:
        return f.value_table()[masks]
    return np.array([f.evaluate(int(m)) for m in masks])


def run_tail_experiment(exp: TailExperiment) -> TailReport:
    """Empirical Pr[f <= (1-delta) * mu0] under the chosen rounding scheme,
    compared against exp(-mu0 delta^2 / 2) per delta."""
    attest_unit_marginals(exp.f)
    if exp.f.n <= EXACT_EXTENSION_MAX_N:
        mu0 = multilinear_exact(exp.f, exp.x)
    else:
        mu0, _ = multilinear_mc(exp.f, exp.x, exp.mu0_samples, np.random.SeedSequence((exp.seed, 1)))
    outcomes = sample_scheme(exp.x, exp.scheme, exp.trials, exp.seed, policy=exp.policy)
    vals = eval_outcomes(exp.f, outcomes)
    rows = []
    for delta in exp.deltas:
        bound = chernoff_lower_bound(mu0, delta)
        hit = float(np.mean(vals <= (1.0 - delta) * mu0))
        stderr = math.sqrt(hit * (1.0 - hit) / exp.trials)
        rows.append(TailRow(delta, hit, stderr, bound, hit <= bound + 3.0 * stderr))
    return TailReport(mu0, float(vals.mean()), exp.trials, tuple(rows))


# ---------------------------------------------------------------------------
# read-k families


@dataclass
class ReadKFamily:
    """Functions f_j with range [0,1] over variable blocks P_j; the read
    factor k is the largest number of blocks any single variable touches."""

    m: int
    blocks: list[tuple[int, ...]]
    functions: list[SetFunction]
    k: int = field(init=False)

    def __post_init__(self):
        if self.m < 1:
            raise InputError("need m >= 1 variables")
        if len(self.blocks) != len(self.functions) or not self.blocks:
            raise InputError("blocks and functions must be nonempty and equal-length")
        self.blocks = [tuple(b) for b in self.blocks]
        for j, (blk, fj) in enumerate(zip(self.blocks, self.functions)):
            if len(set(blk)) != len(blk):
                raise InputError(f"block {j} repeats a variable")
            if any(not 0 <= v < self.m for v in blk):
                raise InputError(f"block {j} indexes outside 0..{self.m - 1}")
            if fj.n != len(blk):
                raise InputError(f"function {j} arity {fj.n} != block size {len(blk)}")
            tab = fj.value_table()
            if tab.min() < -1e-12 or tab.max() > 1.0 + 1e-12:
                raise InputError(f"function {j} leaves [0,1] (range [{tab.min()}, {tab.max()}])")
        self.k = self.read_factor()

    def read_factor(self) -> int:
        counts = [0] * self.m
        for blk in self.blocks:
            for v in blk:
                counts[v] += 1
        return max(counts)

    @property
    def size(self) -> int:
        return len(self.functions)

    def block_values(self, outcomes: np.ndarray, j: int) -> np.ndarray:
        blk = self.blocks[j]
        masks = outcomes[:, blk].astype(np.int64) @ (1 << np.arange(len(blk), dtype=np.int64))
        return self.functions[j].value_table()[masks]

    def sum_values(self, outcomes: np.ndarray) -> np.ndarray:
        total = np.zeros(len(outcomes))
        for j in range(self.size):
            total += self.block_values(outcomes, j)
        return total

    def independent_means(self, marginals: np.ndarray) -> np.ndarray:
        """E[f_j(X*)] per block under independent coordinates with the given
        Bernoulli marginals."""
        out = np.empty(self.size)
        for j, blk in enumerate(self.blocks):
            probs = np.array([1.0])
            for v in blk:
                probs = np.concatenate([probs * (1.0 - marginals[v]), probs * marginals[v]])
            out[j] = self.functions[j].value_table() @ probs
        return out

    @classmethod
    def from_json(cls, doc: dict) -> "ReadKFamily":
        try:
            m = int(doc["m"])
            blocks = doc["blocks"]
            functions = [TableFunction(fn["values"]) for fn in doc["functions"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed read-k family document: {exc}") from exc
        return cls(m, blocks, functions)

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "blocks": [list(b) for b in self.blocks],
            "functions": [{"values": list(map(float, f.value_table()))} for f in self.functions],
        }


def load_family(path: str) -> ReadKFamily:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON at line {exc.lineno} col {exc.colno}") from exc
    return ReadKFamily.from_json(doc)


def holder_lemma_check(
    family: ReadKFamily, d: JointTable, lam: float, rtol: float = 1e-10
) -> bool:
    """Exact check of E[prod_j F_j] <= (prod_j E[F_j^k])^(1/k) with
    F_j = exp(lam * f_j(X_{P_j})), under an independent (product) measure."""
    if d.n != family.m:
        raise InputError(f"table has {d.n} variables but family expects {family.m}")
    if d.size > (1 << 12):
        raise CapacityError(f"support too large for exact check ({d.size})")
    if not _is_product_measure(d):
        raise InputError("the product inequality is stated under an independent measure")
    outcomes = d.support_array()
    probs = d.prob_array()
    k = family.k
    total = family.sum_values(outcomes)
    lhs = float(np.exp(lam * total) @ probs)
    log_rhs = 0.0
    for j in range(family.size):
        vj = family.block_values(outcomes, j)
        log_rhs += math.log(float(np.exp(k * lam * vj) @ probs)) / k
    rhs = math.exp(log_rhs)
    return lhs <= rhs * (1.0 + rtol)


def _is_product_measure(d: JointTable, tol: float = 1e-9) -> bool:
    means_probs = {}
    rows = d.support_array()
    probs = d.prob_array()
    per_var = []
    for i in range(d.n):
        vals = {}
        for v, p in zip(rows[:, i], probs):
            vals[int(v)] = vals.get(int(v), 0.0) + p
        per_var.append(vals)
    lookup = {tuple(map(int, r)): p for r, p in zip(rows, probs)}
    import itertools as _it

    for combo in _it.product(*[sorted(v.items()) for v in per_var]):
        point = tuple(v for v, _ in combo)
        expected = 1.0
        for _, p in combo:
            expected *= p
        if abs(lookup.get(point, 0.0) - expected) > tol:
            return False
    return True


class IndependentSampler:
    """Independent Bernoulli coordinates with the given marginals."""

    def __init__(self, marginals):
        self.p = np.asarray(marginals, dtype=float)
        if np.any((self.p < 0) | (self.p > 1)):
            raise InputError("marginals must lie in [0,1]")

    @property
    def m(self) -> int:
        return self.p.size

    def marginal_means(self) -> np.ndarray:
        return self.p

    def sample(self, trials: int, seed) -> np.ndarray:
        rng = np.random.default_rng(seed)
        return (rng.random((trials, self.m)) < self.p).astype(np.int64)


class SrinivasanSampler:
    """Outcomes of the pairwise dependent rounding of a fractional vector."""

    def __init__(self, x: FractionalVector, policy: PairingPolicy | None = None):
        self.x = x
        self.policy = policy

    @property
    def m(self) -> int:
        return len(self.x)

    def marginal_means(self) -> np.ndarray:
        return self.x.as_array()

    def sample(self, trials: int, seed) -> np.ndarray:
        return sample_scheme(self.x, "srinivasan", trials, seed, policy=self.policy)


class TableSampler:
    """Samples rows of an explicit binary joint table."""

    def __init__(self, d: JointTable):
        if not d.is_binary():
            raise InputError("read-k sampling needs binary variables")
        self.d = d

    @property
    def m(self) -> int:
        return self.d.n

    def marginal_means(self) -> np.ndarray:
        return marginal_means(self.d)

    def sample(self, trials: int, seed) -> np.ndarray:
        return self.d.sample(trials, np.random.default_rng(seed))


@dataclass(frozen=True)
class ReadKRow:
    tail: str  # "upper" | "lower"
    eps: float
    empirical: float
    stderr: float
    bound: float
    ok: bool


@dataclass(frozen=True)
class ReadKReport:
    p0: float
    trials: int
    rows: tuple[ReadKRow, ...]

    def all_ok(self) -> bool:
        return all(r.ok for r in self.rows)

    def to_json(self) -> dict:
        return {"p0": self.p0, "trials": self.trials, "rows": [vars(r) for r in self.rows]}


def run_read_k_tail(
    family: ReadKFamily,
    source,
    eps_values,
    trials: int,
    seed,
    tails: str = "both",
) -> ReadKReport:
    """Empirical tails of sum_j f_j against the read-k bounds.

    The upper-tail claim needs every f_j supermodular; the lower-tail claim
    needs every f_j submodular.  p0 is the per-function mean under
    independent coordinates with the source's marginals.
    """
    if tails not in ("both", "upper", "lower"):
        raise InputError(f"tails must be both/upper/lower, got {tails!r}")
    if isinstance(source, JointTable):
        source = TableSampler(source)
    if source.m != family.m:
        raise InputError(f"source has {source.m} variables but family expects {family.m}")
    want_upper = tails in ("both", "upper")
    want_lower = tails in ("both", "lower")
    for j, fj in enumerate(family.functions):
        if want_upper and not is_supermodular_bruteforce(fj):
            raise InputError(f"upper-tail claim needs supermodular blocks; block {j} is not")
        if want_lower and not is_submodular_bruteforce(fj):
            raise InputError(f"lower-tail claim needs submodular blocks; block {j} is not")

    p0 = float(family.independent_means(source.marginal_means()).mean())
    nf = family.size
    outcomes = source.sample(trials, seed)
    sums = family.sum_values(outcomes)
    rows = []
    for eps in np.atleast_1d(np.asarray(eps_values, dtype=float)):
        eps = float(eps)
        upper, lower = read_k_bounds(p0, eps, nf, family.k)
        if want_upper:
            hit = float(np.mean(sums >= (p0 + eps) * nf))
            se = math.sqrt(hit * (1.0 - hit) / trials)
            rows.append(ReadKRow("upper", eps, hit, se, upper, hit <= upper + 3.0 * se))
        if want_lower:
            hit = float(np.mean(sums <= (p0 - eps) * nf))
            se = math.sqrt(hit * (1.0 - hit) / trials)
            rows.append(ReadKRow("lower", eps, hit, se, lower, hit <= lower + 3.0 * se))
    return ReadKReport(p0, trials, tuple(rows))
