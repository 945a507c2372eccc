"""Set functions over a finite ground set and their multilinear extensions.

Subsets of the ground set are represented as int bitmasks (bit i = element i),
which keeps full 2^n enumerations cheap at the scales the exact routines
accept (n <= 64 for plain evaluation, n <= 20 for extension enumeration).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import CapacityError, InputError

EXACT_EXTENSION_MAX_N = 20
BRUTEFORCE_MAX_N = 16


def mask_of(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


def indices_of(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


@dataclass(frozen=True)
class GroundSet:
    n: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.n < 1:
            raise InputError(f"ground set must have n >= 1, got {self.n}")
        if self.labels is not None:
            if len(self.labels) != self.n:
                raise InputError("labels length must equal n")
            if len(set(self.labels)) != self.n:
                raise InputError("labels must be unique")

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    def check_subset(self, mask: int) -> None:
        if mask < 0 or mask & ~self.full_mask:
            raise InputError(
                f"subset mask {mask:#x} has elements outside ground set of size {self.n}"
            )


class SetFunction:
    """Deterministic oracle over subsets of a ground set.

    Subclasses implement ``_eval_mask``; callers go through :meth:`evaluate`,
    which validates the subset.  ``kind`` is a tag used by I/O and reports.
    """

    kind = "abstract"

    def __init__(self, ground: GroundSet):
        self.ground = ground
        self._table: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.ground.n

    def _eval_mask(self, mask: int) -> float:
        raise NotImplementedError

    def evaluate(self, subset: int) -> float:
        """f(S) for a subset given as a bitmask."""
        self.ground.check_subset(subset)
        if self._table is not None:
            return float(self._table[subset])
        return self._eval_mask(subset)

    def _cursor(self) -> "_EvalCursor":
        """Incremental evaluator used by full 2^n walks; subclasses may
        provide one that reuses work between adjacent subsets."""
        return _GenericCursor(self)

    def value_table(self) -> np.ndarray:
        """All 2^n values, indexed by subset bitmask.

        Built once per instance by a Gray-code walk so incremental cursors
        (e.g. coverage union/weight updates) are reused; cached afterwards.
        """
        if self._table is not None:
            return self._table
        n = self.n
        if n > EXACT_EXTENSION_MAX_N:
            raise CapacityError(f"value table needs n <= {EXACT_EXTENSION_MAX_N}, got {n}")
        vals = np.empty(1 << n)
        cur = self._cursor()
        mask = 0
        vals[0] = cur.value()
        for step in range(1, 1 << n):
            bit = (step & -step).bit_length() - 1
            if mask & (1 << bit):
                cur.remove(bit)
                mask &= ~(1 << bit)
            else:
                cur.add(bit)
                mask |= 1 << bit
            vals[mask] = cur.value()
        self._table = vals
        return vals


class _EvalCursor:
    def add(self, i: int) -> None:
        raise NotImplementedError

    def remove(self, i: int) -> None:
        raise NotImplementedError

    def value(self) -> float:
        raise NotImplementedError


class _GenericCursor(_EvalCursor):
    def __init__(self, f: SetFunction):
        self.f = f
        self.mask = 0

    def add(self, i):
        self.mask |= 1 << i

    def remove(self, i):
        self.mask &= ~(1 << i)

    def value(self):
        return self.f._eval_mask(self.mask)


class CoverageFunction(SetFunction):
    """Weighted coverage: f(S) = total weight of the union of the chosen sets.

    Monotone and submodular by construction.
    """

    kind = "coverage"

    def __init__(
        self,
        universe_size: int,
        sets: Sequence[Iterable[int]],
        weights: Sequence[float] | None = None,
        labels: tuple[str, ...] | None = None,
    ):
        super().__init__(GroundSet(len(sets), labels))
        if universe_size < 0:
            raise InputError("universe_size must be nonnegative")
        self.universe_size = universe_size
        self.sets: list[tuple[int, ...]] = []
        for s in sets:
            elems = sorted(set(s))
            if elems and (elems[0] < 0 or elems[-1] >= universe_size):
                raise InputError(f"universe index out of range in set {elems}")
            self.sets.append(tuple(elems))
        if weights is None:
            weights = [1.0] * universe_size
        if len(weights) != universe_size:
            raise InputError("weights length must equal universe_size")
        if any(w < 0 for w in weights):
            raise InputError("weights must be nonnegative")
        self.weights = tuple(float(w) for w in weights)
        if any(w != 1.0 for w in self.weights):
            self.kind = "weighted-coverage"

    def _eval_mask(self, mask: int) -> float:
        covered = set()
        m = mask
        while m:
            i = (m & -m).bit_length() - 1
            covered.update(self.sets[i])
            m &= m - 1
        return sum(self.weights[u] for u in covered)

    def _cursor(self):
        return _CoverageCursor(self)

    @classmethod
    def from_json(cls, doc: dict) -> "CoverageFunction":
        try:
            universe_size = int(doc["universe_size"])
            sets = doc["sets"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed coverage document: {exc}") from exc
        weights = doc.get("weights")
        return cls(universe_size, sets, weights)

    def to_json(self) -> dict:
        return {
            "universe_size": self.universe_size,
            "weights": list(self.weights),
            "sets": [list(s) for s in self.sets],
        }


class _CoverageCursor(_EvalCursor):
    """Per-universe-element cover counts; toggling one ground element costs
    O(|set|)."""

    def __init__(self, f: CoverageFunction, base_mask: int = 0):
        self.f = f
        self.counts = [0] * f.universe_size
        self.total = 0.0
        m = base_mask
        while m:
            i = (m & -m).bit_length() - 1
            self.add(i)
            m &= m - 1

    def add(self, i):
        counts, w = self.counts, self.f.weights
        for u in self.f.sets[i]:
            counts[u] += 1
            if counts[u] == 1:
                self.total += w[u]

    def remove(self, i):
        counts, w = self.counts, self.f.weights
        for u in self.f.sets[i]:
            counts[u] -= 1
            if counts[u] == 0:
                self.total -= w[u]

    def value(self):
        return self.total


class TableFunction(SetFunction):
    """Set function given by an explicit table of 2^n values."""

    kind = "synthetic-table"

    def __init__(self, values: Sequence[float], labels: tuple[str, ...] | None = None):
        size = len(values)
        n = size.bit_length() - 1
        if size != 1 << n or n < 1:
            raise InputError(f"table length must be a power of two >= 2, got {size}")
        super().__init__(GroundSet(n, labels))
        table = np.asarray(values, dtype=float).copy()
        if not np.all(np.isfinite(table)):
            raise InputError("table values must be finite")
        self._table = table

    def _eval_mask(self, mask: int) -> float:
        return float(self._table[mask])


class ContractedFunction(SetFunction):
    """Residual function g(T) = f(T | S) = f(T ∪ S) - f(S) on ground set N \\ S.

    Element j of the contraction is the j-th element of N \\ S in increasing
    index order.  Preserves monotonicity and submodularity.
    """

    kind = "contracted"

    def __init__(self, base: SetFunction, fixed_mask: int):
        base.ground.check_subset(fixed_mask)
        self.base = base
        self.fixed_mask = fixed_mask
        self.rest = [i for i in range(base.n) if not fixed_mask & (1 << i)]
        if not self.rest:
            raise InputError("contraction fixes the whole ground set")
        super().__init__(GroundSet(len(self.rest)))
        self.base_value = base.evaluate(fixed_mask)

    def lift_mask(self, mask: int) -> int:
        m = 0
        for j, i in enumerate(self.rest):
            if mask & (1 << j):
                m |= 1 << i
        return m

    def _eval_mask(self, mask: int) -> float:
        return self.base.evaluate(self.fixed_mask | self.lift_mask(mask)) - self.base_value

    def _cursor(self):
        return _ContractedCursor(self)


class _ContractedCursor(_EvalCursor):
    def __init__(self, g: ContractedFunction):
        self.g = g
        base = g.base
        if isinstance(base, CoverageFunction):
            self.inner: _EvalCursor = _CoverageCursor(base, g.fixed_mask)
        else:
            self.inner = base._cursor()
            m = g.fixed_mask
            while m:
                i = (m & -m).bit_length() - 1
                self.inner.add(i)
                m &= m - 1

    def add(self, j):
        self.inner.add(self.g.rest[j])

    def remove(self, j):
        self.inner.remove(self.g.rest[j])

    def value(self):
        return self.inner.value() - self.g.base_value


class LambdaFunction(SetFunction):
    """Wraps an arbitrary mask -> value callable (synthetic test functions)."""

    kind = "synthetic-table"

    def __init__(self, n: int, fn: Callable[[int], float]):
        super().__init__(GroundSet(n))
        self.fn = fn

    def _eval_mask(self, mask: int) -> float:
        return float(self.fn(mask))


def evaluate(f: SetFunction, subset: int) -> float:
    return f.evaluate(subset)


def marginal(f: SetFunction, e: int, subset: int) -> float:
    """f(e | S) = f(S ∪ {e}) - f(S).  Requires e ∉ S."""
    f.ground.check_subset(subset)
    if not 0 <= e < f.n:
        raise InputError(f"element {e} outside ground set of size {f.n}")
    if subset & (1 << e):
        raise InputError(f"element {e} already in subset")
    return f.evaluate(subset | (1 << e)) - f.evaluate(subset)


def contract(f: SetFunction, subset: int) -> ContractedFunction:
    """Residual function f(· | S) on the ground set N \\ S."""
    return ContractedFunction(f, subset)


def _check_capacity(n: int) -> None:
    if n > BRUTEFORCE_MAX_N:
        raise CapacityError(f"full 2^n scan needs n <= {BRUTEFORCE_MAX_N}, got {n}")


def is_monotone_bruteforce(f: SetFunction, tol: float = 1e-12) -> bool:
    """Full-scan check that f(S) <= f(S ∪ {i}) for all S, i."""
    _check_capacity(f.n)
    vals = f.value_table()
    masks = np.arange(1 << f.n)
    for i in range(f.n):
        without = masks[(masks >> i) & 1 == 0]
        if np.any(vals[without] > vals[without | (1 << i)] + tol):
            return False
    return True


def _pairwise_submodular(vals: np.ndarray, n: int, tol: float) -> bool:
    # local characterization: f(S+i) + f(S+j) >= f(S+i+j) + f(S), equivalent
    # to the diminishing-returns inequality over all X ⊆ Y, x ∉ Y
    masks = np.arange(1 << n)
    for i in range(n):
        for j in range(i + 1, n):
            s = masks[((masks >> i) & 1 == 0) & ((masks >> j) & 1 == 0)]
            lhs = vals[s | (1 << i)] + vals[s | (1 << j)]
            rhs = vals[s | (1 << i) | (1 << j)] + vals[s]
            if np.any(lhs < rhs - tol):
                return False
    return True


def is_submodular_bruteforce(f: SetFunction, tol: float = 1e-9) -> bool:
    _check_capacity(f.n)
    return _pairwise_submodular(f.value_table(), f.n, tol)


def is_supermodular_bruteforce(f: SetFunction, tol: float = 1e-9) -> bool:
    _check_capacity(f.n)
    return _pairwise_submodular(-f.value_table(), f.n, tol)


@dataclass(frozen=True)
class FractionalVector:
    """Point in [0,1]^n; input to rounding schemes and multilinear extensions."""

    x: tuple[float, ...]

    def __init__(self, x: Iterable[float]):
        vals = tuple(float(v) for v in x)
        for v in vals:
            if not 0.0 <= v <= 1.0:
                raise InputError(f"coordinate {v} outside [0,1]")
        object.__setattr__(self, "x", vals)

    def __len__(self) -> int:
        return len(self.x)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.x)

    @property
    def total(self) -> float:
        return float(math.fsum(self.x))

    def support_mask(self) -> int:
        return mask_of(i for i, v in enumerate(self.x) if v >= 0.5)

    @classmethod
    def from_json(cls, doc: dict) -> "FractionalVector":
        try:
            return cls(doc["x"])
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed fractional vector document: {exc}") from exc


def _bernoulli_probs(x: Sequence[float]) -> np.ndarray:
    """probs[mask] = Π_{i∈mask} x_i · Π_{i∉mask} (1-x_i), built by doubling."""
    probs = np.array([1.0])
    for xi in x:
        probs = np.concatenate([probs * (1.0 - xi), probs * xi])
    return probs


def multilinear_exact(f: SetFunction, x: FractionalVector) -> float:
    """F(x) = Σ_S f(S) Π_{i∈S} x_i Π_{i∉S} (1-x_i), exact 2^n enumeration."""
    if len(x) != f.n:
        raise InputError(f"x has {len(x)} coordinates, function expects {f.n}")
    if f.n > EXACT_EXTENSION_MAX_N:
        raise CapacityError(
            f"exact multilinear extension needs n <= {EXACT_EXTENSION_MAX_N}, got {f.n}"
        )
    return float(f.value_table() @ _bernoulli_probs(x.x))


def multilinear_mc(f: SetFunction, x: FractionalVector, samples: int, seed) -> tuple[float, float]:
    """Monte-Carlo estimate of F(x): (sample mean, sample standard error)."""
    if len(x) != f.n:
        raise InputError(f"x has {len(x)} coordinates, function expects {f.n}")
    if samples < 1:
        raise InputError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    draws = rng.random((samples, f.n)) < np.asarray(x.x)
    powers = 1 << np.arange(f.n, dtype=np.int64)
    masks = draws @ powers
    vals = np.fromiter((f.evaluate(int(m)) for m in masks), dtype=float, count=samples)
    est = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return est, stderr


def multilinear_gradient(f: SetFunction, x: FractionalVector) -> np.ndarray:
    """All partial derivatives ∂F/∂x_i at x (exact, n <= 20)."""
    if len(x) != f.n:
        raise InputError(f"x has {len(x)} coordinates, function expects {f.n}")
    if f.n > EXACT_EXTENSION_MAX_N:
        raise CapacityError(f"exact gradient needs n <= {EXACT_EXTENSION_MAX_N}, got {f.n}")
    vals = f.value_table()
    grad = np.empty(f.n)
    for i in range(f.n):
        xs = list(x.x)
        xs[i] = 1.0
        hi = vals @ _bernoulli_probs(xs)
        xs[i] = 0.0
        lo = vals @ _bernoulli_probs(xs)
        grad[i] = hi - lo
    return grad


def multilinear_partial(
    f: SetFunction,
    x: FractionalVector,
    i: int,
    samples: int | None = None,
    seed=None,
) -> float:
    """∂F/∂x_i = F(x; x_i←1) - F(x; x_i←0).

    Exact for n <= 20; beyond that a Monte-Carlo difference estimate is used
    and ``samples`` must be given.
    """
    if not 0 <= i < f.n:
        raise InputError(f"element {i} outside ground set of size {f.n}")
    if f.n <= EXACT_EXTENSION_MAX_N:
        return float(multilinear_gradient(f, x)[i])
    if samples is None:
        raise CapacityError(
            f"exact partial needs n <= {EXACT_EXTENSION_MAX_N}; pass samples= for MC mode"
        )
    rng = np.random.default_rng(seed)
    draws = rng.random((samples, f.n)) < np.asarray(x.x)
    draws[:, i] = False
    powers = 1 << np.arange(f.n, dtype=np.int64)
    masks = draws @ powers
    diffs = [f.evaluate(int(m) | (1 << i)) - f.evaluate(int(m)) for m in masks]
    return float(np.mean(diffs))


def load_coverage(path: str) -> CoverageFunction:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON at line {exc.lineno} col {exc.colno}") from exc
    return CoverageFunction.from_json(doc)
