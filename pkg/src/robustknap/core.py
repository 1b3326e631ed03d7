"""Ground set, knapsack constraints and the objective-oracle contract."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np


class InvalidInstanceError(ValueError):
    pass


@dataclass(frozen=True)
class GroundElement:
    id: int
    cost: np.ndarray


@dataclass
class KnapsackInstance:
    """``d`` knapsacks over ``n`` elements.

    ``costs`` is the d x n cost matrix. ``budget`` is the per-row budget
    vector; once normalized every entry equals ``K``.
    """

    costs: np.ndarray
    budget: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        self.costs = np.atleast_2d(np.asarray(self.costs, dtype=np.float64))
        self.budget = np.atleast_1d(np.asarray(self.budget, dtype=np.float64))
        if self.budget.shape[0] != self.costs.shape[0]:
            raise InvalidInstanceError(
                f"budget has {self.budget.shape[0]} rows, costs have {self.costs.shape[0]}")

    @classmethod
    def normalized_from(cls, costs, K: float) -> "KnapsackInstance":
        """Build an instance whose costs are already on the unit-minimum scale."""
        costs = np.atleast_2d(np.asarray(costs, dtype=np.float64))
        if costs.size and costs.min() < 1:
            raise InvalidInstanceError("normalized costs must be >= 1")
        return cls(costs, np.full(costs.shape[0], float(K)), normalized=True)

    @property
    def d(self) -> int:
        return self.costs.shape[0]

    @property
    def n(self) -> int:
        return self.costs.shape[1]

    @property
    def K(self) -> float:
        if not self.normalized:
            raise InvalidInstanceError("K is only defined for a normalized instance")
        return float(self.budget[0])

    def cost(self, e: int) -> np.ndarray:
        return self.costs[:, e]

    def element(self, e: int) -> GroundElement:
        return GroundElement(int(e), self.costs[:, e].copy())

    def max_cost(self, e: int) -> float:
        return float(self.costs[:, e].max())

    def admissible(self) -> np.ndarray:
        """Ids of elements that fit the budget on their own; the rest can never be chosen."""
        if self.n == 0:
            return np.zeros(0, dtype=np.int64)
        ok = (self.costs <= self.budget[:, None]).all(axis=0)
        return np.flatnonzero(ok)

    def total_cost(self, ids: Iterable[int]) -> np.ndarray:
        ids = np.fromiter(ids, dtype=np.int64)
        if ids.size == 0:
            return np.zeros(self.d)
        if ids.min() < 0 or ids.max() >= self.n:
            raise ValueError("unknown element id")
        return self.costs[:, ids].sum(axis=1)


def normalize(instance: KnapsackInstance) -> KnapsackInstance:
    """Rescale rows to a common budget, then scale so the smallest cost is 1."""
    if instance.normalized:
        return instance
    C = instance.costs
    b = instance.budget
    if (C <= 0).any() or (b <= 0).any():
        raise InvalidInstanceError("costs and budgets must be strictly positive")
    scale = b[0] / b
    C = C * scale[:, None]
    b = b * scale
    low = C.min() if C.size else 1.0
    return KnapsackInstance(C / low, b / low, normalized=True)


def is_feasible(instance: KnapsackInstance, ids: Iterable[int]) -> bool:
    tot = instance.total_cost(ids)
    return bool((tot <= instance.budget).all())


@dataclass
class Solution:
    elements: frozenset
    value: float
    cost_totals: np.ndarray
    # certified upper bound on OPT, set by the single-knapsack greedy solver
    certificate: Optional[float] = None

    def __len__(self):
        return len(self.elements)


class StateBlock:
    """Rows of cached set states for one objective.

    Row ``r`` represents a set S_r with ``values[r] == f(S_r)``. Gains of an
    element against the first ``k`` rows cost ``k`` oracle calls; adding an
    element updates the cache in place.
    """

    def __init__(self, f: "Objective"):
        self.f = f
        self.values = np.zeros(0)

    def __len__(self):
        return self.values.shape[0]

    def append(self) -> int:
        self.values = np.append(self.values, self.f.empty_value)
        return self.values.shape[0] - 1

    def gains(self, e: int, k: Optional[int] = None) -> np.ndarray:
        raise NotImplementedError

    def add(self, row: int, e: int) -> float:
        raise NotImplementedError

    def copy(self) -> "StateBlock":
        raise NotImplementedError


class _SetBlock(StateBlock):
    """Fallback block that stores explicit sets and calls ``evaluate``."""

    def __init__(self, f):
        super().__init__(f)
        self.sets = []

    def append(self):
        self.sets.append(set())
        return super().append()

    def gains(self, e, k=None):
        k = len(self) if k is None else k
        out = np.empty(k)
        for r in range(k):
            S = self.sets[r]
            out[r] = 0.0 if e in S else self.f.evaluate(S | {e}) - self.values[r]
        return out

    def add(self, row, e):
        S = self.sets[row]
        if e in S:
            return 0.0
        S.add(e)
        new = self.f._value(S)
        gain = new - self.values[row]
        self.values[row] = new
        return gain

    def copy(self):
        b = _SetBlock(self.f)
        b.sets = [set(s) for s in self.sets]
        b.values = self.values.copy()
        return b


class Objective:
    """Monotone submodular ``f`` over element ids ``0..n-1``.

    Subclasses implement ``_value``; those with a fast incremental form also
    override ``states`` and ``singleton``. ``eval_count`` counts oracle calls
    and is safe to bump from several threads.
    """

    def __init__(self, n: int):
        self.n = int(n)
        self._calls = 0
        self._lock = threading.Lock()

    @property
    def eval_count(self) -> int:
        return self._calls

    def _count(self, k: int = 1):
        with self._lock:
            self._calls += k

    def reset_count(self):
        with self._lock:
            self._calls = 0

    @property
    def empty_value(self) -> float:
        return float(self._value(()))

    def _value(self, ids) -> float:
        raise NotImplementedError

    def _check(self, ids):
        for e in ids:
            if not 0 <= e < self.n:
                raise ValueError(f"element id {e} out of range 0..{self.n - 1}")

    def evaluate(self, ids: Iterable[int]) -> float:
        ids = set(int(e) for e in ids)
        self._check(ids)
        self._count()
        return float(self._value(ids))

    def singleton(self, e: int) -> float:
        """Gain of ``e`` over the empty set (one oracle call)."""
        return self.evaluate((e,)) - self.empty_value

    def states(self) -> StateBlock:
        return _SetBlock(self)


def marginal_gain(f: Objective, S: Iterable[int], e: int, f_S: Optional[float] = None) -> float:
    S = set(S)
    if e in S:
        return 0.0
    if f_S is None:
        f_S = f.evaluate(S)
    return f.evaluate(S | {e}) - f_S


def marginal_density(f: Objective, S: Iterable[int], e: int, cost: float,
                     f_S: Optional[float] = None) -> float:
    """Gain per unit cost; pass ``max_a c_a(e)`` as ``cost`` for several knapsacks."""
    if not cost > 0:
        raise ValueError("cost must be positive")
    return marginal_gain(f, S, e, f_S) / cost


def ceil_log2(K: float) -> int:
    """``ceil(log2 K)``, computed without floating log error at exact powers of two."""
    if K <= 1:
        return 0
    m, ex = math.frexp(K)
    return ex - 1 if m == 0.5 else ex
