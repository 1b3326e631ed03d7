"""Partition-and-bucket robust summaries.

One ``BucketGrid`` class covers the three single-threshold variants:

* ``"num"``  - robust to removing ``m`` items, one knapsack, dynamic buckets
* ``"mult"`` - robust to removing ``m`` items, ``d`` knapsacks, max-cost density
* ``"size"`` - robust to removing items of total cost ``M``, fixed buckets

Partition ``i`` holds buckets of capacity ``2^{i+1}`` (``2 t_i`` for
``"size"``), admits items of cost at most ``2^{i-1}`` and uses a density
threshold that halves with every partition. An item goes to the first
partition, then first bucket, that clears both the threshold and the
capacity check.

Nonempty buckets always form a prefix of a partition's bucket list: an empty
bucket accepts whenever any later nonempty bucket would (gains only shrink
as a bucket grows), so first-fit never skips an empty bucket. The grid keeps
only that prefix in memory plus the bucket count ``n_i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Optional, Sequence, TextIO

import numpy as np

from .core import InvalidInstanceError, KnapsackInstance, Objective, GroundElement, ceil_log2

VARIANTS = ("num", "mult", "size")


@dataclass(frozen=True)
class GridParams:
    """``removals`` is ``m`` for num/mult and the cost bound ``M`` for size.

    By default partitions run ``0..ell+1`` so that every item with cost up
    to ``K`` has a partition whose cost cap admits it. ``literal=True`` keeps
    ``0..ell`` only, which never stores items of cost above ``2^{ell-1}``.
    """

    variant: str
    K: float
    d: int
    removals: float
    tau_star: float
    tau: float
    literal: bool = False

    @cached_property
    def ell(self) -> int:
        return max(1, ceil_log2(self.K))

    @property
    def top(self) -> int:
        return self.ell if self.literal else self.ell + 1

    @property
    def w(self) -> int:
        return math.ceil(4 * self.ell * self.removals / self.K)

    @property
    def partition_count(self) -> int:
        return self.top + 1

    def with_tau_star(self, tau_star: float) -> "GridParams":
        return make_params(self.variant, self.K, self.d, self.removals, tau_star, self.literal)


def algnum_tau(tau_star: float, K: float) -> float:
    zeta = 1 - 1 / (2 * max(1, ceil_log2(K)))
    return 2 * tau_star / (32 * zeta + 3)


def algsize_tau(f_opt: float, M: float, K: float) -> float:
    """Threshold tuned for removals of total cost at most ``M``."""
    ell = max(1, ceil_log2(K))
    w = math.ceil(4 * ell * M / K)
    eta = 4 * M / (w * K) if w else 0.0
    return f_opt / (13 - 11 * eta)


def make_params(variant: str, K: float, d: int, removals: float, tau_star: float,
                literal: bool = False) -> GridParams:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if K < 1:
        raise ValueError("K must be at least 1")
    if removals < 0:
        raise ValueError("removal bound must be nonnegative")
    if not tau_star > 0:
        raise ValueError("tau_star must be positive")
    if variant != "mult" and d != 1:
        raise ValueError(f"variant {variant!r} supports a single knapsack only")
    if variant == "num":
        tau = algnum_tau(tau_star, K)
    elif variant == "mult":
        tau = tau_star / 4
    else:
        tau = algsize_tau(tau_star, removals, K)
    return GridParams(variant, float(K), int(d), removals, float(tau_star), float(tau), literal)


@dataclass
class Bucket:
    elements: list
    cost_totals: np.ndarray
    cached_value: float
    insertion_log: list


@dataclass(frozen=True)
class Placement:
    element: int
    partition: int
    bucket: int
    cost: tuple


class Partition:
    def __init__(self, params: GridParams, i: int, f: Objective):
        p = params
        self.index = i
        self.variant = p.variant
        self.d = p.d
        self.ell = p.ell
        two_i = 2.0 ** i
        self.unit = two_i
        if p.variant == "size":
            t = min(two_i, p.K)
            self.threshold = p.tau / t
            self.cost_cap = min(2.0 ** (i - 1), p.K)
            self.capacity = 2 * t
            self.strict = True
            self.saturation = t
            self.n_buckets = p.w * math.ceil(p.K / two_i)
            self.element_cap = 0
        else:
            if p.variant == "num":
                self.threshold = p.tau / two_i
                self.strict = False
                self.saturation = two_i
            else:
                self.threshold = p.tau / (two_i * (1 + 2 * p.d))
                self.strict = True
                self.saturation = min(two_i, p.K)
            self.cost_cap = 2.0 ** (i - 1)
            self.capacity = 2.0 ** (i + 1)
            self.n_buckets = p.w * math.ceil(p.K / two_i) + 8 * p.ell
            self.element_cap = 10 * p.w * two_i
        self.initial_buckets = self.n_buckets
        self._cnt = [0.0] * p.d
        self.members: list[list[int]] = []
        self.logs: list[list[tuple]] = []
        self._loads = np.zeros((4, p.d))
        self.block = f.states()
        self.size = 0

    @property
    def counters(self) -> np.ndarray:
        return np.array(self._cnt)

    @property
    def loads(self) -> np.ndarray:
        return self._loads[:len(self.members)]

    def admits(self, c: float, g0: float) -> bool:
        """Cost cap and the singleton screen: no bucket can clear the threshold
        if the element's gain over the empty set does not."""
        return c <= self.cost_cap and g0 / c >= self.threshold

    def first_fit(self, e: int, cost: np.ndarray, c: float, g0: float):
        k = len(self.members)
        if k:
            gains = self.block.gains(e, k)
            new = self._loads[:k] + cost
            fits = (new < self.capacity) if self.strict else (new <= self.capacity)
            ok = fits.all(axis=1) & (gains / c >= self.threshold)
            hit = np.flatnonzero(ok)
            if hit.size:
                j = int(hit[0])
                return j, float(gains[j] / c)
        if k < self.n_buckets:
            return k, g0 / c
        return None

    def place(self, j: int, e: int, cost: np.ndarray, density: float):
        if j == len(self.members):
            self.members.append([])
            self.logs.append([])
            self.block.append()
            if j == self._loads.shape[0]:
                grown = np.zeros((2 * j, self.d))
                grown[:j] = self._loads
                self._loads = grown
        self.members[j].append(e)
        self.logs[j].append((e, density))
        self._loads[j] += cost
        self.block.add(j, e)
        self.size += 1
        if self.variant == "num":
            s = self._cnt[0] + 8 * self.ell * float(cost[0])
            if self.size < self.element_cap:
                while s >= self.unit:
                    self.n_buckets += 1
                    s -= self.unit
            self._cnt[0] = s
        elif self.variant == "mult":
            step = 8 * self.ell
            cnt = [a + step * float(c) for a, c in zip(self._cnt, cost)]
            if self.size < self.element_cap:
                u = self.unit
                while max(cnt) >= u:
                    self.n_buckets += 1
                    cnt = [a - u if a > u else 0.0 for a in cnt]
            self._cnt = cnt

    def can_grow(self) -> bool:
        return self.variant != "size" and self.size < self.element_cap

    @property
    def buckets(self) -> list[Bucket]:
        out = []
        for j in range(self.n_buckets):
            if j < len(self.members):
                out.append(Bucket(list(self.members[j]), self._loads[j].copy(),
                                  float(self.block.values[j]), list(self.logs[j])))
            else:
                out.append(Bucket([], np.zeros(self.d), self.block.f.empty_value, []))
        return out

    def saturated(self) -> np.ndarray:
        """Per bucket (and per knapsack) flags: load at least half the capacity."""
        flags = np.zeros((self.n_buckets, self.d), dtype=bool)
        flags[:len(self.members)] = self.loads >= self.saturation
        return flags

    def copy_into(self, other: "Partition"):
        other.n_buckets = self.n_buckets
        other._cnt = list(self._cnt)
        other.members = [list(m) for m in self.members]
        other.logs = [list(g) for g in self.logs]
        other._loads = self._loads.copy()
        other.block = self.block.copy()
        other.size = self.size


class BucketGrid:
    def __init__(self, params: GridParams, f: Objective):
        self.params = params
        self.f = f
        self.partitions = [Partition(params, i, f) for i in range(params.top + 1)]
        self.placed: dict[int, tuple[int, int]] = {}

    @property
    def tau(self) -> float:
        return self.params.tau

    def __len__(self):
        return len(self.placed)

    def _prepare(self, e: int, cost, g0: Optional[float]):
        cost = np.asarray(cost, dtype=np.float64).reshape(-1)
        if cost.shape[0] != self.params.d:
            raise ValueError(f"element {e} has {cost.shape[0]} costs, grid expects {self.params.d}")
        c = float(cost.max())
        if g0 is None:
            g0 = self.f.singleton(e)
        return cost, c, g0

    def _search(self, e, cost, c, g0):
        if (cost > self.params.K).any():
            return None
        for part in self.partitions:
            if not part.admits(c, g0):
                continue
            hit = part.first_fit(e, cost, c, g0)
            if hit is not None:
                return part, hit
        return None

    def insert(self, e: int, cost, g0: Optional[float] = None) -> Optional[tuple[int, int]]:
        """Offer one stream element; returns ``(partition, bucket)`` or None if rejected.

        ``g0`` is the element's gain over the empty set, if the caller already
        has it (a ladder shares it across all grids).
        """
        if e in self.placed:
            raise ValueError(f"element {e} offered twice")
        cost, c, g0 = self._prepare(e, cost, g0)
        found = self._search(e, cost, c, g0)
        if found is None:
            return None
        part, (j, density) = found
        part.place(j, e, cost, density)
        self.placed[e] = (part.index, j)
        return part.index, j

    def would_accept(self, e: int, cost, g0: Optional[float] = None) -> bool:
        if e in self.placed:
            return False
        cost, c, g0 = self._prepare(e, cost, g0)
        return self._search(e, cost, c, g0) is not None

    def might_accept_later(self, e: int, cost, g0: Optional[float] = None) -> bool:
        """True if ``e`` is accepted now or could be by a bucket the grid may still create."""
        if e in self.placed:
            return False
        cost, c, g0 = self._prepare(e, cost, g0)
        if (cost > self.params.K).any():
            return False
        if self._search(e, cost, c, g0) is not None:
            return True
        return any(p.admits(c, g0) and p.can_grow() for p in self.partitions)

    def run(self, stream: Iterable[int], instance: KnapsackInstance) -> "BucketGrid":
        for e in stream:
            self.insert(int(e), instance.cost(e))
        return self

    def copy(self) -> "BucketGrid":
        g = BucketGrid.__new__(BucketGrid)
        g.params = self.params
        g.f = self.f
        g.placed = dict(self.placed)
        g.partitions = []
        for p in self.partitions:
            q = Partition.__new__(Partition)
            q.__dict__.update(p.__dict__)
            p.copy_into(q)
            g.partitions.append(q)
        return g

    def signature(self) -> tuple:
        """Exact grid state: bucket counts, counters and ordered bucket contents."""
        return tuple((p.n_buckets, tuple(p._cnt), tuple(tuple(m) for m in p.members))
                     for p in self.partitions)

    def elements(self) -> frozenset:
        return frozenset(self.placed)

    def summary(self) -> "RobustSummary":
        out = []
        for p in self.partitions:
            for j, members in enumerate(p.members):
                for e in members:
                    out.append((e, p.index, j))
        return RobustSummary(self.params, out)


class RobustSummary:
    """Elements kept by one grid, with their (partition, bucket) provenance."""

    def __init__(self, params: Optional[GridParams], placements: Sequence[tuple[int, int, int]],
                 costs: Optional[dict] = None):
        self.params = params
        self.placements = [tuple(int(x) for x in p) for p in placements]
        self.costs = costs or {}

    @property
    def tau_star(self) -> float:
        return self.params.tau_star

    @property
    def elements(self) -> frozenset:
        return frozenset(p[0] for p in self.placements)

    def __len__(self):
        return len(self.placements)

    def __iter__(self):
        return iter(self.placements)

    def __repr__(self):
        return f"RobustSummary(tau_star={self.params.tau_star if self.params else None}, size={len(self)})"


def run_grid(params: GridParams, f: Objective, instance: KnapsackInstance, stream: Iterable[int]) -> BucketGrid:
    if params.variant == "mult" and not instance.normalized:
        raise InvalidInstanceError("the multi-knapsack grid needs a normalized instance")
    return BucketGrid(params, f).run(stream, instance)


def algnum_init(m: int, K: float, tau_star: float, f: Objective) -> BucketGrid:
    return BucketGrid(make_params("num", K, 1, m, tau_star), f)


def algnum_insert(grid: BucketGrid, f: Objective, e: GroundElement):
    if np.asarray(e.cost).size != 1:
        raise ValueError("single-knapsack grid got a multi-knapsack element")
    return grid.insert(e.id, e.cost)


def algnum_run(stream, f, instance, m, tau_star, literal=False) -> RobustSummary:
    return run_grid(make_params("num", instance.K, 1, m, tau_star, literal), f, instance, stream).summary()


def algmult_run(stream, f, instance, m, tau_star, literal=False) -> RobustSummary:
    if not instance.normalized:
        raise InvalidInstanceError("the multi-knapsack grid needs a normalized instance")
    p = make_params("mult", instance.K, instance.d, m, tau_star, literal)
    return run_grid(p, f, instance, stream).summary()


def algsize_run(stream, f, instance, M, tau, literal=False) -> RobustSummary:
    """Fixed-bucket grid for removals of total cost at most ``M``; ``tau`` is the threshold itself."""
    p = make_params("size", instance.K, 1, M, 1.0, literal)
    p = replace(p, tau=float(tau), tau_star=float(tau) * (p.tau_star / p.tau))
    return run_grid(p, f, instance, stream).summary()


def prune(summary: RobustSummary, f: Objective, instance: KnapsackInstance) -> RobustSummary:
    """Replay the summary in order of increasing cost through a fresh grid."""
    if not summary.placements:
        return RobustSummary(summary.params, [])
    ids = sorted(summary.elements, key=lambda e: (instance.max_cost(e), e))
    return run_grid(summary.params, f, instance, ids).summary()


# -- text format ------------------------------------------------------------

def dump_summaries(summaries: Iterable[RobustSummary], fh: TextIO, instance: KnapsackInstance):
    """One block per summary: ``tau_star partition_count`` then
    ``element_id partition bucket cost_0 ... cost_{d-1}`` lines."""
    for s in summaries:
        p = s.params
        fh.write(f"# variant={p.variant} K={p.K!r} d={p.d} removals={p.removals!r} "
                 f"tau={p.tau!r} literal={int(p.literal)}\n")
        fh.write(f"{p.tau_star!r} {p.partition_count}\n")
        for e, i, j in s.placements:
            costs = " ".join(repr(float(x)) for x in instance.cost(e))
            fh.write(f"{e} {i} {j} {costs}\n")


def load_summaries(fh: TextIO) -> list[RobustSummary]:
    out = []
    meta = None
    current = None
    for lineno, raw in enumerate(fh, 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            fields = dict(tok.split("=", 1) for tok in line[1:].split() if "=" in tok)
            if "variant" in fields:
                meta = fields
            continue
        parts = line.split()
        if len(parts) == 2:
            tau_star, count = float(parts[0]), int(parts[1])
            params = None
            if meta is not None:
                params = GridParams(meta["variant"], float(meta["K"]), int(meta["d"]),
                                    float(meta["removals"]), tau_star, float(meta["tau"]),
                                    bool(int(meta["literal"])))
            current = RobustSummary(params, [])
            current.partition_count = count
            out.append(current)
            meta = None
        elif len(parts) >= 4 and current is not None:
            e, i, j = (int(x) for x in parts[:3])
            current.placements.append((e, i, j))
            current.costs[e] = tuple(float(x) for x in parts[3:])
        else:
            raise ValueError(f"line {lineno}: malformed summary line {line!r}")
    return out
