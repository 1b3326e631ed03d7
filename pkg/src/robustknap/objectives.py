"""Concrete objectives and cost models."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .core import Objective, StateBlock


# -- coverage family --------------------------------------------------------

class _CoverageBlock(StateBlock):
    def __init__(self, f: "CoverageObjective"):
        super().__init__(f)
        self.covered = np.zeros((4, f.universe), dtype=np.uint8)

    def append(self):
        r = len(self)
        if r == self.covered.shape[0]:
            grown = np.zeros((2 * r, self.covered.shape[1]), dtype=np.uint8)
            grown[:r] = self.covered
            self.covered = grown
        return super().append()

    def gains(self, e, k=None):
        k = len(self) if k is None else k
        f = self.f
        f._count(k)
        return _kernels.active.coverage_gains(f.indptr, f.indices, f.weights, self.covered, k, e)

    def add(self, row, e):
        f = self.f
        g = _kernels.active.coverage_add(f.indptr, f.indices, f.weights, self.covered, row, e)
        self.values[row] += g
        return g

    def copy(self):
        b = _CoverageBlock.__new__(_CoverageBlock)
        b.f = self.f
        b.values = self.values.copy()
        b.covered = self.covered.copy()
        return b


class CoverageObjective(Objective):
    """Weighted coverage: element ``e`` covers ``items[e]``; f(S) = total weight covered.

    Stored CSR-style (``indptr``/``indices``) so gains run in the compiled kernel.
    """

    def __init__(self, items: Sequence[Iterable[int]], weights=None, universe: int | None = None):
        lists = [np.unique(np.asarray(list(s), dtype=np.int64)) for s in items]
        if universe is None:
            universe = 1 + max((int(a.max()) for a in lists if a.size), default=-1)
        super().__init__(len(lists))
        self.universe = int(universe)
        self.indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum([a.size for a in lists], out=self.indptr[1:])
        self.indices = np.concatenate(lists) if lists else np.zeros(0, dtype=np.int64)
        if weights is None:
            weights = np.ones(self.universe)
        self.weights = np.asarray(weights, dtype=np.float64)
        if self.weights.shape != (self.universe,):
            raise ValueError("need one weight per universe item")
        if (self.weights < 0).any():
            raise ValueError("coverage weights must be nonnegative")

    def items(self, e: int) -> np.ndarray:
        return self.indices[self.indptr[e]:self.indptr[e + 1]]

    @property
    def empty_value(self):
        return 0.0

    def _value(self, ids):
        if not ids:
            return 0.0
        cov = np.zeros(self.universe, dtype=bool)
        for e in ids:
            cov[self.items(e)] = True
        return float(self.weights[cov].sum())

    def singleton(self, e):
        # same summation order as the block kernels, so screens and bucket tests agree exactly
        self._count()
        zero = np.zeros((1, self.universe), dtype=np.uint8)
        return float(_kernels.active.coverage_gains(self.indptr, self.indices, self.weights, zero, 1, e)[0])

    def states(self):
        return _CoverageBlock(self)


class ModularObjective(CoverageObjective):
    """f(S) = sum of nonnegative per-element weights."""

    def __init__(self, weights):
        w = np.asarray(weights, dtype=np.float64)
        super().__init__([[i] for i in range(w.size)], w, universe=w.size)


@dataclass
class Graph:
    """Undirected simple graph in CSR form (sorted neighbour lists)."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    labels: np.ndarray = field(default=None, repr=False)  # original vertex ids

    @classmethod
    def from_edges(cls, n: int, edges, labels=None) -> "Graph":
        edges = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            raise ValueError("edge endpoint out of range")
        edges = edges[edges[:, 0] != edges[:, 1]]
        both = np.concatenate([edges, edges[:, ::-1]])
        both = np.unique(both, axis=0) if both.size else both.reshape(0, 2)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, both[:, 0] + 1, 1)
        np.cumsum(indptr, out=indptr)
        if labels is None:
            labels = np.arange(n)
        return cls(n, indptr, both[:, 1].copy(), np.asarray(labels))

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    @property
    def edge_count(self) -> int:
        return self.indices.size // 2

    def induced(self, keep) -> "Graph":
        keep = np.sort(np.asarray(keep, dtype=np.int64))
        remap = -np.ones(self.n, dtype=np.int64)
        remap[keep] = np.arange(keep.size)
        src = np.repeat(np.arange(self.n), np.diff(self.indptr))
        a, b = remap[src], remap[self.indices]
        ok = (a >= 0) & (b >= 0) & (a < b)
        return Graph.from_edges(keep.size, np.stack([a[ok], b[ok]], axis=1), self.labels[keep])


class DominatingSetObjective(CoverageObjective):
    """f(Z) = |Z ∪ N(Z)| / |V|."""

    def __init__(self, g: Graph):
        closed = [np.append(g.neighbors(v), v) for v in range(g.n)]
        super().__init__(closed, np.full(g.n, 1.0 / max(g.n, 1)), universe=g.n)
        self.graph = g


def dominating_set_value(g: Graph, Z: Iterable[int]) -> float:
    Z = list(Z)
    if not Z:
        return 0.0
    if min(Z) < 0 or max(Z) >= g.n:
        raise ValueError("vertex id out of range")
    dom = set(Z)
    for v in Z:
        dom.update(g.neighbors(v).tolist())
    return len(dom) / g.n


# -- facility location ------------------------------------------------------

class _FacilityBlock(StateBlock):
    def __init__(self, f: "FacilityLocationObjective"):
        super().__init__(f)
        self.best = np.zeros((4, f.sim.shape[0]))

    def append(self):
        r = len(self)
        if r == self.best.shape[0]:
            grown = np.zeros((2 * r, self.best.shape[1]))
            grown[:r] = self.best
            self.best = grown
        return super().append()

    def gains(self, e, k=None):
        k = len(self) if k is None else k
        self.f._count(k)
        return _kernels.active.facility_gains(self.f.columns[e], self.best, k)

    def add(self, row, e):
        g = _kernels.active.facility_add(self.f.columns[e], self.best, row)
        self.values[row] += g
        return g

    def copy(self):
        b = _FacilityBlock.__new__(_FacilityBlock)
        b.f = self.f
        b.values = self.values.copy()
        b.best = self.best.copy()
        return b


class FacilityLocationObjective(Objective):
    """f(Z) = sum over targets x of max(0, max_{z in Z} sim[x, z]); f(∅) = 0.

    The clamp at zero keeps f monotone and nonnegative when similarities
    can be negative.
    """

    def __init__(self, sim):
        sim = np.asarray(sim, dtype=np.float64)
        if sim.ndim != 2:
            raise ValueError("similarity must be a targets x elements matrix")
        super().__init__(sim.shape[1])
        self.sim = sim
        # contiguous per-element columns for the kernels
        self.columns = np.ascontiguousarray(sim.T)

    @property
    def empty_value(self):
        return 0.0

    def _value(self, ids):
        if not ids:
            return 0.0
        cols = self.sim[:, sorted(ids)]
        return float(np.maximum(cols.max(axis=1), 0.0).sum())

    def singleton(self, e):
        self._count()
        zero = np.zeros((1, self.sim.shape[0]))
        return float(_kernels.active.facility_gains(self.columns[e], zero, 1)[0])

    def states(self):
        return _FacilityBlock(self)


@dataclass
class RatingsModel:
    """Mean-centred rating vectors, one row per movie (scipy CSR, movies x users)."""

    movie_ids: np.ndarray
    user_ids: np.ndarray
    vectors: "object"  # scipy.sparse.csr_matrix
    genres: list
    r_avg: float
    titles: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.movie_ids)

    def rated_by(self, user_index: int) -> np.ndarray:
        col = self.vectors.tocsc()[:, user_index]
        return np.sort(col.indices)

    def ratings_per_user(self) -> np.ndarray:
        return np.diff(self.vectors.tocsc().indptr)

    def similarity(self, X) -> np.ndarray:
        """Dense |X| x n matrix of dot products <v_x, v_z>."""
        X = np.asarray(X, dtype=np.int64)
        return np.asarray((self.vectors[X] @ self.vectors.T).todense())


def movie_coverage_objective(model: RatingsModel, X) -> FacilityLocationObjective:
    return FacilityLocationObjective(model.similarity(X))


def movie_coverage_value(model: RatingsModel, X, Z) -> float:
    Z = list(Z)
    if not Z or len(X) == 0:
        return 0.0
    sim = model.similarity(X)[:, Z]
    return float(np.maximum(sim.max(axis=1), 0.0).sum())


def pick_user(model: RatingsModel, rng: np.random.Generator, min_ratings: int = 20) -> int:
    """Uniformly random user; resample until they rated at least ``min_ratings`` movies."""
    counts = model.ratings_per_user()
    if not (counts >= min_ratings).any():
        raise ValueError(f"no user has {min_ratings} ratings")
    while True:
        u = int(rng.integers(len(counts)))
        if counts[u] >= min_ratings:
            return u


# -- costs ------------------------------------------------------------------

@dataclass(frozen=True)
class GenreCostSpec:
    good: frozenset
    bad: frozenset
    t: int = 2


ONE_KNAPSACK_GENRES = (GenreCostSpec(frozenset({"Comedy", "Horror"}),
                                     frozenset({"Adventure", "Action"})),)
TWO_KNAPSACK_GENRES = ONE_KNAPSACK_GENRES + (
    GenreCostSpec(frozenset({"Drama", "Romance"}), frozenset({"Sci-Fi", "Fantasy"})),)


def genre_cost(genres: Iterable[str], spec: GenreCostSpec) -> float:
    g = set(genres)
    return 1 + 0.5 * (len(g & spec.bad) - len(g & spec.good) + spec.t)


def genre_costs(model: RatingsModel, specs: Sequence[GenreCostSpec]) -> np.ndarray:
    return np.array([[genre_cost(gs, s) for gs in model.genres] for s in specs]).reshape(len(specs), -1)


def uniform_random_costs(n: int, d: int, seed: int) -> np.ndarray:
    """d x n matrix of independent U(1, 3) draws."""
    rng = np.random.default_rng(seed)
    return rng.uniform(1.0, 3.0, size=(d, n))
