"""Geometric guesses of f(OPT) and the post-removal query."""

from __future__ import annotations

import heapq
import math
from typing import Callable, Iterable, Mapping, Optional

import numpy as np

from .core import KnapsackInstance, Objective, Solution
from .grid import BucketGrid, RobustSummary, make_params, prune


def floor_index(x: float, base: float) -> int:
    """Largest j with base**j <= x."""
    j = math.floor(math.log(x) / math.log(base))
    while base ** j > x:
        j -= 1
    while base ** (j + 1) <= x:
        j += 1
    return j


def ceil_index(x: float, base: float) -> int:
    """Smallest j with base**j >= x."""
    j = math.ceil(math.log(x) / math.log(base))
    while base ** j < x:
        j += 1
    while base ** (j - 1) >= x:
        j -= 1
    return j


def ladder_size(lo: float, hi: float, eps: float) -> int:
    return ceil_index(hi, 1 + eps) - floor_index(lo, 1 + eps) + 1


class GuessLadder:
    """Parallel summarizers, one per guess ``tau_star = (1+eps)^j`` of f(OPT).

    After removing at most ``removals`` items, f(OPT) lies between the
    ``(removals+1)``-th largest singleton value and ``K * v_max`` (costs are
    at least 1, so OPT has at most K items). With ``anchor="stream"`` guesses
    are created lazily as these running bounds move, and a guess is dropped
    once it falls below the lower bound (which only rises), unless
    ``keep_stale`` is set, in which case it is frozen with its summary. With
    ``anchor="fixed"`` the caller passes ``bounds=(lo, hi)`` and every guess
    sees the whole stream.
    """

    def __init__(self, f: Objective, instance: KnapsackInstance,
                 factory: Callable[[float], object], eps: float, removals: int = 0,
                 anchor: str = "stream", bounds: Optional[tuple[float, float]] = None,
                 keep_stale: bool = False):
        if not 0 < eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if anchor not in ("stream", "fixed"):
            raise ValueError(f"unknown anchor policy {anchor!r}")
        self.f = f
        self.instance = instance
        self.factory = factory
        self.base = 1 + eps
        self.eps = eps
        self.keep = int(removals) + 1
        self.anchor = anchor
        self.keep_stale = keep_stale
        self.grids: dict[int, object] = {}
        self._top: list[float] = []
        self.v_max = 0.0
        self.live = range(0)
        if anchor == "fixed":
            if bounds is None:
                raise ValueError("fixed anchoring needs bounds")
            lo, hi = bounds
            self.live = range(floor_index(lo, self.base), ceil_index(hi, self.base) + 1)
            for j in self.live:
                self.grids[j] = factory(self.base ** j)

    def _track(self, g0: float):
        self.v_max = max(self.v_max, g0)
        if len(self._top) < self.keep:
            heapq.heappush(self._top, g0)
        elif g0 > self._top[0]:
            heapq.heapreplace(self._top, g0)
        lo = self._top[0]
        hi = self.instance.K * self.v_max
        live = range(floor_index(lo, self.base), ceil_index(hi, self.base) + 1)
        for j in live:
            if j not in self.grids:
                self.grids[j] = self.factory(self.base ** j)
        if not self.keep_stale and live.start > self.live.start:
            for j in [j for j in self.grids if j < live.start]:
                del self.grids[j]
        self.live = live

    def offer(self, e: int):
        cost = self.instance.cost(e)
        if (cost > self.instance.budget).any():
            return
        g0 = self.f.singleton(e)
        # thresholds are positive, so a zero-gain element is rejected everywhere
        if g0 <= 0:
            return
        if self.anchor == "stream":
            self._track(g0)
        for j in self.live:
            self.grids[j].insert(e, cost, g0)

    def run(self, stream: Iterable[int]) -> "GuessLadder":
        for e in stream:
            self.offer(int(e))
        return self

    def tau_stars(self) -> list[float]:
        return [self.base ** j for j in sorted(self.grids)]

    def summaries(self) -> dict[float, object]:
        return {self.base ** j: self.grids[j].summary() for j in sorted(self.grids)}


def guess_ladder_run(stream, f: Objective, instance: KnapsackInstance, variant: str, eps: float,
                     removals: float, anchor: str = "stream", bounds=None,
                     literal: bool = False, keep_stale: bool = False) -> dict[float, RobustSummary]:
    """Run one bucket grid per guess and return ``{tau_star: summary}``.

    For ``variant="size"`` the removal bound is a total cost ``M``; since
    costs are at least 1 it also bounds the number of removed items.
    """
    d = instance.d

    def factory(tau_star):
        return BucketGrid(make_params(variant, instance.K, d, removals, tau_star, literal), f)

    ladder = GuessLadder(f, instance, factory, eps, int(math.floor(removals)), anchor, bounds,
                         keep_stale)
    return ladder.run(stream).summaries()


def prune_all(summaries: Mapping[float, RobustSummary], f: Objective,
              instance: KnapsackInstance) -> dict[float, RobustSummary]:
    return {t: prune(s, f, instance) for t, s in summaries.items()}


def _elements(s) -> frozenset:
    if isinstance(s, RobustSummary):
        return s.elements
    return frozenset(s)


def robust_query(summaries: Mapping[float, object], removed: Iterable[int], f: Objective,
                 instance: KnapsackInstance, solver=None) -> Solution:
    """Best offline solution over all guesses on ``summary - removed``, original budget."""
    if solver is None:
        from .offline import offline_greedy as solver
    removed = frozenset(removed)
    best = Solution(frozenset(), f.empty_value, np.zeros(instance.d))
    seen = set()
    for t in sorted(summaries):
        T = _elements(summaries[t]) - removed
        # neighbouring guesses often keep the same set; the solver is deterministic
        if not T or T in seen:
            continue
        seen.add(T)
        sol = solver(f, instance, candidates=T)
        if sol.value > best.value:
            best = sol
    return best


def summary_elements(summaries: Mapping[float, object]) -> frozenset:
    out = set()
    for s in summaries.values():
        out |= _elements(s)
    return frozenset(out)


def total_stored(summaries: Mapping[float, object]) -> int:
    return sum(len(_elements(s)) for s in summaries.values())


def distinct_summaries(summaries: Mapping[float, object]) -> dict[float, frozenset]:
    """Element sets of ``summaries``, keeping only the smallest guess of each distinct set.

    ``robust_query`` gives the same answer on this reduced map, and it is
    much cheaper to query repeatedly.
    """
    out, seen = {}, set()
    for t in sorted(summaries):
        T = _elements(summaries[t])
        if T not in seen:
            seen.add(T)
            out[t] = T
    return out
