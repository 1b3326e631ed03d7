"""Offline solvers, the exact test oracle and the robustified baselines."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from .core import KnapsackInstance, Objective, Solution
from .ladder import GuessLadder, summary_elements


def offline_greedy(f: Objective, instance: KnapsackInstance, candidates: Optional[Iterable[int]] = None,
                   budget: Optional[float] = None) -> Solution:
    """Density greedy plus best singleton, run lazily.

    Repeatedly takes the element of largest gain per (max) cost that still
    fits; stops when no fitting element has positive gain. Returns the better
    of the greedy set and the best single element. For one knapsack the
    result carries ``certificate``, an upper bound on OPT of the candidate
    set: the minimum of ``f(G)/(1 - exp(-c(G)/K))`` over greedy prefixes
    built before the first time the overall densest element did not fit.
    """
    K = instance.K if budget is None else float(budget)
    cand = sorted(set(range(instance.n)) if candidates is None else set(int(e) for e in candidates))
    C = instance.costs
    cand = [e for e in cand if (C[:, e] <= K).all()]
    empty = f.empty_value
    d = instance.d
    if not cand:
        return Solution(frozenset(), empty, np.zeros(d), certificate=empty if d == 1 else None)

    block = f.states()
    block.append()
    cmax = C[:, cand].max(axis=0)
    heap = []
    best_single, best_single_value = None, -math.inf
    for e, c in zip(cand, cmax):
        g = f.singleton(e)
        if empty + g > best_single_value:
            best_single, best_single_value = e, empty + g
        if g > 0:
            heap.append((-g / c, e, c))
    heapq.heapify(heap)

    chosen = []
    tot = np.zeros(d)
    value = empty
    blocked = False
    bound = math.inf
    while heap:
        _, e, c = heapq.heappop(heap)
        g = float(block.gains(e, 1)[0])
        key = (-g / c, e, c)
        # stale keys are upper bounds, so beating the heap top means true argmax
        if heap and key > heap[0]:
            if g > 0:
                heapq.heappush(heap, key)
            continue
        if g <= 0:
            break
        if (tot + C[:, e] <= K).all():
            block.add(0, e)
            chosen.append(e)
            tot += C[:, e]
            value = float(block.values[0])
            if not blocked:
                bound = min(bound, value / -math.expm1(-tot.max() / K))
        else:
            blocked = True
    if not blocked:
        # nothing left with positive gain, so OPT cannot beat G
        bound = min(bound, value)
    cert = bound if d == 1 else None

    if best_single is not None and best_single_value > value:
        return Solution(frozenset([best_single]), best_single_value, C[:, best_single].copy(), cert)
    return Solution(frozenset(chosen), value, tot, cert)


def brute_force_opt(f: Objective, instance: KnapsackInstance, candidates: Optional[Iterable[int]] = None,
                    max_n: int = 20) -> Solution:
    """Exact optimum by enumerating feasible subsets (test oracle).

    Subsets are visited in lexicographic order of their sorted id tuples and
    only a strictly better value replaces the incumbent, so ties resolve to
    the lexicographically smallest subset.
    """
    cand = sorted(range(instance.n) if candidates is None else set(int(e) for e in candidates))
    if len(cand) > max_n:
        raise ValueError(f"brute force refused for {len(cand)} > {max_n} elements")
    K = instance.budget
    C = instance.costs
    best = [f.evaluate(()), ()]

    def visit(start, chosen, tot):
        for t in range(start, len(cand)):
            e = cand[t]
            nt = tot + C[:, e]
            if (nt > K).any():
                continue
            chosen.append(e)
            v = f.evaluate(chosen)
            if v > best[0]:
                best[0], best[1] = v, tuple(chosen)
            visit(t + 1, chosen, nt)
            chosen.pop()

    visit(0, [], np.zeros(instance.d))
    ids = best[1]
    return Solution(frozenset(ids), best[0], instance.total_cost(ids))


def opt_upper_bound(solution: Solution, instance: KnapsackInstance, mode: str) -> float:
    """Upper bound on f(OPT) from a greedy run (single) or a threshold run (multi)."""
    if mode == "single":
        if solution.certificate is not None:
            return solution.certificate
        if solution.value == 0:
            return 0.0
        c = float(solution.cost_totals[0])
        if c <= 0:
            raise ValueError("cannot bound OPT from a zero-cost solution with positive value")
        return solution.value / -math.expm1(-c / instance.K)
    if mode == "multi":
        return solution.value * (1 + 2 * instance.d)
    raise ValueError(f"unknown bound mode {mode!r}")


# -- baselines ----------------------------------------------------------------

class ThresholdSet:
    """One growing set with an inflated budget; keeps elements that clear a density threshold.

    Density is gain over max cost, which for the per-dimension rule
    ``gain / c_a >= theta for every a`` is the same test.
    """

    def __init__(self, f: Objective, K: float, d: int, threshold: float, gamma: float = 1.0,
                 tau_star: float = float("nan")):
        self.f = f
        self.capacity = gamma * K
        self.threshold = threshold
        self.tau_star = tau_star
        self.block = f.states()
        self.block.append()
        self.members: list[int] = []
        self.load = np.zeros(d)

    def insert(self, e: int, cost, g0: Optional[float] = None):
        cost = np.asarray(cost, dtype=np.float64).reshape(-1)
        if (self.load + cost > self.capacity).any():
            return None
        if self.members:
            g = float(self.block.gains(e, 1)[0])
        else:
            g = self.f.singleton(e) if g0 is None else g0
        if g / cost.max() < self.threshold:
            return None
        self.block.add(0, e)
        self.members.append(e)
        self.load += cost
        return True

    def summary(self) -> frozenset:
        return frozenset(self.members)

    def run(self, stream, instance):
        for e in stream:
            self.insert(int(e), instance.cost(e))
        return self


def marginal_ratio_stream(stream, f: Objective, instance: KnapsackInstance, theta: float,
                          gamma: float = 1.0) -> frozenset:
    return ThresholdSet(f, instance.K, instance.d, theta, gamma).run(stream, instance).summary()


def multidimensional_stream(stream, f: Objective, instance: KnapsackInstance, tau_guess: float,
                            gamma: float = 1.0) -> frozenset:
    d, K = instance.d, instance.K
    return ThresholdSet(f, K, d, tau_guess / ((1 + 2 * d) * K), gamma).run(stream, instance).summary()


def marginal_ratio_ladder(stream, f, instance, eps, gamma=1.0, removals=0, theta=None, anchor="stream",
                          bounds=None) -> dict:
    """``theta(tau_star, gamma, K)`` defaults to ``tau_star / (2 gamma K)``."""
    K, d = instance.K, instance.d
    theta = theta or (lambda t, g, k: t / (2 * g * k))

    def factory(t):
        return ThresholdSet(f, K, d, theta(t, gamma, K), gamma, t)

    return GuessLadder(f, instance, factory, eps, removals, anchor, bounds).run(stream).summaries()


def multidimensional_ladder(stream, f, instance, eps, gamma=1.0, removals=0, anchor="stream",
                            bounds=None) -> dict:
    K, d = instance.K, instance.d

    def factory(t):
        return ThresholdSet(f, K, d, t / ((1 + 2 * d) * K), gamma, t)

    return GuessLadder(f, instance, factory, eps, removals, anchor, bounds).run(stream).summaries()


def robustified_greedy(f: Objective, instance: KnapsackInstance, gamma: float) -> dict:
    if instance.d != 1:
        raise ValueError("the greedy baseline handles a single knapsack only")
    sol = offline_greedy(f, instance, budget=gamma * instance.K)
    return {0.0: sol.elements}


def calibrate_inflation(build: Callable[[float], dict], target: int, iters: int = 8,
                        hi: float = 1024.0, tol: float = 0.2):
    """Bisect the capacity factor gamma (log scale) so the summary size lands near ``target``.

    Returns ``(gamma, summaries)`` for the closest size seen; stops early once
    within ``tol`` relative error.
    """
    def size(s):
        return len(summary_elements(s))

    lo_g, hi_g = 1.0, hi
    best = None
    for g in (lo_g, hi_g):
        s = build(g)
        cand = (abs(size(s) - target), g, s)
        if best is None or cand[0] < best[0]:
            best = cand
    if best[0] <= tol * target:
        return best[1], best[2]
    for _ in range(iters):
        mid = math.sqrt(lo_g * hi_g)
        s = build(mid)
        n = size(s)
        if abs(n - target) < best[0]:
            best = (abs(n - target), mid, s)
        if best[0] <= tol * target:
            break
        if n < target:
            lo_g = mid
        else:
            hi_g = mid
    return best[1], best[2]
