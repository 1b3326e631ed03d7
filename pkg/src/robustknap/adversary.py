"""Shared recursive-union removal schedule and per-round scoring."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, TextIO

import numpy as np

from .core import KnapsackInstance, Objective, Solution
from .ladder import robust_query, summary_elements
from .offline import multidimensional_ladder, offline_greedy, opt_upper_bound

SCORE_COLUMNS = ("algorithm", "round", "removed_cumulative", "objective", "upper_bound", "ratio",
                 "summary_size")


@dataclass
class RemovalSchedule:
    rounds: list = field(default_factory=list)

    def __len__(self):
        return len(self.rounds)

    def prefix(self, k: int) -> frozenset:
        """Union of the first ``k`` rounds."""
        out = set()
        for R in self.rounds[:k]:
            out |= R
        return frozenset(out)

    def prefixes(self):
        acc = set()
        yield frozenset()
        for R in self.rounds:
            acc |= R
            yield frozenset(acc)

    def truncated(self, m: int) -> "RemovalSchedule":
        """Keep the first ``m`` removed elements, in round order (ascending id inside a round)."""
        left = m
        out = []
        for R in self.rounds:
            if left <= 0:
                break
            take = sorted(R)[:left]
            out.append(frozenset(take))
            left -= len(take)
        return RemovalSchedule(out)


def _query(summary, removed, f, instance, solver):
    if isinstance(summary, Mapping):
        return robust_query(summary, removed, f, instance, solver)
    T = frozenset(summary) - frozenset(removed)
    return solver(f, instance, candidates=T)


def build_removal_schedule(summaries: Mapping[str, object], f: Objective, instance: KnapsackInstance,
                           solver: Callable = offline_greedy, max_rounds: int = 30) -> RemovalSchedule:
    """``R_{k+1}`` is the union over algorithms of the solver's pick on what is left.

    Each value of ``summaries`` is either a guess map (queried like the
    robust algorithms) or a plain element set. Solver calls use the original
    budget. Stops at the first empty round.
    """
    if not summaries:
        raise ValueError("need at least one algorithm summary")
    removed: set = set()
    rounds = []
    while len(rounds) < max_rounds:
        R = set()
        for name in sorted(summaries):
            R |= _query(summaries[name], removed, f, instance, solver).elements
        R -= removed
        if not R:
            break
        rounds.append(frozenset(R))
        removed |= R
    return RemovalSchedule(rounds)


@dataclass
class RoundScore:
    algorithm: str
    round: int
    removed_cumulative: int
    objective: float
    upper_bound: float
    ratio: float
    summary_size: int

    def row(self) -> list:
        return [self.algorithm, self.round, self.removed_cumulative, repr(self.objective),
                repr(self.upper_bound), repr(self.ratio), self.summary_size]


def reference_upper_bound(f: Objective, instance: KnapsackInstance, removed: Iterable[int] = (),
                          eps: float = 0.1) -> float:
    """Bound on f(OPT) over the ground set minus ``removed``.

    One knapsack: the greedy certificate. Several: ``(1 + 2d)`` times the
    best threshold-baseline set over the guess ladder, raised to at least
    the greedy value (a feasible set never beats OPT).
    """
    removed = frozenset(removed)
    cand = [e for e in range(instance.n) if e not in removed]
    greedy = offline_greedy(f, instance, candidates=cand)
    if instance.d == 1:
        return opt_upper_bound(greedy, instance, "single")
    sets = multidimensional_ladder(cand, f, instance, eps)
    best = max((f.evaluate(S) for S in sets.values()), default=f.empty_value)
    bound = opt_upper_bound(Solution(frozenset(), best, np.zeros(instance.d)), instance, "multi")
    return max(bound, greedy.value)


def score_round(name: str, summary, removed_prefix: Iterable[int], f: Objective,
                instance: KnapsackInstance, bound: float, round_index: int = 0,
                solver: Callable = offline_greedy) -> RoundScore:
    removed = frozenset(removed_prefix)
    sol: Solution = _query(summary, removed, f, instance, solver)
    if bound == 0:
        if sol.value > 0:
            raise ValueError(f"{name}: upper bound 0 but objective {sol.value}")
        ratio = 0.0
    else:
        ratio = sol.value / bound
    size = len(summary_elements(summary)) if isinstance(summary, Mapping) else len(frozenset(summary))
    return RoundScore(name, round_index, len(removed), sol.value, bound, ratio, size)


def score_schedule(summaries: Mapping[str, object], schedule: RemovalSchedule, f: Objective,
                   instance: KnapsackInstance, solver: Callable = offline_greedy,
                   bound: Optional[float] = None, per_round_bound: bool = False,
                   eps: float = 0.1) -> list[RoundScore]:
    """Score every algorithm on every removal prefix (round 0 = nothing removed).

    By default one bound, computed on the full ground set, serves all rounds.
    """
    if bound is None and not per_round_bound:
        bound = reference_upper_bound(f, instance, eps=eps)
    out = []
    for k, prefix in enumerate(schedule.prefixes()):
        b = reference_upper_bound(f, instance, prefix, eps) if per_round_bound else bound
        for name in sorted(summaries):
            out.append(score_round(name, summaries[name], prefix, f, instance, b, k, solver))
    return out


def write_scores(scores: Iterable[RoundScore], fh: TextIO, header_comment: Optional[str] = None):
    if header_comment:
        fh.write(f"# {header_comment}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SCORE_COLUMNS)
    for s in scores:
        w.writerow(s.row())
