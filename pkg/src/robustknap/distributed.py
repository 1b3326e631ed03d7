"""In-process simulation of the sample-then-filter two-round protocol.

Round 1: every machine rebuilds the same grid ``B0`` from the shared sample
``F`` and forwards those of its own elements that ``B0`` would still take.
Round 2: a central machine rebuilds ``B0`` and continues it over the
forwarded elements, in machine order then arrival order. The result equals
a sequential run over the stream ``F || R || rest``, which ``check_equivalence``
verifies cell by cell.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, TextIO

import numpy as np

from .core import KnapsackInstance, Objective, ceil_log2
from .grid import BucketGrid, GridParams, RobustSummary, make_params
from .ladder import ceil_index, floor_index

TRANSCRIPT_COLUMNS = ("machine", "phase", "elements_held", "elements_sent")


def default_L(K: float, m: int, eps: float, C: float = 200.0) -> int:
    """Element budget for one summary: ``C (K log^3 K + m log^4 K) / eps``."""
    lg = max(1, ceil_log2(K))
    return int(math.ceil(C * (K * lg ** 3 + m * lg ** 4) / eps))


@dataclass(frozen=True)
class ClusterConfig:
    T: int
    L: int
    seed: int = 0
    p: Optional[float] = None  # None: min(1, 4 sqrt(L/n))
    # "now": forward what B0 accepts as it stands; "later": also forward what
    # a partition that may still open buckets could take
    filter: str = "now"

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("need at least one machine")
        if self.L < 1:
            raise ValueError("L must be positive")
        if self.p is not None and not 0 < self.p <= 1:
            raise ValueError("sample probability must lie in (0, 1]")
        if self.filter not in ("now", "later"):
            raise ValueError(f"unknown filter {self.filter!r}")

    def probability(self, n: int) -> float:
        if self.p is not None:
            return self.p
        if n == 0:
            return 1.0
        return min(1.0, 4 * math.sqrt(self.L / n))


@dataclass
class RoundTranscript:
    F: list
    parts: list          # V_i, arrival order
    sent: list           # R_i
    p: float
    tau_star: float = float("nan")
    b0_size: int = 0
    guard_hit: bool = False
    held: list = field(default_factory=list)  # per machine working set in round 1

    @property
    def R(self) -> list:
        return [e for R_i in self.sent for e in R_i]

    def rows(self) -> list[tuple]:
        out = []
        for i, V_i in enumerate(self.parts):
            out.append((i, "round1", self.held[i], len(self.sent[i])))
        out.append(("central", "round2", len(self.F) + len(self.R), 0))
        return out


def partition_and_sample(V: Sequence[int], config: ClusterConfig):
    """Bernoulli(p) sample ``F`` and a uniform random split of ``V`` into ``T`` parts."""
    V = list(V)
    rng = np.random.default_rng(config.seed)
    p = config.probability(len(V))
    take = rng.random(len(V)) < p
    owner = rng.integers(config.T, size=len(V))
    F = [e for e, t in zip(V, take) if t]
    parts = [[] for _ in range(config.T)]
    for e, i in zip(V, owner):
        parts[int(i)].append(e)
    return F, parts


def build_b0(F, params: GridParams, f: Objective, instance: KnapsackInstance) -> BucketGrid:
    return BucketGrid(params, f).run(F, instance)


def round1_machine(F, V_i, params: GridParams, f: Objective, instance: KnapsackInstance,
                   L: int, filter: str = "now", b0: Optional[BucketGrid] = None) -> list:
    """Elements of ``V_i`` outside ``F`` that the frozen ``B0`` would accept."""
    if b0 is None:
        b0 = build_b0(F, params, f, instance)
    if len(b0) >= L:
        return []
    sampled = set(F)
    test = b0.would_accept if filter == "now" else b0.might_accept_later
    return [e for e in V_i if e not in sampled and test(e, instance.cost(e))]


def round2_central(F, R, params: GridParams, f: Objective, instance: KnapsackInstance,
                   b0: Optional[BucketGrid] = None) -> BucketGrid:
    grid = build_b0(F, params, f, instance) if b0 is None else b0.copy()
    return grid.run(R, instance)


def run_two_round(V, params: GridParams, f: Objective, instance: KnapsackInstance,
                  config: ClusterConfig):
    """Run both rounds for one threshold guess; returns ``(grid, transcript)``.

    Machines share one ``B0`` build here since every machine would compute the
    identical structure.
    """
    F, parts = partition_and_sample(V, config)
    b0 = build_b0(F, params, f, instance)
    sent = [round1_machine(F, V_i, params, f, instance, config.L, config.filter, b0)
            for V_i in parts]
    R = [e for R_i in sent for e in R_i]
    grid = round2_central(F, R, params, f, instance, b0)
    tr = RoundTranscript(F, parts, sent, config.probability(len(list(V))), params.tau_star,
                         len(b0), len(b0) >= config.L,
                         [len(F) + len(V_i) + len(R_i) for V_i, R_i in zip(parts, sent)])
    return grid, tr


def reference_stream(V, transcript: RoundTranscript) -> list:
    """``F || R || rest`` with rest in the original order."""
    head = transcript.F + transcript.R
    seen = set(head)
    return head + [e for e in V if e not in seen]


def check_equivalence(V, grid: BucketGrid, transcript: RoundTranscript, f: Objective,
                      instance: KnapsackInstance) -> bool:
    seq = BucketGrid(grid.params, f).run(reference_stream(V, transcript), instance)
    return seq.signature() == grid.signature()


def ladder_bounds(f: Objective, instance: KnapsackInstance, V, m: int) -> tuple[float, float]:
    """Guess range from global singleton values: ``(m+1)``-th largest to ``K`` times the largest."""
    vals = sorted((f.singleton(e) for e in V if (instance.cost(e) <= instance.budget).all()),
                  reverse=True)
    vals = [v for v in vals if v > 0]
    if not vals:
        return 0.0, 0.0
    return vals[min(m, len(vals) - 1)], instance.K * vals[0]


def run_two_round_ladder(V, f: Objective, instance: KnapsackInstance, m: int, eps: float,
                         config: ClusterConfig, check: bool = False):
    """One protocol instance per threshold guess, all sharing the same sample and split.

    Returns ``({tau_star: summary}, [transcripts], all_equivalent)``; the last
    item is None unless ``check`` is set.
    """
    V = list(V)
    lo, hi = ladder_bounds(f, instance, V, m)
    summaries, transcripts = {}, []
    ok = True if check else None
    if hi <= 0:
        return summaries, transcripts, ok
    base = 1 + eps
    for j in range(floor_index(lo, base), ceil_index(hi, base) + 1):
        params = make_params("mult", instance.K, instance.d, m, base ** j)
        grid, tr = run_two_round(V, params, f, instance, config)
        summaries[params.tau_star] = grid.summary()
        transcripts.append(tr)
        if check and not check_equivalence(V, grid, tr, f, instance):
            ok = False
    return summaries, transcripts, ok


def write_transcripts(transcripts: Sequence[RoundTranscript], fh: TextIO,
                      header_comment: Optional[str] = None):
    """Per machine: working set and the number of distinct elements sent over all guesses."""
    if header_comment:
        fh.write(f"# {header_comment}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TRANSCRIPT_COLUMNS)
    if not transcripts:
        return
    T = len(transcripts[0].parts)
    for i in range(T):
        sent = set()
        held = 0
        for tr in transcripts:
            sent.update(tr.sent[i])
            held = max(held, tr.held[i])
        w.writerow([i, "round1", held, len(sent)])
    R_all = set()
    for tr in transcripts:
        R_all.update(tr.R)
    w.writerow(["central", "round2", len(transcripts[0].F) + len(R_all), 0])
