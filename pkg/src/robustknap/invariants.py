"""Structural checks on grids, instances and objectives.

Every checker returns a list of human-readable violations; an empty list
means the object passed.
"""

from __future__ import annotations

import numpy as np

from .core import KnapsackInstance, Objective, is_feasible, normalize
from .grid import BucketGrid

TOL = 1e-9


def check_grid(grid: BucketGrid, instance: KnapsackInstance, f: Objective = None) -> list[str]:
    out = []
    seen = {}
    for part in grid.partitions:
        i = part.index
        if len(part.members) > part.n_buckets:
            out.append(f"partition {i}: {len(part.members)} used buckets > n_i={part.n_buckets}")
        if part.n_buckets < part.initial_buckets:
            out.append(f"partition {i}: bucket count shrank")
        cnt = part.counters
        if (cnt < 0).any():
            out.append(f"partition {i}: negative counter {cnt}")
        if part.variant in ("num", "mult") and part.size < part.element_cap and (cnt >= part.unit).any():
            out.append(f"partition {i}: counter {cnt} not drained below {part.unit}")
        for j, members in enumerate(part.members):
            load = instance.total_cost(members)
            if not np.allclose(load, part.loads[j], rtol=0, atol=1e-7):
                out.append(f"bucket ({i},{j}): cached load {part.loads[j]} != {load}")
            over = (load >= part.capacity) if part.strict else (load > part.capacity + TOL)
            if over.any():
                out.append(f"bucket ({i},{j}): load {load} breaks capacity {part.capacity}")
            for e in members:
                if instance.max_cost(e) > part.cost_cap + TOL:
                    out.append(f"bucket ({i},{j}): element {e} cost {instance.max_cost(e)} > cap {part.cost_cap}")
                if e in seen:
                    out.append(f"element {e} placed twice: {seen[e]} and {(i, j)}")
                seen[e] = (i, j)
            for e, density in part.logs[j]:
                if density < part.threshold * (1 - TOL):
                    out.append(f"bucket ({i},{j}): element {e} logged density {density} < {part.threshold}")
            if [e for e, _ in part.logs[j]] != members:
                out.append(f"bucket ({i},{j}): insertion log out of sync")
            if f is not None:
                v = f.evaluate(members)
                if abs(v - part.block.values[j]) > 1e-7 * max(1.0, abs(v)):
                    out.append(f"bucket ({i},{j}): cached value {part.block.values[j]} != {v}")
    if seen != grid.placed:
        out.append("placement index disagrees with bucket contents")
    return out


def check_normalization(instance: KnapsackInstance, subsets) -> list[str]:
    out = []
    norm = normalize(instance)
    if norm.costs.size and norm.costs.min() < 1 - TOL:
        out.append(f"normalized minimum cost {norm.costs.min()} < 1")
    if not np.allclose(norm.budget, norm.budget[0]):
        out.append("normalized budgets differ across knapsacks")
    for S in subsets:
        a, b = is_feasible(instance, S), is_feasible(norm, S)
        if a != b:
            out.append(f"feasibility of {sorted(S)} changed under normalization ({a} -> {b})")
    return out


def check_objective(f: Objective, rng: np.random.Generator, trials: int = 20) -> list[str]:
    """Random monotonicity and diminishing-returns probes on nested sets."""
    out = []
    n = f.n
    if n == 0:
        return out
    for _ in range(trials):
        T = set(np.flatnonzero(rng.random(n) < 0.5).tolist())
        S = {e for e in T if rng.random() < 0.5}
        e = int(rng.integers(n))
        fS, fT = f.evaluate(S), f.evaluate(T)
        gS = f.evaluate(S | {e}) - fS
        gT = f.evaluate(T | {e}) - fT
        if fT < fS - TOL:
            out.append(f"not monotone: f(T)={fT} < f(S)={fS}")
        if gT < -TOL:
            out.append(f"negative gain {gT} of {e}")
        if gT > gS + 1e-9 * max(1.0, abs(gS)):
            out.append(f"not submodular at {e}: gain {gT} on superset > {gS} on subset")
    return out
