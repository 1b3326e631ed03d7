"""Dataset assembly and the build / evaluate / distributed pipelines behind the CLI."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .adversary import build_removal_schedule, score_schedule, write_scores
from .config import ExperimentConfig
from .core import KnapsackInstance, Objective, normalize
from .distributed import ClusterConfig, default_L, run_two_round_ladder, write_transcripts
from .grid import GridParams, RobustSummary, dump_summaries, load_summaries
from .ingest import load_movielens, load_snap_edges, subsample
from .ladder import guess_ladder_run, prune_all, summary_elements
from .objectives import (CoverageObjective, DominatingSetObjective, ONE_KNAPSACK_GENRES,
                         TWO_KNAPSACK_GENRES, genre_costs, movie_coverage_objective, pick_user,
                         uniform_random_costs)
from .offline import (brute_force_opt, calibrate_inflation, marginal_ratio_ladder,
                      multidimensional_ladder, offline_greedy, robustified_greedy)

log = logging.getLogger(__name__)

SCHEMA = f"robustknap {__version__} schema=1"
GRID_ALGORITHMS = {"algmult": "mult", "algnum": "num", "algsize": "size"}


class DatasetError(RuntimeError):
    pass


@dataclass
class Dataset:
    f: Objective
    instance: KnapsackInstance
    stream: list
    meta: dict = field(default_factory=dict)


def _seeds(seed: int, k: int) -> list[int]:
    ss = np.random.SeedSequence(seed)
    return [int(s.generate_state(1)[0]) for s in ss.spawn(k)]


def random_coverage(n: int, universe: int, max_items: int, seed: int) -> CoverageObjective:
    rng = np.random.default_rng(seed)
    items = [rng.choice(universe, size=int(rng.integers(1, max_items + 1)), replace=False)
             for _ in range(n)]
    return CoverageObjective(items, universe=universe)


def planted_coverage(n: int, core: int, universe: int, seed: int,
                     filler_weight: float = 1e-4) -> CoverageObjective:
    """Elements ``0..core-1`` are informative, the rest low-value filler.

    Informative elements cover 3 to 12 random items of weight 1 and depend
    only on ``seed``, so the informative content is fixed while ``n`` grows.
    Filler element ``e`` covers a private item of weight ``filler_weight``.
    """
    if core > n:
        raise ValueError("core larger than the ground set")
    rng = np.random.default_rng(seed)
    items = [rng.choice(universe, size=int(rng.integers(3, 13)), replace=False) for _ in range(core)]
    items += [[universe + k] for k in range(n - core)]
    weights = np.concatenate([np.ones(universe), np.full(n - core, filler_weight)])
    return CoverageObjective(items, weights, universe=universe + n - core)


def _require(path: Optional[Path], key: str) -> Path:
    if path is None:
        raise DatasetError(f"{key} is not set")
    if not path.is_file():
        raise DatasetError(f"dataset file not found: {path}")
    return path


def load_dataset(cfg: ExperimentConfig) -> Dataset:
    s_data, s_cost, s_stream, s_user = _seeds(cfg.seed, 4)
    frac = cfg.get("dataset.subsample.fraction")
    cap = cfg.get("dataset.subsample.cap")
    frac = float(frac) if frac else None
    cap = int(cap) if cap else None
    meta = {"kind": cfg.kind}
    if cfg.kind == "graph":
        g = load_snap_edges(_require(cfg.path("dataset.path"), "dataset.path"))
        g = subsample(g, frac, cap, s_data)
        f = DominatingSetObjective(g)
        n = g.n
        meta.update(vertices=g.n, edges=g.edge_count)
    elif cfg.kind == "movielens":
        model = load_movielens(_require(cfg.path("dataset.ratings"), "dataset.ratings"),
                               _require(cfg.path("dataset.movies"), "dataset.movies"))
        model = subsample(model, frac, cap, s_data)
        u = pick_user(model, np.random.default_rng(s_user), int(cfg.get("objective.min_ratings")))
        X = model.rated_by(u)
        f = movie_coverage_objective(model, X)
        n = model.n
        meta.update(movies=n, user=int(model.user_ids[u]), targets=len(X))
    else:
        n = int(cfg.get("dataset.synthetic.n"))
        f = random_coverage(n, int(cfg.get("dataset.synthetic.universe")),
                            int(cfg.get("dataset.synthetic.max_items")), s_data)
        meta.update(elements=n)

    if cfg.costs == "genre":
        if cfg.kind != "movielens":
            raise DatasetError("genre costs need a MovieLens dataset")
        specs = ONE_KNAPSACK_GENRES if cfg.d == 1 else TWO_KNAPSACK_GENRES
        costs = genre_costs(model, specs[:cfg.d])
    else:
        costs = uniform_random_costs(n, cfg.d, s_cost)
    inst = normalize(KnapsackInstance(costs, np.full(cfg.d, cfg.K)))
    order = np.random.default_rng(s_stream).permutation(n)
    ok = set(inst.admissible().tolist())
    stream = [int(e) for e in order if e in ok]
    return Dataset(f, inst, stream, meta)


# -- build ------------------------------------------------------------------

def _wrap_sets(sets: dict, name: str, inst: KnapsackInstance, gamma: float) -> dict:
    out = {}
    for t, S in sets.items():
        params = GridParams(name, inst.K, inst.d, gamma, float(t), float("nan"))
        out[t] = RobustSummary(params, [(e, 0, 0) for e in sorted(S)])
    return out


def build_algorithms(cfg: ExperimentConfig, data: Dataset) -> tuple[dict, dict]:
    """Run every configured algorithm. Returns ``(summaries, gammas)``."""
    f, inst, stream = data.f, data.instance, data.stream
    summaries, gammas = {}, {}
    for name in cfg.algorithms:
        if name in GRID_ALGORITHMS:
            variant = GRID_ALGORITHMS[name]
            removals = cfg.M if variant == "size" else cfg.m
            s = guess_ladder_run(stream, f, inst, variant, cfg.eps, removals)
            if cfg.prune:
                s = prune_all(s, f, inst)
            summaries[name] = s
    target = next((len(summary_elements(summaries[a])) for a in ("algmult", "algnum", "algsize")
                   if a in summaries), None)

    def baseline(name, gamma):
        if name == "marginal-ratio":
            sets = marginal_ratio_ladder(stream, f, inst, cfg.eps, gamma, cfg.m)
        elif name == "multidimensional":
            sets = multidimensional_ladder(stream, f, inst, cfg.eps, gamma, cfg.m)
        else:
            sets = robustified_greedy(f, inst, gamma)
        return _wrap_sets(sets, name, inst, gamma)

    for name in cfg.algorithms:
        if name in GRID_ALGORITHMS:
            continue
        g = cfg.gamma
        if g == "auto" and target:
            g, s = calibrate_inflation(lambda x: baseline(name, x), target)
        else:
            g = 1.0 if g == "auto" else g
            s = baseline(name, g)
        summaries[name] = s
        gammas[name] = g
    return {a: summaries[a] for a in cfg.algorithms}, gammas


def write_summary_files(summaries: dict, out: Path, inst: KnapsackInstance):
    sdir = out / "summaries"
    sdir.mkdir(parents=True, exist_ok=True)
    for name, s in summaries.items():
        with open(sdir / f"{name}.txt", "w") as fh:
            fh.write(f"# {SCHEMA}\n")
            dump_summaries(s.values(), fh, inst)


def read_summary_files(out: Path, names) -> dict:
    sdir = out / "summaries"
    res = {}
    for name in names:
        path = sdir / f"{name}.txt"
        if not path.is_file():
            raise DatasetError(f"missing summary file {path}; run build first")
        with open(path) as fh:
            res[name] = {s.tau_star: s for s in load_summaries(fh)}
    return res


def write_csv(path: Path, header, rows):
    buf = io.StringIO()
    buf.write(f"# {SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue())


def cmd_build(cfg: ExperimentConfig, out: Path) -> dict:
    data = load_dataset(cfg)
    summaries, gammas = build_algorithms(cfg, data)
    out.mkdir(parents=True, exist_ok=True)
    write_summary_files(summaries, out, data.instance)
    rows = [(name, len(summary_elements(s))) for name, s in summaries.items()]
    write_csv(out / "build_stats.csv", ("algorithm", "summary_size"), rows)
    return {"summaries": summaries, "gammas": gammas, "data": data}


# -- evaluate ---------------------------------------------------------------

class SummaryMismatch(RuntimeError):
    pass


def _check_compatible(summaries: dict, inst: KnapsackInstance):
    for name, s in summaries.items():
        for rs in s.values():
            p = rs.params
            if p is None:
                continue
            if p.d != inst.d or abs(p.K - inst.K) > 1e-9 * inst.K:
                raise SummaryMismatch(f"{name}: summary built for K={p.K}, d={p.d}; "
                                      f"config gives K={inst.K}, d={inst.d}")
            for e, c in rs.costs.items():
                if not 0 <= e < inst.n or not np.allclose(c, inst.cost(e)):
                    raise SummaryMismatch(f"{name}: element {e} does not match the configured instance")


def cmd_evaluate(cfg: ExperimentConfig, out: Path, summaries: Optional[dict] = None) -> list:
    data = load_dataset(cfg)
    f, inst = data.f, data.instance
    if summaries is None:
        summaries = read_summary_files(out, cfg.algorithms)
    _check_compatible(summaries, inst)
    path = out / "scores.csv"
    out.mkdir(parents=True, exist_ok=True)
    if cfg.max_rounds == 0:
        with open(path, "w") as fh:
            write_scores([], fh, SCHEMA)
        return []
    if cfg.get("evaluate.solver") == "brute":
        solver = brute_force_opt
        bound = brute_force_opt(f, inst).value
    else:
        solver = offline_greedy
        bound = None
    schedule = build_removal_schedule(summaries, f, inst, solver, cfg.max_rounds - 1)
    if cfg.removal_cap is not None:
        schedule = schedule.truncated(cfg.removal_cap)
    scores = score_schedule(summaries, schedule, f, inst, solver, bound,
                            cfg.get("evaluate.bound") == "per-round", cfg.eps)
    with open(path, "w") as fh:
        write_scores(scores, fh, SCHEMA)
    return scores


# -- distributed ------------------------------------------------------------

def cmd_distributed(cfg: ExperimentConfig, out: Path):
    data = load_dataset(cfg)
    f, inst = data.f, data.instance
    L = cfg.get("cluster.L")
    L = int(L) if L else default_L(inst.K, cfg.m, cfg.eps)
    p = cfg.get("cluster.p")
    cluster = ClusterConfig(int(cfg.get("cluster.T")), L, cfg.seed, float(p) if p else None)
    check = cfg.get("cluster.check").lower() in ("1", "true", "yes", "on")
    summaries, transcripts, ok = run_two_round_ladder(data.stream, f, inst, cfg.m, cfg.eps,
                                                      cluster, check)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "transcript.csv", "w") as fh:
        write_transcripts(transcripts, fh, SCHEMA)
    with open(out / "summaries_distributed.txt", "w") as fh:
        fh.write(f"# {SCHEMA}\n")
        dump_summaries(summaries.values(), fh, inst)
    status = "skipped" if ok is None else ("pass" if ok else "fail")
    line = f"equivalence: {status} ({len(transcripts)} guesses)"
    (out / "equivalence.txt").write_text(line + "\n")
    return ok, line, transcripts
