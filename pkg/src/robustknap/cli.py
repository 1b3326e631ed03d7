"""Command-line driver: ``robustknap {build,evaluate,distributed,selfcheck}``.

Exit codes: 0 success, 1 diagnostic failure (bad config, missing files),
2 invariant violation.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig

EXIT_OK, EXIT_DIAGNOSTIC, EXIT_INVARIANT = 0, 1, 2

log = logging.getLogger("robustknap")


def selfcheck(seed: int = 0, streams: int = 200) -> list[str]:
    """Invariant suite on generated fixtures; returns the violations found."""
    from .core import KnapsackInstance
    from .distributed import ClusterConfig, run_two_round_ladder
    from .experiment import random_coverage
    from .grid import BucketGrid, make_params
    from .invariants import check_grid, check_normalization, check_objective
    from .objectives import DominatingSetObjective, FacilityLocationObjective, Graph
    from .offline import brute_force_opt, offline_greedy

    rng = np.random.default_rng(seed)
    bad = []
    for t in range(streams):
        variant = ("num", "mult", "size")[t % 3]
        d = int(rng.integers(1, 3)) if variant == "mult" else 1
        n = int(rng.integers(5, 40))
        K = float(rng.choice([2, 4, 8, 10, 16]))
        f = random_coverage(n, 30, 6, int(rng.integers(2**31)))
        inst = KnapsackInstance.normalized_from(rng.uniform(1, min(K, 4), size=(d, n)), K)
        m = int(rng.integers(0, 4))
        grid = BucketGrid(make_params(variant, K, d, m, float(rng.uniform(1, 60))), f)
        grid.run(rng.permutation(n), inst)
        bad += [f"{variant} stream {t}: {v}" for v in check_grid(grid, inst, f)]

        raw = KnapsackInstance(rng.uniform(0.5, 5, size=(d, n)), rng.uniform(3, 20, size=d))
        subsets = [np.flatnonzero(rng.random(n) < 0.3) for _ in range(5)]
        bad += [f"normalize {t}: {v}" for v in check_normalization(raw, subsets)]

    g = Graph.from_edges(12, rng.integers(0, 12, size=(30, 2)))
    sim = rng.normal(size=(8, 15))
    for f in (random_coverage(15, 20, 5, seed), DominatingSetObjective(g), FacilityLocationObjective(sim)):
        bad += [f"{type(f).__name__}: {v}" for v in check_objective(f, rng)]

    for t in range(20):
        n = int(rng.integers(1, 9))
        f = random_coverage(n, 12, 4, int(rng.integers(2**31)))
        inst = KnapsackInstance.normalized_from(rng.uniform(1, 4, size=(1, n)), 4)
        opt = brute_force_opt(f, inst).value
        got = offline_greedy(f, inst).value
        if got < 0.5 * (1 - math.exp(-1)) * opt - 1e-9:
            bad.append(f"greedy {t}: {got} below half of (1-1/e) * {opt}")

    f = random_coverage(20, 30, 6, seed)
    inst = KnapsackInstance.normalized_from(rng.uniform(1, 3, size=(2, 20)), 10)
    for s in range(5):
        _, _, ok = run_two_round_ladder(range(20), f, inst, 2, 0.2,
                                        ClusterConfig(T=4, L=10**6, seed=seed + s, p=0.3), check=True)
        if not ok:
            bad.append(f"distributed seed {seed + s}: two-round grid differs from the sequential run")
    return bad


def _load(args) -> ExperimentConfig:
    if args.config is None:
        cfg = ExperimentConfig.from_text("")
    else:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        cfg = ExperimentConfig.load(path)
    if args.seed is not None:
        cfg = cfg.with_overrides(seed=args.seed)
    return cfg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="robustknap", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("build", "run every configured algorithm and store the summaries"),
                       ("evaluate", "adversarial removal rounds over stored summaries"),
                       ("distributed", "two-round protocol with an equivalence report"),
                       ("selfcheck", "invariant suite on generated fixtures")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--seed", type=int, metavar="N", help="overrides the config seed")
        p.add_argument("--out", metavar="DIR", default="out")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    from .experiment import DatasetError, SummaryMismatch, cmd_build, cmd_distributed, cmd_evaluate
    from .ingest import ParseError
    from .ladder import summary_elements

    out = Path(args.out)
    try:
        if args.command == "selfcheck":
            bad = selfcheck(0 if args.seed is None else args.seed)
            for v in bad:
                print(f"violation: {v}")
            print(f"selfcheck: {'pass' if not bad else 'fail'} ({len(bad)} violations)")
            return EXIT_INVARIANT if bad else EXIT_OK
        cfg = _load(args)
        if args.command == "build":
            res = cmd_build(cfg, out)
            for name, s in res["summaries"].items():
                print(f"{name}: {len(summary_elements(s))} elements over {len(s)} guesses")
        elif args.command == "evaluate":
            scores = cmd_evaluate(cfg, out)
            print(f"wrote {len(scores)} rows to {out / 'scores.csv'}")
            over = [s for s in scores if s.ratio > 1 + 1e-9]
            if over:
                for s in over:
                    print(f"violation: {s.algorithm} round {s.round} ratio {s.ratio} > 1")
                return EXIT_INVARIANT
        elif args.command == "distributed":
            ok, line, _ = cmd_distributed(cfg, out)
            print(line)
            if ok is False:
                return EXIT_INVARIANT
    except (ConfigError, DatasetError, SummaryMismatch, ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
