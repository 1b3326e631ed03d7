import io

import numpy as np
import pytest

from oracles import random_tiny
from robustknap.adversary import (SCORE_COLUMNS, RemovalSchedule, build_removal_schedule,
                                  reference_upper_bound, score_round, score_schedule, write_scores)
from robustknap.core import KnapsackInstance
from robustknap.ladder import guess_ladder_run
from robustknap.objectives import ModularObjective
from robustknap.offline import brute_force_opt


def _abc():
    f = ModularObjective([3.0, 2.0, 2.0])
    inst = KnapsackInstance.normalized_from([[2.0, 1.0, 1.0]], 2)
    return f, inst


def test_schedule_replay_with_exact_solver():
    # the exact solver's first pick on {a, b, c} is {b, c} (value 4 beats {a} at 3)
    f, inst = _abc()
    sched = build_removal_schedule({"A": frozenset({0, 1, 2})}, f, inst, brute_force_opt)
    assert sched.rounds == [frozenset({1, 2}), frozenset({0})]
    assert list(sched.prefixes())[-1] == {0, 1, 2}


def test_schedule_empty_summaries():
    f, inst = _abc()
    assert len(build_removal_schedule({"A": frozenset(), "B": frozenset()}, f, inst)) == 0
    with pytest.raises(ValueError):
        build_removal_schedule({}, f, inst)


def test_schedule_union_idempotent():
    f, inst = _abc()
    S = frozenset({0, 1, 2})
    one = build_removal_schedule({"A": S}, f, inst, brute_force_opt)
    two = build_removal_schedule({"A": S, "B": S}, f, inst, brute_force_opt)
    assert one.rounds == two.rounds


def test_schedule_rounds_disjoint_and_capped():
    rng = np.random.default_rng(1)
    ti = random_tiny(rng, n_max=10)
    while ti.n < 8:
        ti = random_tiny(rng, n_max=10)
    f, inst = ti.objective(), ti.instance()
    summ = {"ladder": guess_ladder_run(range(ti.n), f, inst, "mult", 0.2, 2),
            "all": frozenset(range(ti.n))}
    sched = build_removal_schedule(summ, f, inst, max_rounds=3)
    assert len(sched) <= 3
    seen = set()
    for R in sched.rounds:
        assert R and not (R & seen)
        seen |= R


def test_truncated_keeps_round_order():
    s = RemovalSchedule([frozenset({5, 2}), frozenset({1, 9})])
    assert s.truncated(3).rounds == [frozenset({2, 5}), frozenset({1})]
    assert s.truncated(0).rounds == []
    assert s.prefix(1) == {2, 5}


def test_score_round_examples():
    f, inst = _abc()
    S = frozenset({0, 1, 2})
    r0 = score_round("A", S, set(), f, inst, 8.0, 0, brute_force_opt)
    assert r0.objective == 4 and r0.ratio == 0.5 and r0.summary_size == 3
    r1 = score_round("A", S, {1, 2}, f, inst, 8.0, 1, brute_force_opt)
    assert r1.objective == 3 and r1.removed_cumulative == 2
    gone = score_round("A", S, S, f, inst, 8.0, 2, brute_force_opt)
    assert gone.objective == 0 and gone.ratio == 0
    with pytest.raises(ValueError):
        score_round("A", S, set(), f, inst, 0.0)


def test_reference_bound_is_valid():
    rng = np.random.default_rng(6)
    for d in (1, 2):
        for _ in range(25):
            ti = random_tiny(rng, n_max=9, d=d)
            f, inst = ti.objective(), ti.instance()
            assert reference_upper_bound(f, inst) >= brute_force_opt(f, inst).value - 1e-9
            E = set(range(0, ti.n, 3))
            cand = [e for e in range(ti.n) if e not in E]
            assert (reference_upper_bound(f, inst, E)
                    >= brute_force_opt(f, inst, candidates=cand).value - 1e-9)


def test_score_schedule_shares_one_schedule_and_bound():
    f, inst = _abc()
    summ = {"A": frozenset({0, 1, 2}), "B": frozenset({0})}
    sched = build_removal_schedule(summ, f, inst, brute_force_opt)
    scores = score_schedule(summ, sched, f, inst, brute_force_opt, bound=4.0)
    assert len(scores) == 2 * (len(sched) + 1)
    assert {s.upper_bound for s in scores} == {4.0}
    assert all(0 <= s.ratio <= 1 for s in scores)
    per = score_schedule(summ, sched, f, inst, brute_force_opt, per_round_bound=True)
    assert len({s.upper_bound for s in per}) > 1


def test_write_scores_header():
    f, inst = _abc()
    buf = io.StringIO()
    write_scores([score_round("A", {0}, set(), f, inst, 4.0)], buf, "v1")
    lines = buf.getvalue().splitlines()
    assert lines[0] == "# v1"
    assert lines[1] == ",".join(SCORE_COLUMNS)
    assert lines[2].startswith("A,0,0,3.0,4.0,0.75,1")
