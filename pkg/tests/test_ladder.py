import numpy as np
import pytest

from oracles import random_tiny
from robustknap.core import KnapsackInstance
from robustknap.grid import RobustSummary, make_params
from robustknap.ladder import (GuessLadder, ceil_index, distinct_summaries, floor_index,
                               guess_ladder_run, ladder_size, robust_query, summary_elements)
from robustknap.objectives import ModularObjective
from robustknap.offline import brute_force_opt, offline_greedy


def test_ladder_size_over_factor_sixteen():
    assert ladder_size(1.0, 16.0, 0.5) == 8


def test_index_helpers_exact_powers():
    for j in range(-5, 30):
        x = 1.1 ** j
        assert floor_index(x, 1.1) == j
        assert ceil_index(x, 1.1) == j
    assert floor_index(1.5, 1.1) == 4 and ceil_index(1.5, 1.1) == 5


def test_fixed_anchor_guess_count():
    f = ModularObjective([1.0])
    inst = KnapsackInstance.normalized_from([[1.0]], 4)
    lad = GuessLadder(f, inst, lambda t: None, 0.5, anchor="fixed", bounds=(1.0, 16.0))
    assert len(lad.grids) == 8


def test_single_element_covers_opt():
    f = ModularObjective([7.3])
    inst = KnapsackInstance.normalized_from([[1.0]], 10)
    s = guess_ladder_run([0], f, inst, "mult", 0.2, 0)
    assert any(t <= 7.3 <= 1.2 * t for t in s)


def test_deterministic():
    rng = np.random.default_rng(4)
    ti = random_tiny(rng, n_max=10)
    f, inst = ti.objective(), ti.instance()
    a = guess_ladder_run(range(ti.n), f, inst, "mult", 0.3, 2)
    b = guess_ladder_run(range(ti.n), f, inst, "mult", 0.3, 2)
    assert {t: s.placements for t, s in a.items()} == {t: s.placements for t, s in b.items()}


def test_stale_guesses_dropped_or_frozen():
    f = ModularObjective([1.0, 1.0, 50.0, 50.0])
    inst = KnapsackInstance.normalized_from(np.ones((1, 4)), 4)
    dropped = guess_ladder_run(range(4), f, inst, "mult", 0.5, 1)
    kept = guess_ladder_run(range(4), f, inst, "mult", 0.5, 1, keep_stale=True)
    assert min(dropped) >= 50 / 1.5
    assert min(kept) <= 1.0
    assert set(dropped) < set(kept)
    # the second largest singleton bounds OPT after one removal from below
    assert all(t * 1.5 > 50 for t in dropped)


def test_guesses_span_lower_to_upper_anchor():
    f = ModularObjective([2.0, 5.0, 3.0])
    inst = KnapsackInstance.normalized_from(np.ones((1, 3)), 4)
    s = guess_ladder_run(range(3), f, inst, "mult", 0.25, 1)
    lo, hi = min(s), max(s)
    assert lo <= 3.0 < lo * 1.25
    assert hi >= 4 * 5.0 > hi / 1.25


def test_eps_validated():
    f = ModularObjective([1.0])
    inst = KnapsackInstance.normalized_from([[1.0]], 4)
    for eps in (0.0, 1.0):
        with pytest.raises(ValueError):
            GuessLadder(f, inst, lambda t: None, eps)


def _abc():
    f = ModularObjective([3.0, 2.0, 2.0])
    inst = KnapsackInstance.normalized_from([[2.0, 1.0, 1.0]], 2)
    return f, inst, {1.0: frozenset({0, 1, 2})}


def test_robust_query_examples():
    f, inst, summ = _abc()
    assert robust_query(summ, set(), f, inst, brute_force_opt).value == 4
    gone = robust_query(summ, {0, 1, 2}, f, inst)
    assert gone.elements == frozenset() and gone.value == 0
    sol = robust_query(summ, {1}, f, inst, brute_force_opt)
    assert sol.elements == {0} and sol.value == 3
    assert robust_query(summ, {1}, f, inst, offline_greedy).elements == {0}


def test_robust_query_uses_original_budget():
    f, inst, _ = _abc()
    summ = {1.0: frozenset({0, 1, 2})}
    sol = robust_query(summ, set(), f, inst)
    assert inst.total_cost(sol.elements)[0] <= inst.K


def test_robust_query_best_over_guesses():
    f, inst, _ = _abc()
    summ = {1.0: frozenset({1}), 2.0: frozenset({0}), 3.0: RobustSummary(None, [(1, 1, 0), (2, 1, 0)])}
    assert robust_query(summ, set(), f, inst).value == 4


def test_distinct_summaries_same_answers():
    rng = np.random.default_rng(8)
    ti = random_tiny(rng, n_max=10)
    f, inst = ti.objective(), ti.instance()
    s = guess_ladder_run(rng.permutation(ti.n), f, inst, "num", 0.2, 2)
    dist = distinct_summaries(s)
    assert len(dist) <= len(s)
    assert summary_elements(dist) == summary_elements(s)
    for _ in range(10):
        E = set(np.flatnonzero(rng.random(ti.n) < 0.3).tolist())
        assert robust_query(dist, E, f, inst).value == robust_query(s, E, f, inst).value
