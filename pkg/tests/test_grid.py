import io
import itertools
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import TinyInstance, literal_replay, random_tiny
from robustknap.core import GroundElement, InvalidInstanceError, KnapsackInstance
from robustknap.grid import (BucketGrid, algmult_run, algnum_init, algnum_insert, algsize_run,
                             algsize_tau, dump_summaries, load_summaries, make_params, prune,
                             run_grid)
from robustknap.invariants import check_grid
from robustknap.objectives import CoverageObjective, ModularObjective


def _sig(grid):
    return tuple((n, tuple(c), m) for n, c, m in grid.signature())


def _ref_sig(ref):
    return tuple((n, c, tuple(tuple(b) for b in B)) for n, c, B in ref)


def test_algnum_init_threshold():
    g = algnum_init(4, 8, 89, ModularObjective([1.0]))
    assert g.params.ell == 3
    assert g.tau == pytest.approx(6.0)


def test_algnum_init_bucket_counts():
    g = algnum_init(4, 8, 89, ModularObjective([1.0]))
    assert g.params.w == 6
    counts = [p.n_buckets for p in g.partitions]
    assert counts[0] == 72 and counts[3] == 30
    assert all((p.counters == 0).all() for p in g.partitions)


def test_algnum_init_no_removals():
    g = algnum_init(0, 8, 89, ModularObjective([1.0]))
    assert g.params.w == 0
    assert all(p.n_buckets == 24 for p in g.partitions)
    assert all(p.element_cap == 0 for p in g.partitions)


def test_algnum_init_rejects_small_budget():
    with pytest.raises(ValueError):
        algnum_init(1, 0.5, 1.0, ModularObjective([1.0]))


def test_literal_partitions_follow_pseudocode():
    p = make_params("num", 8, 1, 1, 10.0, literal=True)
    assert p.partition_count == 4
    assert make_params("num", 8, 1, 1, 10.0).partition_count == 5


def test_partition_zero_always_skipped():
    inst = KnapsackInstance.normalized_from([[1.0, 1.5, 2.0]], 8)
    f = ModularObjective([50.0, 50.0, 50.0])
    g = run_grid(make_params("num", 8, 1, 2, 100.0), f, inst, [0, 1, 2])
    assert not g.partitions[0].members
    assert len(g) == 3


def test_first_placement_grows_twelve_buckets():
    # tau = 6, unit cost, gain 7 clears tau/2 = 3 in partition 1
    g = algnum_init(4, 8, 89, ModularObjective([7.0]))
    before = g.partitions[1].n_buckets
    spot = algnum_insert(g, g.f, GroundElement(0, np.array([1.0])))
    assert spot == (1, 0)
    p1 = g.partitions[1]
    assert p1.n_buckets == before + 12
    assert p1.counters[0] == 0


def test_low_gain_rejected_and_grid_unchanged():
    f = ModularObjective([7.0, 0.01])
    g = algnum_init(4, 8, 89, f)
    g.insert(0, [1.0])
    before = _sig(g)
    assert g.insert(1, [1.0]) is None
    assert _sig(g) == before
    assert 1 not in g.placed


def test_algnum_insert_rejects_multi_knapsack_element():
    g = algnum_init(1, 8, 10, ModularObjective([1.0]))
    with pytest.raises(ValueError):
        algnum_insert(g, g.f, GroundElement(0, np.array([1.0, 2.0])))


def test_element_offered_twice():
    g = algnum_init(1, 8, 10, ModularObjective([5.0]))
    g.insert(0, [1.0])
    with pytest.raises(ValueError):
        g.insert(0, [1.0])


def test_algsize_bucket_counts_and_threshold():
    p = make_params("size", 8, 1, 8, 28.0)
    assert p.w == 12
    g = BucketGrid(p, ModularObjective([1.0]))
    assert g.partitions[0].n_buckets == 96 and g.partitions[3].n_buckets == 12
    assert algsize_tau(28.0, 8, 8) == pytest.approx(3.0)
    assert p.tau == pytest.approx(3 * 28.0 / 28)


def test_algsize_empty_stream():
    inst = KnapsackInstance.normalized_from(np.ones((1, 3)), 8)
    assert len(algsize_run([], ModularObjective([1.0, 1.0, 1.0]), inst, 4, 1.0)) == 0


def test_algsize_fixed_buckets():
    inst = KnapsackInstance.normalized_from(np.ones((1, 40)), 8)
    f = ModularObjective(np.full(40, 5.0))
    g = run_grid(make_params("size", 8, 1, 2, 20.0), f, inst, range(40))
    assert all(p.n_buckets == p.initial_buckets for p in g.partitions)


def test_algmult_threshold():
    assert make_params("mult", 8, 2, 1, 8.0).tau == 2.0


def test_algmult_uses_max_cost():
    inst = KnapsackInstance.normalized_from([[1.0], [3.0]], 8)
    s = algmult_run([0], ModularObjective([100.0]), inst, 1, 20.0)
    assert s.placements == [(0, 3, 0)]


def test_algmult_needs_normalized():
    inst = KnapsackInstance([[1.0, 2.0]], [4.0])
    with pytest.raises(InvalidInstanceError):
        algmult_run([0, 1], ModularObjective([1.0, 1.0]), inst, 1, 4.0)


def _streams(n, max_len):
    for k in range(max_len + 1):
        yield from itertools.permutations(range(n), k)


@pytest.mark.parametrize("seed", range(3))
def test_mult_with_one_knapsack_against_literal_pseudocode(seed):
    # every stream of at most 5 elements drawn from a 5-element universe
    rng = np.random.default_rng(seed)
    ti = random_tiny(rng, n_max=5, K_choices=(4, 8))
    while ti.n < 5:
        ti = random_tiny(rng, n_max=5, K_choices=(4, 8))
    f, inst = ti.objective(), ti.instance()
    m = 2
    for tau_star in (4.0, 12.0, 40.0):
        p = make_params("mult", inst.K, 1, m, tau_star)
        q = make_params("num", inst.K, 1, m, tau_star)
        for stream in _streams(5, 5):
            g = BucketGrid(p, f).run(stream, inst)
            assert _sig(g) == _ref_sig(literal_replay("mult", stream, ti, m, p.tau))
            h = BucketGrid(q, f).run(stream, inst)
            assert _sig(h) == _ref_sig(literal_replay("num", stream, ti, m, q.tau))


@settings(max_examples=150, deadline=None)
@given(st.sampled_from(["num", "mult", "size"]), st.integers(1, 2), st.integers(0, 3),
       st.floats(0.5, 40), st.integers(0, 2**31 - 1))
def test_grid_matches_literal_replay(variant, d, m, tau, seed):
    d = d if variant == "mult" else 1
    rng = np.random.default_rng(seed)
    ti = random_tiny(rng, n_max=12, d=d)
    f, inst = ti.objective(), ti.instance()
    p = replace(make_params(variant, inst.K, d, m, 1.0), tau=tau)
    stream = rng.permutation(ti.n)
    g = BucketGrid(p, f).run(stream, inst)
    assert _sig(g) == _ref_sig(literal_replay(variant, stream, ti, m, tau))
    assert check_grid(g, inst, f) == []


def test_mult_growth_decrements_every_counter():
    inst = KnapsackInstance.normalized_from([[1.0], [1.0]], 8)
    g = run_grid(make_params("mult", 8, 2, 4, 10.0), ModularObjective([100.0]), inst, [0])
    c = g.partitions[1].counters
    assert (c == 0).all()


def test_prune_examples():
    inst = KnapsackInstance.normalized_from(np.ones((1, 4)), 8)
    f = ModularObjective([5.0, 4.0, 3.0, 2.0])
    s = run_grid(make_params("num", 8, 1, 1, 10.0), f, inst, range(4)).summary()
    assert prune(s.__class__(s.params, []), f, inst).placements == []
    assert prune(s, f, inst).elements == s.elements


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["num", "mult"]), st.integers(0, 2**31 - 1))
def test_prune_never_grows(variant, seed):
    rng = np.random.default_rng(seed)
    ti = random_tiny(rng, n_max=12, d=1)
    f, inst = ti.objective(), ti.instance()
    p = make_params(variant, inst.K, 1, 2, float(rng.uniform(1, 40)))
    s = run_grid(p, f, inst, rng.permutation(ti.n)).summary()
    assert len(prune(s, f, inst)) <= len(s)


def test_prune_sorts_by_cost_then_id():
    inst = KnapsackInstance.normalized_from([[2.0, 1.0, 2.0, 1.0]], 8)
    f = ModularObjective([1.0, 1.0, 1.0, 1.0])
    s = run_grid(make_params("num", 8, 1, 1, 1.0), f, inst, range(4)).summary()
    assert [e for e, _, _ in prune(s, f, inst).placements] == [1, 3, 0, 2]


def test_summary_text_round_trip():
    rng = np.random.default_rng(5)
    ti = random_tiny(rng, n_max=10, d=2)
    f, inst = ti.objective(), ti.instance()
    s = run_grid(make_params("mult", inst.K, 2, 1, 6.0), f, inst, range(ti.n)).summary()
    buf = io.StringIO()
    dump_summaries([s], buf, inst)
    header = [l for l in buf.getvalue().splitlines() if not l.startswith("#")][0]
    assert header.split() == [repr(6.0), str(s.params.partition_count)]
    (back,) = load_summaries(io.StringIO(buf.getvalue()))
    assert back.placements == s.placements
    assert back.params == s.params
    for e in back.elements:
        assert np.allclose(back.costs[e], inst.cost(e))


def test_load_rejects_garbage():
    with pytest.raises(ValueError):
        load_summaries(io.StringIO("1.0 3\n1 2 0\n"))


def test_saturation_dichotomy():
    rng = np.random.default_rng(11)
    for _ in range(50):
        ti = random_tiny(rng, n_max=12)
        f, inst = ti.objective(), ti.instance()
        g = run_grid(make_params("num", inst.K, 1, 2, float(rng.uniform(1, 30))), f, inst,
                     rng.permutation(ti.n))
        for part in g.partitions:
            sat = part.saturated()[:, 0]
            assert sat.sum() * 2 >= part.n_buckets or (~sat).any()


def test_copy_is_independent():
    inst = KnapsackInstance.normalized_from(np.ones((1, 6)), 8)
    f = CoverageObjective([[k] for k in range(6)])
    g = run_grid(make_params("num", 8, 1, 1, 3.0), f, inst, range(3))
    h = g.copy()
    h.run(range(3, 6), inst)
    assert len(g) == 3 and len(h) == 6
    assert _sig(g) == _sig(run_grid(g.params, f, inst, range(3)))


def test_might_accept_later_superset_of_would_accept():
    rng = np.random.default_rng(2)
    ti = random_tiny(rng, n_max=10)
    f, inst = ti.objective(), ti.instance()
    g = run_grid(make_params("mult", inst.K, 1, 1, 8.0), f, inst, range(ti.n // 2))
    for e in range(ti.n // 2, ti.n):
        if g.would_accept(e, inst.cost(e)):
            assert g.might_accept_later(e, inst.cost(e))
