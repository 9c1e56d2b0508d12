import math

import numpy as np
import pytest

from conftest import EXAMPLE_DIMS, random_utilities
from mcsched import Dimensions, InfeasibleError, Regime, UsageError, UtilityTensor
from mcsched.conflict import Association, build_graph, is_independent, validate_schedule
from mcsched.mwis import brute_force_oracle, exact_mwis, greedy_mwis
from mcsched.network import compute_utilities, generate_instance


def test_example_uniform_ties(example_uniform):
    g = build_graph(example_uniform, Regime.HYBRID)
    oracle = brute_force_oracle(example_uniform, Regime.HYBRID)
    exact = exact_mwis(g)
    assert oracle.candidates == 96 and oracle.ties == 96
    assert exact.weight == oracle.weight == 8.0
    assert exact.schedule.sorted() == oracle.schedule.sorted()


def test_tie_break_is_lexicographically_smallest():
    u = UtilityTensor(np.ones((1, 2, 1, 1)))
    assert exact_mwis(build_graph(u)).schedule.sorted() == (Association(0, 0, 0, 0),)
    assert brute_force_oracle(u).schedule.sorted() == (Association(0, 0, 0, 0),)


def test_oracle_picks_larger_utility():
    u = UtilityTensor(np.array([1.0, 2.0]).reshape(1, 2, 1, 1))
    assert brute_force_oracle(u).schedule.sorted() == (Association(0, 1, 0, 0),)


def test_single_vertex():
    u = UtilityTensor(np.full((1, 1, 1, 1), 0.7))
    r = exact_mwis(build_graph(u), 1)
    assert r.weight == 0.7 and len(r.schedule) == 1


@pytest.mark.parametrize("seed", range(20))
@pytest.mark.parametrize("regime", list(Regime))
def test_matches_oracle(seed, regime):
    u = random_utilities(seed, (2, 3, 1, 2))
    exact = exact_mwis(build_graph(u, regime))
    oracle = brute_force_oracle(u, regime)
    assert exact.weight == oracle.weight
    assert exact.schedule == oracle.schedule


def test_matches_oracle_on_generated_instances():
    for seed in range(10):
        u = compute_utilities(generate_instance(seed, Dimensions(2, 1, 2, 4)))
        for regime in Regime:
            assert exact_mwis(build_graph(u, regime)).weight == brute_force_oracle(u, regime).weight


def test_output_feasible_for_its_regime():
    u = compute_utilities(generate_instance(3, Dimensions(2, 2, 3, 6)))
    for regime in Regime:
        r = exact_mwis(build_graph(u, regime))
        assert validate_schedule(r.schedule, u.dims, regime)


def test_partial_size_matches_enumeration():
    import itertools

    u = random_utilities(4, (1, 3, 2, 2))
    g = build_graph(u)
    for size in (1, 2, 3):
        best = max(
            (math.fsum(g.weights[i] for i in combo), combo)
            for combo in itertools.combinations(range(len(g)), size)
            if is_independent(g, [g.vertices[i] for i in combo])
        )
        assert exact_mwis(g, size).weight == best[0]


def test_infeasible_dimensions():
    u = random_utilities(0, (2, 1, 1, 2))  # U=1 < C*B=2
    with pytest.raises(InfeasibleError):
        exact_mwis(build_graph(u))
    with pytest.raises(InfeasibleError):
        brute_force_oracle(u)


def test_size_out_of_range():
    g = build_graph(random_utilities(0, (1, 2, 1, 1)))
    with pytest.raises(UsageError):
        exact_mwis(g, 0)
    with pytest.raises(InfeasibleError):
        exact_mwis(g, 2)


def test_oracle_enumeration_guard():
    with pytest.raises(UsageError):
        brute_force_oracle(random_utilities(0, (3, 24, 3, 5)))


def test_stats_reported():
    r = exact_mwis(build_graph(random_utilities(1, (2, 4, 2, 2))))
    assert r.stats.nodes > 0 and r.stats.wall_ms >= 0


def test_monotone_scaling_keeps_argmax():
    u = compute_utilities(generate_instance(5, Dimensions(2, 2, 2, 5)))
    base = exact_mwis(build_graph(u)).schedule
    for k in (0.5, 3.0, 1e3):
        assert exact_mwis(build_graph(UtilityTensor(u.pi * k))).schedule == base


@pytest.mark.parametrize("seed", range(10))
def test_regime_ordering(seed):
    u = compute_utilities(generate_instance(seed, Dimensions(2, 2, 3, 5)))
    w = {r: exact_mwis(build_graph(u, r)).weight for r in Regime}
    assert w[Regime.SIGNAL] >= w[Regime.HYBRID] >= w[Regime.SCHEDULING]


@pytest.mark.parametrize("seed", range(10))
def test_z1_collapse(seed):
    u = compute_utilities(generate_instance(seed, Dimensions(2, 2, 1, 5)))
    w = [exact_mwis(build_graph(u, r)).weight for r in Regime]
    assert w[0] == pytest.approx(w[1], rel=1e-12) and w[0] == pytest.approx(w[2], rel=1e-12)


def test_full_scale_exact_solve():
    u = compute_utilities(generate_instance(0, Dimensions(3, 3, 5, 24)))
    r = exact_mwis(build_graph(u))
    assert validate_schedule(r.schedule, u.dims)
    assert r.weight >= greedy_mwis(build_graph(u)).weight


class TestGreedy:
    def test_dominant_vertex_conflicting_with_all(self):
        u = UtilityTensor(np.array([5.0, 1.0]).reshape(1, 2, 1, 1))
        r = greedy_mwis(build_graph(u))
        assert r.schedule.sorted() == (Association(0, 0, 0, 0),) and r.deficit == 0

    def test_all_equal_weights(self, example_uniform):
        r = greedy_mwis(build_graph(example_uniform))
        # heaviest-first with ties to the smallest association: user 0 takes the first
        # slots of cloud 0, then user 1 fills the rest of cloud 0, and so on
        assert r.schedule.sorted()[0] == Association(0, 0, 0, 0)
        assert is_independent(build_graph(example_uniform), r.schedule)

    def test_reports_deficit(self):
        # one user, strong at cloud 0 on both BSs: greedy takes (0,0,0,0) and then
        # cannot place the user anywhere else, leaving one slot empty
        pi = np.array([[[[5.0], [1.0]]]])  # (C=1, U=1, B=2, Z=1)
        g = build_graph(UtilityTensor(pi), Regime.SCHEDULING)
        r = greedy_mwis(g)
        assert r.schedule.sorted() == (Association(0, 0, 0, 0),) and r.deficit == 1

    @pytest.mark.parametrize("seed", range(15))
    def test_dominated_by_exact(self, seed):
        u = compute_utilities(generate_instance(seed, Dimensions(2, 2, 2, 4)))
        for regime in Regime:
            g = build_graph(u, regime)
            r = greedy_mwis(g)
            assert is_independent(g, r.schedule)
            assert r.weight <= exact_mwis(g, len(r.schedule)).weight
            if r.deficit == 0:
                assert r.weight <= exact_mwis(g).weight

    def test_incomplete_greedy_can_outweigh_complete_optimum(self):
        # a maximal set with empty slots is not a schedule, so it is not bounded by the size-Z_tot optimum
        u = compute_utilities(generate_instance(1, Dimensions(2, 2, 2, 4)))
        g = build_graph(u, Regime.SCHEDULING)
        r = greedy_mwis(g)
        assert r.deficit > 0 and r.weight > exact_mwis(g).weight
        assert not validate_schedule(r.schedule, u.dims, Regime.SCHEDULING)
