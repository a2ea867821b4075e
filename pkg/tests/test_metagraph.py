import numpy as np
import pytest

from drpe.generator import random_instance
from drpe.metagraph import (
    MetaPattern,
    count_bs_sequences,
    count_meta_states,
    enumerate_valid_patterns,
    get_transition_lookup,
    solve_meta,
    transition_destination_set,
    valid_pattern_transitions,
)
from drpe.model import Instance, validate_tour
from drpe.opsgraph import build_ops_graph
from drpe.oracle import (
    brute_force_optimum,
    enumerate_bs_neighbors,
    is_bs_neighbor,
    split_optimal,
)

# published lookup table for p=4: patterns and their valid transitions
# (1-based ids) toward stages k+1, k+2, k+3
PUBLISHED_PATTERNS_P4 = [
    ((), ()),
    ((1,), (-2,)),
    ((1,), (-1,)),
    ((2,), (-1,)),
    ((1,), (0,)),
    ((2,), (0,)),
    ((3,), (0,)),
    ((1, 2), (-1, 0)),
]
PUBLISHED_TRANSITIONS_P4 = {
    1: {1: [1, 5, 6, 7], 2: [1, 3, 4, 5, 6, 7, 8], 3: [1, 2, 3, 4, 5, 6, 7, 8]},
    2: {1: [1], 2: [1, 5, 6, 7], 3: [1, 3, 4, 5, 6, 7, 8]},
    3: {1: [1, 2], 2: [1, 5, 6, 7], 3: [1, 3, 4, 5, 6, 7, 8]},
    4: {1: [2, 5], 2: [1, 3, 4], 3: [1, 2, 5, 6, 7]},
    5: {1: [1, 3, 4], 2: [1, 2, 5, 6, 7], 3: [1, 3, 4, 5, 6, 7, 8]},
    6: {1: [3, 5, 8], 2: [1, 2, 3, 4], 3: [1, 2, 5, 6, 7]},
    7: {1: [4, 6, 8], 2: [2, 3, 5, 8], 3: [1, 2, 3, 4]},
    8: {1: [2, 3], 2: [1, 2], 3: [1, 5, 6, 7]},
}


def test_pattern_list_matches_published_table():
    pats = enumerate_valid_patterns(4)
    assert [(p.minus, p.plus) for p in pats] == PUBLISHED_PATTERNS_P4


def test_pattern_counts_are_powers_of_two():
    for p in range(1, 9):
        assert len(enumerate_valid_patterns(p)) == 2 ** (p - 1)


def test_pattern_trivial_widths():
    assert [(p.minus, p.plus) for p in enumerate_valid_patterns(1)] == [((), ())]
    assert [(p.minus, p.plus) for p in enumerate_valid_patterns(2)] == [
        ((), ()), ((1,), (0,))]


def test_transition_lists_match_published_table():
    lookup = get_transition_lookup(4)
    for a_id, per_h in PUBLISHED_TRANSITIONS_P4.items():
        for h, expect in per_h.items():
            got = [b + 1 for b, _ in lookup.successors(a_id - 1, h)]
            assert got == expect, (a_id, h)


def test_leg_transition_requires_identity():
    pats = enumerate_valid_patterns(4)
    for a in pats:
        for b in pats:
            assert valid_pattern_transitions(a, b, 0, 4) == (a == b)


def test_wide_gaps_accept_every_pattern():
    pats = enumerate_valid_patterns(4)
    for a in pats:
        for b in pats:
            assert valid_pattern_transitions(a, b, 2 * 4 - 2, 4)


def test_destination_set_examples():
    empty = MetaPattern((), ())
    pulled = MetaPattern((1, 2), (-1, 0))
    # stage 0, gap 3: the operation flies positions {0, 3, 4} (v1, v4, v5)
    assert transition_destination_set(empty, pulled, 0, 3) == frozenset({0, 3, 4})
    # untangled single step
    for k in (0, 2, 5):
        assert transition_destination_set(empty, empty, k, 1) == frozenset({k})
    # stage 3, gap 2, untangling a displaced pair: positions {2, 4} (v3, v5)
    a = MetaPattern((1,), (0,))
    assert transition_destination_set(a, empty, 3, 2) == frozenset({2, 4})


def test_sequence_counts_match_enumeration_oracle():
    for n_d in (4, 5, 6, 7):
        for p in (1, 2, 3, 4):
            dp = count_bs_sequences(n_d, p)
            oracle = len(enumerate_bs_neighbors(tuple(range(n_d)), p))
            assert dp == oracle, (n_d, p)


def test_typical_stage_state_count():
    for p in (2, 3, 4, 5):
        counts = count_meta_states(16, p)
        for k in range(p - 1, 16 - p + 2):
            assert counts[k] == 2 ** (p - 1)
        assert counts[0] == 1 and counts[16] == 1


def _solve(inst, x, p, model=None):
    table = build_ops_graph(inst, x, p, model=model)
    return solve_meta(table, inst, x, p, model=model)


def test_width_one_equals_split_exactly():
    for seed in range(10):
        inst = random_instance(seed, n_d=7, n_r=4)
        x = tuple(np.random.default_rng(seed + 3).permutation(7).tolist())
        tour, _ = _solve(inst, x, 1)
        assert tour.makespan == split_optimal(x, inst).makespan


def test_full_width_equals_brute_force():
    for seed in range(6):
        inst = random_instance(seed, n_d=6, n_r=4)
        x = tuple(np.random.default_rng(seed).permutation(6).tolist())
        tour, _ = _solve(inst, x, 6)
        assert tour.makespan == pytest.approx(brute_force_optimum(inst).makespan, abs=1e-9)


def test_free_rover_unlimited_energy_reduces_to_flight_split():
    from tests.test_oracle import _flight_only_best
    for seed in range(4):
        base = random_instance(seed, n_d=6, n_r=3)
        inst = Instance(n_d=6, n_r=3, c_d=base.c_d, c_r=np.zeros((3, 3)),
                        w0=base.w0, wt=base.wt, e_max=1e18)
        x = tuple(np.random.default_rng(seed).permutation(6).tolist())
        tour, _ = _solve(inst, x, 1)
        assert tour.makespan == pytest.approx(_flight_only_best(x, inst), abs=1e-9)


def test_solution_is_member_and_valid():
    for seed in range(6):
        inst = random_instance(seed, n_d=7, n_r=3)
        x = tuple(np.random.default_rng(seed + 7).permutation(7).tolist())
        for p in (2, 3):
            tour, _ = _solve(inst, x, p)
            assert validate_tour(tour, inst).passed
            assert is_bs_neighbor(x, tour.destination_order(), p)


def test_value_monotone_in_width():
    for seed in range(5):
        inst = random_instance(seed, n_d=7, n_r=4)
        x = tuple(np.random.default_rng(seed).permutation(7).tolist())
        prev = np.inf
        for p in range(1, 8):
            tour, _ = _solve(inst, x, p)
            assert tour.makespan <= prev + 1e-9
            prev = tour.makespan


def test_dp_equals_min_over_enumerated_neighbors():
    # searching the neighborhood == taking the best optimal split over every
    # neighbor order, which the enumeration oracle can afford at this size
    for seed in (2, 4):
        inst = random_instance(seed, n_d=5, n_r=3)
        x = tuple(range(5))
        for p in (2, 3):
            tour, _ = _solve(inst, x, p)
            best = min(split_optimal(nb, inst).makespan
                       for nb in enumerate_bs_neighbors(x, p))
            assert tour.makespan == pytest.approx(best, abs=1e-9)
