import itertools

import numpy as np
import pytest

from drpe.generator import random_instance
from drpe.model import Instance
from drpe.opsgraph import (
    OpSetKey,
    build_ops_graph,
    count_ops_states,
    ops_nonterminal_state_bound,
    recover_operation_order,
    set_window_valid,
    valid_successor_indices,
)
from drpe.oracle import enumerate_valid_operation_sequences


def _mask(*positions):
    out = 0
    for t in positions:
        out |= 1 << t
    return out


def _unlimited(inst):
    return Instance(n_d=inst.n_d, n_r=inst.n_r, c_d=inst.c_d, c_r=inst.c_r,
                    w0=inst.w0, wt=inst.wt, e_max=1e18)


def test_successors_of_first_position():
    # from {first element} with a 2-wide window the next three positions open
    assert valid_successor_indices(_mask(0), 2, 5) == [1, 2, 3]


def test_successors_everything_open_at_full_width():
    n = 6
    for k in range(n):
        got = valid_successor_indices(_mask(k), n, n)
        assert got == [i for i in range(n) if i != k]


def test_invalid_set_is_never_reached():
    # {v1,v2,v4,v5} with p=2 misses interior v3 and must not appear as a key
    inst = random_instance(0, n_d=5, n_r=3)
    table = build_ops_graph(_unlimited(inst), tuple(range(5)), 2)
    assert _mask(0, 1, 3, 4) not in table.entries
    assert not set_window_valid(_mask(0, 1, 3, 4), 2)


def test_successors_match_enumeration_oracle():
    # a position may follow a partial set iff some neighbor order contains
    # the extended set as an operation prefix
    n_d, p = 5, 2
    seqs = enumerate_valid_operation_sequences(n_d, p)
    prefixes = {s[:k] for s in seqs for k in range(1, len(s) + 1)}
    for size in (1, 2, 3):
        for combo in itertools.combinations(range(n_d), size):
            m = _mask(*combo)
            if not set_window_valid(m, p):
                continue
            for last in combo:
                # orderings of combo ending at last that are real prefixes
                witnesses = [s for s in prefixes
                             if len(s) == size and set(s) == set(combo) and s[-1] == last]
                if not witnesses:
                    continue
                allowed = set(valid_successor_indices(m, p, n_d))
                truth = {s2[size] for s2 in prefixes
                         if len(s2) == size + 1 and s2[:size] in witnesses}
                # every oracle-extension must be allowed by the rule
                assert truth <= allowed


def test_p1_table_is_exactly_contiguous_blocks():
    inst = random_instance(2, n_d=6, n_r=3)
    x = tuple(np.random.default_rng(5).permutation(6).tolist())
    table = build_ops_graph(_unlimited(inst), x, 1)
    blocks = set()
    for a in range(6):
        for b in range(a, 6):
            blocks.add(_mask(*range(a, b + 1)))
    assert set(table.entries) == blocks


def _oracle_table(inst, x, p):
    """Minimal flight per (w, set, w') over all neighbor-embeddable
    orderings, computed straight from the enumeration oracle."""
    seqs = enumerate_valid_operation_sequences(inst.n_d, p)
    out = {}
    for s in seqs:
        m = _mask(*s)
        dests = [x[t] for t in s]
        inner = sum(inst.cd_dd[a, b] for a, b in zip(dests, dests[1:]))
        mat = inst.cd_rd[:, dests[0], None] + inner + inst.cd_dr[None, dests[-1], :]
        cur = out.get(m)
        out[m] = mat if cur is None else np.minimum(cur, mat)
    return out


@pytest.mark.parametrize("p", [2, 3])
def test_table_matches_ordering_oracle_unlimited(p):
    for seed in (0, 1):
        inst = _unlimited(random_instance(seed, n_d=5, n_r=3))
        x = tuple(np.random.default_rng(seed + 9).permutation(5).tolist())
        table = build_ops_graph(inst, x, p)
        oracle = _oracle_table(inst, x, p)
        assert set(table.entries) == set(oracle)
        for m, mat in table.entries.items():
            assert np.allclose(mat, oracle[m], atol=1e-9)


def test_table_respects_energy_filter():
    inst = random_instance(4, n_d=5, n_r=3)
    table = build_ops_graph(inst, tuple(range(5)), 2)
    for m, mat in table.entries.items():
        finite = mat[np.isfinite(mat)]
        assert (finite <= inst.e_max + 1e-9).all()


def test_values_monotone_in_p():
    inst = random_instance(6, n_d=6, n_r=3)
    x = tuple(range(6))
    tables = {p: build_ops_graph(inst, x, p) for p in (1, 2, 3, 6)}
    for p_small, p_big in ((1, 2), (2, 3), (3, 6)):
        small, big = tables[p_small], tables[p_big]
        for m, mat in small.entries.items():
            assert m in big.entries
            assert (big.entries[m] <= mat + 1e-9).all()


def test_stage_one_count_and_bound():
    inst = _unlimited(random_instance(1, n_d=10, n_r=3))
    x = tuple(range(10))
    stats = count_ops_states(inst, x, 3)
    assert stats.per_stage[1] == inst.n_d * inst.n_r
    assert stats.nonterminal_states <= ops_nonterminal_state_bound(10, 3, 3)


def test_opsetkey_roundtrip():
    for p in (2, 3, 4):
        for n in (6, 8):
            for size in range(1, n + 1):
                for combo in itertools.combinations(range(n), size):
                    m = _mask(*combo)
                    if not set_window_valid(m, p):
                        continue
                    key = OpSetKey.from_mask(m, p)
                    assert key.to_mask(p) == m


def test_recover_reproduces_best_order():
    inst = random_instance(8, n_d=6, n_r=3)
    x = tuple(np.random.default_rng(1).permutation(6).tolist())
    p = 3
    table = build_ops_graph(inst, x, p)
    checked = 0
    for m, mat in sorted(table.entries.items()):
        w, wp = np.unravel_index(np.argmin(mat), mat.shape)
        if not np.isfinite(mat[w, wp]):
            continue
        order = recover_operation_order(inst, x, m, int(w), int(wp), p)
        dests = [x[t] for t in order]
        flight = (inst.cd_rd[w, dests[0]]
                  + sum(inst.cd_dd[a, b] for a, b in zip(dests, dests[1:]))
                  + inst.cd_dr[dests[-1], wp])
        assert flight == pytest.approx(mat[w, wp], abs=1e-9)
        checked += 1
    assert checked > 5


def test_engines_identical():
    for seed in (0, 3):
        inst = random_instance(seed, n_d=7, n_r=4)
        x = tuple(np.random.default_rng(seed).permutation(7).tolist())
        for p in (2, 4):
            dense = build_ops_graph(inst, x, p, engine="dense")
            sparse = build_ops_graph(inst, x, p, engine="sparse")
            assert set(dense.entries) == set(sparse.entries)
            for m in dense.entries:
                assert np.array_equal(dense.entries[m], sparse.entries[m])
            assert dense.stats.per_stage == sparse.stats.per_stage
