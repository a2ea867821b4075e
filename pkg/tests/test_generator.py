import json

import numpy as np
import pytest

from drpe.generator import (
    SETTING_NAMES,
    all_settings,
    generate,
    get_setting,
    grid_coordinates,
    random_instance,
)
from drpe.io import instance_to_dict
from drpe.model import check_instance


def test_base_small_parameters():
    s = get_setting("Basis", "small")
    assert (s.n_d, s.n_r, s.side, s.delta, s.e_max) == (16, 9, 1000.0, 0.5, 1000.0)


def test_factor_grid_covers_published_settings():
    small = {s.name: s for s in all_settings("small")}
    assert small["SpLow"].delta == pytest.approx(1 / 3)
    assert small["SpHigh"].delta == 1.0
    assert small["EnLow"].e_max == 750.0
    assert small["EnHigh"].e_max == 1250.0
    assert small["LocLow"].n_r == 6
    assert small["LocHigh"].n_r == 16
    assert small["DenLow"].side == 1400.0
    assert small["DenHigh"].side == 600.0

    large = {s.name: s for s in all_settings("large")}
    assert all(s.n_d == 100 for s in large.values())
    assert large["Basis"].n_r == 49 and large["Basis"].side == 2500.0
    assert large["LocLow"].n_r == 36 and large["LocHigh"].n_r == 100
    assert large["DenLow"].side == 3500.0 and large["DenHigh"].side == 1500.0


def test_density_side_consistency():
    for size in ("small", "large"):
        for s in all_settings(size):
            realized = s.n_d / s.side ** 2
            assert realized == pytest.approx(s.density, rel=0.05)


def test_grid_layouts():
    g9 = grid_coordinates(9, 1000.0)
    assert g9.shape == (9, 2)
    assert {tuple(p) for p in g9} == {(x, y) for x in (0.0, 500.0, 1000.0)
                                      for y in (0.0, 500.0, 1000.0)}
    g6 = grid_coordinates(6, 600.0)
    assert {tuple(p) for p in g6} == {(x, y) for x in (0.0, 300.0, 600.0)
                                      for y in (0.0, 600.0)}


def test_generated_instance_is_valid_and_single_depot():
    for name in SETTING_NAMES:
        inst = generate(get_setting(name, "small"), seed=3)
        assert check_instance(inst) == []
        assert inst.w0 == inst.wt
        assert inst.n_d == 16
        # rover metric is scaled manhattan
        i, j = 0, inst.n_r - 1
        man = abs(inst.rl_xy[i, 0] - inst.rl_xy[j, 0]) + abs(inst.rl_xy[i, 1] - inst.rl_xy[j, 1])
        delta = inst.meta["rover_speed"]
        assert inst.c_r[i, j] == pytest.approx(man / delta, rel=1e-12)


def test_generation_deterministic_bytes():
    s = get_setting("Basis", "small")
    a = json.dumps(instance_to_dict(generate(s, seed=7)), sort_keys=True)
    b = json.dumps(instance_to_dict(generate(s, seed=7)), sort_keys=True)
    assert a == b
    c = json.dumps(instance_to_dict(generate(s, seed=8)), sort_keys=True)
    assert a != c


def test_reachability_always_holds():
    for seed in range(5):
        inst = generate(get_setting("EnLow", "small"), seed=seed)
        assert (2 * inst.nearest_rl_time() <= inst.e_max + 1e-9).all()


def test_random_instance_helper():
    inst = random_instance(0, n_d=6, n_r=4)
    assert check_instance(inst) == []
    same = random_instance(0, n_d=6, n_r=4)
    assert np.array_equal(inst.c_d, same.c_d)
    single = random_instance(1, n_d=4, n_r=3, single_depot=True)
    assert single.w0 == single.wt


def test_unknown_setting_rejected():
    with pytest.raises(ValueError):
        get_setting("Turbo", "small")
    with pytest.raises(ValueError):
        get_setting("Basis", "medium")
