import numpy as np
import pytest

from drpe.generator import metrics_from_coords
from drpe.model import DroneTour, Instance, Operation, RechargingLeg, build_tour

# Worked 5-destination example: three operations with makespans 4, 7 and 7
# plus one nonempty recharging leg of makespan 4, total 22. Coordinates are
# chosen so every quoted value is met exactly (drone Euclidean, rover
# Manhattan at unit speed).
FIG_DEST = np.array([[0.0, 2.0], [3.0, 0.0], [3.0, 2.0], [9.0, 0.0], [9.0, 3.0]])
FIG_RLS = np.array([[0.0, 0.0], [5.0, 2.0], [5.0, 10.0], [7.0, 0.0], [11.0, 3.0]])


def make_worked_instance() -> Instance:
    c_d, c_r = metrics_from_coords(FIG_DEST, FIG_RLS, rover_speed=1.0)
    return Instance(n_d=5, n_r=5, c_d=c_d, c_r=c_r, w0=0, wt=4, e_max=8.0,
                    dest_xy=FIG_DEST, rl_xy=FIG_RLS, name="worked_example",
                    meta={"rover_speed": 1.0, "drone_metric": "euclidean",
                          "rover_metric": "manhattan"})


def make_worked_tour(inst: Instance) -> DroneTour:
    return build_tour(inst, [
        RechargingLeg(0, 0),
        Operation(0, (0,), 0),        # out and back: makespan 4
        RechargingLeg(0, 0),
        Operation(0, (1, 2), 1),      # makespan 7
        RechargingLeg(1, 3),          # rover move: makespan 4
        Operation(3, (3, 4), 4),      # makespan 7
        RechargingLeg(4, 4),
    ])


@pytest.fixture
def worked_instance():
    return make_worked_instance()


@pytest.fixture
def worked_tour(worked_instance):
    return make_worked_tour(worked_instance)
