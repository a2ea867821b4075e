"""Instance and solution JSON formats.

Instance files carry either coordinates plus metric descriptors (matrices
are rederived on load, bit-exact) or explicit travel-time matrices, which
take precedence. Solutions list tour elements with 0-based indices.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

import numpy as np

from .generator import metrics_from_coords
from .model import (
    DroneTour,
    Instance,
    Operation,
    RechargingLeg,
    SchemaError,
    check_instance,
)

INSTANCE_VERSION = 1
PathLike = Union[str, Path]


def instance_to_dict(inst: Instance) -> dict:
    doc = {
        "version": INSTANCE_VERSION,
        "name": inst.name,
        "n_d": inst.n_d,
        "n_r": inst.n_r,
        "depot_start": inst.w0,
        "depot_target": inst.wt,
        "e_max": inst.e_max,
        "rover_speed": inst.meta.get("rover_speed", 1.0),
        "metrics": {
            "drone": inst.meta.get("drone_metric", "matrix"),
            "rover": inst.meta.get("rover_metric", "matrix"),
        },
    }
    if inst.dest_xy is not None:
        doc["destinations"] = inst.dest_xy.tolist()
    if inst.rl_xy is not None:
        doc["rls"] = inst.rl_xy.tolist()
    if doc["metrics"]["drone"] == "matrix":
        doc["c_d"] = inst.c_d.tolist()
    if doc["metrics"]["rover"] == "matrix":
        doc["c_r"] = inst.c_r.tolist()
    extra = {k: v for k, v in inst.meta.items()
             if k not in ("rover_speed", "drone_metric", "rover_metric")}
    if extra:
        doc["extra"] = extra
    return doc


def save_instance(inst: Instance, path: PathLike) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), sort_keys=True),
                          encoding="utf-8")


def _metric_closure(m: np.ndarray) -> np.ndarray:
    out = m.copy()
    for k in range(out.shape[0]):
        np.minimum(out, out[:, k, None] + out[None, k, :], out=out)
    return out


def instance_from_dict(doc: dict, metric_closure: bool = False,
                       validate: bool = True) -> Instance:
    try:
        n_d, n_r = int(doc["n_d"]), int(doc["n_r"])
        w0, wt = int(doc["depot_start"]), int(doc["depot_target"])
        e_max = float(doc["e_max"])
        metrics = doc.get("metrics", {})
    except KeyError as exc:
        raise SchemaError(f"instance file missing field {exc}") from exc

    dest_xy = np.array(doc["destinations"], dtype=float) if "destinations" in doc else None
    rl_xy = np.array(doc["rls"], dtype=float) if "rls" in doc else None
    if dest_xy is not None and dest_xy.shape != (n_d, 2):
        raise SchemaError(f"destinations must be {n_d} coordinate pairs")
    if rl_xy is not None and rl_xy.shape != (n_r, 2):
        raise SchemaError(f"rls must be {n_r} coordinate pairs")

    drone_metric = metrics.get("drone", "matrix" if "c_d" in doc else "euclidean")
    rover_metric = metrics.get("rover", "matrix" if "c_r" in doc else "manhattan")
    rover_speed = float(doc.get("rover_speed", 1.0))

    c_d = c_r = None
    if drone_metric != "matrix" or rover_metric != "matrix":
        if dest_xy is None or rl_xy is None:
            raise SchemaError("coordinate metrics require destinations and rls")
        c_d, c_r = metrics_from_coords(
            dest_xy, rl_xy, rover_speed,
            drone_metric if drone_metric != "matrix" else "euclidean",
            rover_metric if rover_metric != "matrix" else "manhattan")
    if "c_d" in doc:
        c_d = np.array(doc["c_d"], dtype=float)
    if "c_r" in doc:
        c_r = np.array(doc["c_r"], dtype=float)
    if c_d is None or c_r is None:
        raise SchemaError("instance provides neither coordinates nor matrices")

    if metric_closure:
        c_d = _metric_closure(c_d)
        c_r = _metric_closure(c_r)

    meta = dict(doc.get("extra", {}))
    meta.update({"rover_speed": rover_speed,
                 "drone_metric": "matrix" if "c_d" in doc else drone_metric,
                 "rover_metric": "matrix" if "c_r" in doc else rover_metric})
    inst = Instance(n_d=n_d, n_r=n_r, c_d=c_d, c_r=c_r, w0=w0, wt=wt,
                    e_max=e_max, dest_xy=dest_xy, rl_xy=rl_xy,
                    name=str(doc.get("name", "")), meta=meta)
    if validate:
        problems = check_instance(inst)
        if problems:
            raise SchemaError("invalid instance: " + "; ".join(problems))
    return inst


def load_instance(path: PathLike, metric_closure: bool = False,
                  validate: bool = True) -> Instance:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    return instance_from_dict(doc, metric_closure=metric_closure, validate=validate)


def solution_to_dict(tour: DroneTour) -> dict:
    elements = []
    for el in tour.elements:
        if isinstance(el, RechargingLeg):
            elements.append({"type": "leg", "from": el.from_rl, "to": el.to_rl})
        else:
            elements.append({"type": "op", "start": el.start_rl,
                             "dests": list(el.destinations), "end": el.end_rl})
    return {"makespan": tour.makespan, "elements": elements}


def save_solution(tour: DroneTour, path: PathLike) -> None:
    Path(path).write_text(json.dumps(solution_to_dict(tour), sort_keys=True),
                          encoding="utf-8")


def load_solution(path: PathLike) -> DroneTour:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        elements = []
        for item in doc["elements"]:
            if item["type"] == "leg":
                elements.append(RechargingLeg(int(item["from"]), int(item["to"])))
            elif item["type"] == "op":
                elements.append(Operation(int(item["start"]),
                                          tuple(int(v) for v in item["dests"]),
                                          int(item["end"])))
            else:
                raise SchemaError(f"unknown element type {item['type']!r}")
        return DroneTour(elements=tuple(elements), makespan=float(doc["makespan"]))
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"solution file malformed: {exc}") from exc
