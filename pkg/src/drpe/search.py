"""Neighborhood search: single-neighborhood VLSN, local search, variable
neighborhood descent, and the route-first-split-second baseline.

vlsn(x, p) finds the best tour whose destination order stays within the
precedence neighborhood of x (two-stage DP). Local search re-centers on the
incumbent's order until no improvement; descent additionally widens p after
every failed attempt and resets it after every success.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional, Sequence

from .model import EPS, BaseCostModel, Instance, SizeGuardError
from .metagraph import solve_meta
from .opsgraph import build_ops_graph
from .oracle import split_optimal
from .reports import SolveReport


@dataclass
class SearchConfig:
    p0: int = 2
    p_max: int = 8
    time_limit: Optional[float] = None
    seed: int = 0
    single_depot_extension: bool = True

    def __post_init__(self):
        if not 1 <= self.p0 <= self.p_max:
            raise ValueError("need 1 <= p0 <= p_max")


def shifted_permutations(x: Sequence[int], p: int) -> list:
    """Wrap-around moves for single-depot tours: bring one of the first p-1
    elements to the tail or one of the last p-1 to the head, keeping the
    combined distance to the sequence boundary below p. Yields at most
    p(p-1) distinct orders."""
    x = list(x)
    n = len(x)
    out, seen = [], {tuple(x)}
    for a in range(min(p - 1, n)):
        for b in range(p - 1 - a):
            if a + b > p - 2:
                break
            y = list(x)
            v = y.pop(a)
            y.insert(len(y) - b, v)
            t = tuple(y)
            if t not in seen:
                seen.add(t)
                out.append(t)
            y = list(x)
            v = y.pop(n - 1 - a)
            y.insert(b, v)
            t = tuple(y)
            if t not in seen:
                seen.add(t)
                out.append(t)
    return out


def vlsn(inst: Instance, x: Sequence[int], p: int,
         model: Optional[object] = None,
         config: Optional[SearchConfig] = None) -> SolveReport:
    """Best tour in the order neighborhood of x at width p.

    For single-depot instances the wrap-around orders excluded by the
    neighborhood are additionally evaluated with the optimal splitter.
    """
    x = tuple(x)
    model = model or BaseCostModel(inst)
    config = config or SearchConfig()
    t0 = time.perf_counter()

    table = build_ops_graph(inst, x, p, model=model)
    best, meta_stats = solve_meta(table, inst, x, p, model=model)

    extra_orders = 0
    if (config.single_depot_extension and inst.w0 == inst.wt and p >= 2):
        for y in shifted_permutations(x, p):
            extra_orders += 1
            cand = split_optimal(y, inst, model=model)
            if cand.makespan < best.makespan - EPS:
                best = cand

    return SolveReport(
        algorithm=f"vlsn(p={p})",
        tour=best,
        makespan=best.makespan,
        neighborhoods=1,
        ops_states=table.stats.nonterminal_states,
        ops_arcs=table.stats.arcs,
        meta_states=meta_stats.states,
        meta_arcs=meta_stats.arcs,
        wall_time=time.perf_counter() - t0,
        extras={"p": p, "shifted_orders": extra_orders,
                "table_entries": table.stats.terminal_entries},
    )


def _accumulate(total: SolveReport, part: SolveReport) -> None:
    total.neighborhoods += part.neighborhoods
    total.ops_states += part.ops_states
    total.ops_arcs += part.ops_arcs
    total.meta_states += part.meta_states
    total.meta_arcs += part.meta_arcs


def vlsn_ls(inst: Instance, x0: Optional[Sequence[int]] = None, p: int = 4,
            model: Optional[object] = None,
            config: Optional[SearchConfig] = None) -> SolveReport:
    """Local search: search the neighborhood, re-center on the incumbent's
    destination order, stop when the value stalls (or the time budget
    runs out between searches)."""
    model = model or BaseCostModel(inst)
    config = config or SearchConfig()
    t0 = time.perf_counter()
    if x0 is None:
        from .baselines import initial_tsp_sequence
        x0 = initial_tsp_sequence(inst)
    x0 = tuple(x0)

    incumbent = split_optimal(x0, inst, model=model)
    report = SolveReport(algorithm=f"vlsn-ls(p={p})", tour=incumbent,
                         makespan=incumbent.makespan, iterations=0)
    center = x0
    while True:
        if config.time_limit is not None and time.perf_counter() - t0 >= config.time_limit:
            break
        try:
            step = vlsn(inst, center, p, model=model, config=config)
        except SizeGuardError:
            report.extras["stopped_by_state_budget"] = True
            break
        report.iterations += 1
        _accumulate(report, step)
        if step.makespan < report.makespan - EPS:
            report.tour = step.tour
            report.makespan = step.makespan
            center = step.tour.destination_order()
        else:
            break
    report.wall_time = time.perf_counter() - t0
    report.extras.update({"p": p, "x0": list(x0)})
    return report


def vlsn_vnd(inst: Instance, x0: Optional[Sequence[int]] = None,
             config: Optional[SearchConfig] = None,
             model: Optional[object] = None) -> SolveReport:
    """Variable neighborhood descent from p0 up to p_max: re-center and fall
    back to p0 after an improvement, widen the neighborhood otherwise."""
    model = model or BaseCostModel(inst)
    config = config or SearchConfig()
    t0 = time.perf_counter()
    if x0 is None:
        from .baselines import initial_tsp_sequence
        x0 = initial_tsp_sequence(inst)
    x0 = tuple(x0)

    incumbent = split_optimal(x0, inst, model=model)
    report = SolveReport(algorithm=f"vlsn-vnd(p0={config.p0},p_max={config.p_max})",
                         tour=incumbent, makespan=incumbent.makespan, iterations=0)
    # at p = n_d the neighborhood already contains every order
    p_stop = min(config.p_max, inst.n_d)
    p = config.p0
    while p <= p_stop:
        if config.time_limit is not None and time.perf_counter() - t0 >= config.time_limit:
            break
        center = report.tour.destination_order()
        try:
            step = vlsn(inst, center, p, model=model, config=config)
        except SizeGuardError:
            report.extras["stopped_by_state_budget"] = True
            break
        report.iterations += 1
        _accumulate(report, step)
        if step.makespan < report.makespan - EPS:
            report.tour = step.tour
            report.makespan = step.makespan
            p = config.p0
        else:
            p += 1
    report.wall_time = time.perf_counter() - t0
    report.extras.update({"p0": config.p0, "p_max": config.p_max, "x0": list(x0)})
    return report


def rts(inst: Instance, model: Optional[object] = None,
        x0: Optional[Sequence[int]] = None) -> SolveReport:
    """Route first, split second: optimal replenishment insertion into the
    shortest-path destination order."""
    t0 = time.perf_counter()
    if x0 is None:
        from .baselines import initial_tsp_sequence
        x0 = initial_tsp_sequence(inst)
    tour = split_optimal(tuple(x0), inst, model=model)
    return SolveReport(algorithm="rts", tour=tour, makespan=tour.makespan,
                       wall_time=time.perf_counter() - t0,
                       extras={"x0": list(x0)})
