"""Reference implementations used as ground truth in tests and as the
route-first-split-second building block.

``split_optimal`` is the production splitter (optimal replenishment
insertion for a fixed destination order); everything else is deliberately
brute force and guarded by size limits.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import (
    EPS,
    BaseCostModel,
    DroneTour,
    InfeasibleError,
    Instance,
    Operation,
    RechargingLeg,
    SizeGuardError,
    build_tour,
)

ENUMERATION_GUARD = 10  # factorial guard for neighborhood enumeration
BRUTE_FORCE_ND = 7
BRUTE_FORCE_NR = 5
_SCALAR_LIMIT = 520  # n_d * n_r below which the pure-python splitter is faster


@dataclass(frozen=True)
class Permutation:
    """Positions of a reference order's elements within another order.

    sigma[t] is the 1-based position of the reference order's (t+1)-th
    element; inverse[pos] recovers the reference index at that position.
    """

    sigma: tuple
    inverse: tuple

    @classmethod
    def relative(cls, x: Sequence[int], x_prime: Sequence[int]) -> "Permutation":
        if len(x) != len(x_prime) or set(x) != set(x_prime):
            raise ValueError("orders must be permutations of the same destinations")
        pos_in_prime = {v: i + 1 for i, v in enumerate(x_prime)}
        sigma = tuple(pos_in_prime[v] for v in x)
        inverse = [0] * len(x)
        for t, pos in enumerate(sigma):
            inverse[pos - 1] = t + 1
        return cls(sigma=sigma, inverse=tuple(inverse))


def is_bs_neighbor(x: Sequence[int], x_prime: Sequence[int], p: int) -> bool:
    """True iff x_prime keeps every element at most p-1 steps ahead of any
    element it overtakes: whenever j >= i + p, the j-th element of x must
    appear after the i-th."""
    if p < 1:
        raise ValueError("p must be >= 1")
    sigma = Permutation.relative(x, x_prime).sigma
    n = len(sigma)
    for i in range(n):
        for j in range(i + p, n):
            if sigma[j] <= sigma[i]:
                return False
    return True


def enumerate_bs_neighbors(x: Sequence[int], p: int) -> list:
    """All neighbor orders, lexicographic by position in x."""
    x = tuple(x)
    if len(x) > ENUMERATION_GUARD:
        raise SizeGuardError(f"enumeration limited to {ENUMERATION_GUARD} destinations")
    return [perm for perm in itertools.permutations(x) if is_bs_neighbor(x, perm, p)]


def enumerate_valid_operation_sequences(n_d: int, p: int) -> set:
    """Every destination sequence (as positions 0..n_d-1 of the reference
    order) that occurs as a contiguous block of some neighbor order, i.e.
    every ordering that some neighbor tour could fly as one operation."""
    if n_d > 9:
        raise SizeGuardError("operation-sequence enumeration limited to 9 destinations")
    sequences = set()
    for nb in enumerate_bs_neighbors(tuple(range(n_d)), p):
        for a in range(n_d):
            for b in range(a + 1, n_d + 1):
                sequences.add(nb[a:b])
    return sequences


# ---------------------------------------------------------------------------
# Optimal replenishment insertion for a fixed destination order
# ---------------------------------------------------------------------------

def _split_scalar(x, inst, model):
    n_d, n_r = len(x), inst.n_r
    c_r = inst.c_r
    cd_rd, cd_dr, cd_dd = inst.cd_rd, inst.cd_dr, inst.cd_dd
    cap = model.max_flight
    inf = float("inf")

    # f[i][w]: best makespan after visiting the first i destinations and
    # finishing the following recharging leg at RL w.
    f = [[inf] * n_r for _ in range(n_d + 1)]
    f_parent = [[None] * n_r for _ in range(n_d + 1)]
    g = [[inf] * n_r for _ in range(n_d + 1)]  # before the closing leg
    g_parent = [[None] * n_r for _ in range(n_d + 1)]
    for w in range(n_r):
        f[0][w] = float(c_r[inst.w0, w])

    for i in range(n_d):
        fi = f[i]
        for w in range(n_r):
            base = fi[w]
            if base == inf:
                continue
            acc = float(cd_rd[w, x[i]])
            for j in range(i + 1, n_d + 1):
                last = x[j - 1]
                gj = g[j]
                for wp in range(n_r):
                    flight = acc + cd_dr[last, wp]
                    if not model.op_feasible(flight, w, wp):
                        continue
                    cand = base + model.op_makespan(flight, w, wp)
                    if cand < gj[wp]:
                        gj[wp] = cand
                        g_parent[j][wp] = (i, w)
                if acc > cap + EPS:
                    break
                if j < n_d:
                    acc += float(cd_dd[last, x[j]])
        for wp in range(n_r):
            gw = g[i + 1][wp]
            if gw == inf:
                continue
            fj = f[i + 1]
            for w2 in range(n_r):
                cand = gw + c_r[wp, w2]
                if cand < fj[w2]:
                    fj[w2] = cand
                    f_parent[i + 1][w2] = wp
    return f, f_parent, g, g_parent


def _split_vector(x, inst, model):
    n_d, n_r = len(x), inst.n_r
    c_r = inst.c_r
    cd_rd, cd_dr, cd_dd = inst.cd_rd, inst.cd_dr, inst.cd_dd
    cap = model.max_flight
    inf = np.inf

    f = np.full((n_d + 1, n_r), inf)
    f_parent = [[None] * n_r for _ in range(n_d + 1)]
    g = np.full((n_d + 1, n_r), inf)
    g_parent = [[None] * n_r for _ in range(n_d + 1)]
    f[0] = c_r[inst.w0]

    for i in range(n_d):
        for w in range(n_r):
            base = f[i, w]
            if not np.isfinite(base):
                continue
            acc = float(cd_rd[w, x[i]])
            for j in range(i + 1, n_d + 1):
                last = x[j - 1]
                flights = acc + cd_dr[last]
                cand = base + model.makespan_row(flights, w)
                better = cand < g[j]
                if better.any():
                    g[j] = np.where(better, cand, g[j])
                    for wp in np.flatnonzero(better):
                        g_parent[j][wp] = (i, w)
                if acc > cap + EPS:
                    break
                if j < n_d:
                    acc += float(cd_dd[last, x[j]])
        for wp in range(n_r):
            gw = g[i + 1, wp]
            if not np.isfinite(gw):
                continue
            cand = gw + c_r[wp]
            better = cand < f[i + 1]
            if better.any():
                f[i + 1] = np.where(better, cand, f[i + 1])
                for w2 in np.flatnonzero(better):
                    f_parent[i + 1][w2] = wp
    return f, f_parent, g, g_parent


def split_optimal(x: Sequence[int], inst: Instance,
                  model: Optional[object] = None) -> DroneTour:
    """Minimum-makespan tour whose destination order is exactly x.

    Dynamic program over (visited prefix length, current RL); every
    contiguous block of x is considered as one operation followed by one
    (possibly trivial) recharging leg. O(n_d^2 n_r^2).
    """
    x = tuple(x)
    if sorted(x) != list(range(inst.n_d)):
        raise ValueError("x must be a permutation of all destinations")
    model = model or BaseCostModel(inst)

    if inst.n_d * inst.n_r <= _SCALAR_LIMIT:
        f, f_parent, g, g_parent = _split_scalar(x, inst, model)
    else:
        f, f_parent, g, g_parent = _split_vector(x, inst, model)

    if not np.isfinite(f[inst.n_d][inst.wt]):
        raise InfeasibleError("no feasible replenishment insertion for this order")

    # walk the parents back from (n_d, wt)
    rev = []
    j, w = inst.n_d, inst.wt
    while j > 0:
        wp = f_parent[j][w]
        rev.append(RechargingLeg(wp, w))
        i, ws = g_parent[j][wp]
        rev.append(Operation(ws, tuple(x[i:j]), wp))
        j, w = i, ws
    rev.append(RechargingLeg(inst.w0, w))
    return build_tour(inst, reversed(rev), model)


def brute_force_optimum(inst: Instance, model: Optional[object] = None) -> DroneTour:
    """Global optimum by trying every destination order; guarded small sizes."""
    if inst.n_d > BRUTE_FORCE_ND or inst.n_r > BRUTE_FORCE_NR:
        raise SizeGuardError(
            f"brute force limited to n_d<={BRUTE_FORCE_ND}, n_r<={BRUTE_FORCE_NR}")
    best = None
    for perm in itertools.permutations(range(inst.n_d)):
        tour = split_optimal(perm, inst, model)
        if best is None or tour.makespan < best.makespan:
            best = tour
    return best
