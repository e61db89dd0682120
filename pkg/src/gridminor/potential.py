"""The clustering potential: piecewise rho plus the per-edge charge.

rho grows like 4*alpha*log z below the small/large threshold, then climbs
through geometric plateaus and stays below 1/(2^8 * r0); a cross edge is
charged 1 plus the rho of each endpoint cluster's boundary size. Base-2
logs make exact rationals impossible, so values are floats compared at
EPS = 1e-9; every quantitative drop in the pipeline is orders of
magnitude above that.
"""

from __future__ import annotations

import math
from typing import Sequence

from .errors import PreconditionError
from .params import Params

EPS = 1e-9


def rho(z: int, params: Params) -> float:
    if z < 1:
        raise PreconditionError("rho is defined for z >= 1")
    alpha = float(params.alpha)
    h0 = float(params.h0)
    if z < h0:
        return 4.0 * alpha * math.log2(z) if z > 1 else 0.0
    value = 4.0 * alpha * math.log2(h0) + 4.0 * alpha   # rho(n_0)
    ni = h0
    while True:
        nxt = ni * 1.5
        if z < nxt:
            return value
        ni = nxt
        value += 4.0 * alpha * h0 / ni


def rho_is_bounded(params: Params, zmax: int = 10**6) -> bool:
    bound = float(params.rho_bound())
    probe = 1
    last = 0.0
    while probe <= zmax:
        val = rho(probe, params)
        if val > bound + EPS or val + EPS < last:
            return False
        last = val
        probe = max(probe + 1, int(probe * 1.3))
    return True


def edge_potential(z_u: int, z_v: int, params: Params) -> float:
    return 1.0 + rho(z_u, params) + rho(z_v, params)


def phi_of_partition(g, clusters: Sequence, params: Params) -> float:
    """phi for an arbitrary vertex partition (no acceptability needed)."""
    owner = {}
    for i, c in enumerate(clusters):
        for v in c:
            owner[v] = i
    out_size = [0] * len(clusters)
    cross = []
    for u, v, eid in g.edges():
        cu, cv = owner[u], owner[v]
        if cu != cv:
            out_size[cu] += 1
            out_size[cv] += 1
            cross.append((cu, cv))
    total = 0.0
    for cu, cv in cross:
        total += edge_potential(out_size[cu], out_size[cv], params)
    return total
