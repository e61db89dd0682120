"""Sparsest cut with respect to a terminal set.

Exact mode enumerates all bipartitions (branch-free bitmask loop, bounded
instance size); approx mode is a spectral sweep: order vertices by the
Fiedler vector of the weighted Laplacian and take the best prefix cut.
The sweep stands in for the SDP-based approximation; its quality factor is
a config parameter measured empirically against the exact oracle in tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import FrozenSet, Iterable, List, Optional, Tuple

import numpy as np

from .errors import ExactModeSizeExceeded, PreconditionError
from .graphs import MultiGraph, Vertex, EdgeId, vkey

EXACT_BOUND_DEFAULT = 20


@dataclass(frozen=True)
class CutCertificate:
    side_a: FrozenSet[Vertex]
    side_b: FrozenSet[Vertex]
    crossing_edges: Tuple[EdgeId, ...]
    sparsity: Fraction

    def recheck(self, g: MultiGraph, terminals: Iterable[Vertex]) -> bool:
        ts = set(terminals)
        if self.side_a | self.side_b != g.vertices or self.side_a & self.side_b:
            return False
        crossing = g.edges_between(self.side_a, self.side_b)
        if sorted(crossing, key=vkey) != sorted(self.crossing_edges, key=vkey):
            return False
        denom = min(len(self.side_a & ts), len(self.side_b & ts))
        if denom == 0:
            return False
        return self.sparsity == Fraction(len(crossing), denom)


def _certificate(g: MultiGraph, terminals: set, side_a: set) -> CutCertificate:
    side_b = set(g.vertices) - side_a
    crossing = g.edges_between(side_a, side_b)
    denom = min(len(side_a & terminals), len(side_b & terminals))
    return CutCertificate(frozenset(side_a), frozenset(side_b),
                          tuple(sorted(crossing, key=vkey)),
                          Fraction(len(crossing), denom))


def _canonical_side(g: MultiGraph, terminals: set, side: set) -> set:
    """Of the two sides, the canonical `side_a`: fewer terminals, ties by
    lexicographically smallest sorted vertex tuple."""
    other = set(g.vertices) - side
    ka, kb = len(side & terminals), len(other & terminals)
    key_s = tuple(sorted(side, key=vkey))
    key_o = tuple(sorted(other, key=vkey))
    if (ka, [vkey(v) for v in key_s]) <= (kb, [vkey(v) for v in key_o]):
        return side
    return other


def sparsest_cut_exact(g: MultiGraph, terminals: Iterable[Vertex],
                       bound: int = EXACT_BOUND_DEFAULT) -> Optional[CutCertificate]:
    """Globally minimum-sparsity cut by enumeration; None when no cut puts
    terminals on both sides (then every cut is vacuously sparse-infinite).

    Ties are broken by lexicographically smallest canonical side_a, so the
    result is reproducible.
    """
    ts = set(terminals)
    if not ts:
        raise PreconditionError("sparsest cut needs a nonempty terminal set")
    n = g.n
    if n > bound:
        raise ExactModeSizeExceeded(f"|V|={n} exceeds exact-mode bound {bound}")
    if len(ts) < 2 or n < 2:
        return None
    vs = g.sorted_vertices()
    idx = {v: i for i, v in enumerate(vs)}
    tmask = 0
    for t in ts:
        tmask |= 1 << idx[t]
    tcount = len(ts)
    edge_masks = []
    for u, v, _ in g.edges():
        edge_masks.append((1 << idx[u]) | (1 << idx[v]))
    best: Optional[Tuple[Fraction, Tuple, int]] = None
    # vertex 0 pinned to side A halves the enumeration
    for bits in range(1 << (n - 1)):
        mask = (bits << 1) | 1
        ta = bin(mask & tmask).count("1")
        denom = min(ta, tcount - ta)
        if denom == 0:
            continue
        cut = 0
        for em in edge_masks:
            me = mask & em
            if me != 0 and me != em:
                cut += 1
        sp = Fraction(cut, denom)
        if best is not None and sp > best[0]:
            continue
        side = {vs[i] for i in range(n) if mask >> i & 1}
        canon = _canonical_side(g, ts, side)
        key = (len(canon & ts), [vkey(v) for v in sorted(canon, key=vkey)])
        if best is None or sp < best[0] or (sp == best[0] and key < best[1]):
            best = (sp, key, 0)
            best_side = canon
    if best is None:
        return None
    return _certificate(g, ts, best_side)


def _fiedler_order(g: MultiGraph) -> List[Vertex]:
    vs = g.sorted_vertices()
    n = len(vs)
    idx = {v: i for i, v in enumerate(vs)}
    lap = np.zeros((n, n))
    for u, v, _ in g.edges():
        i, j = idx[u], idx[v]
        lap[i, j] -= 1.0
        lap[j, i] -= 1.0
        lap[i, i] += 1.0
        lap[j, j] += 1.0
    _, vecs = np.linalg.eigh(lap)
    fiedler = vecs[:, 1] if n > 1 else np.zeros(1)
    order = sorted(range(n), key=lambda i: (fiedler[i], vkey(vs[i])))
    return [vs[i] for i in order]


def sparsest_cut_approx(g: MultiGraph, terminals: Iterable[Vertex]) -> Optional[CutCertificate]:
    """Fiedler-sweep cut: best prefix of the spectral ordering.

    Disconnected inputs short-circuit: any component split of the terminals
    is a zero-sparsity cut.
    """
    ts = set(terminals)
    if not ts:
        raise PreconditionError("sparsest cut needs a nonempty terminal set")
    if len(ts) < 2 or g.n < 2:
        return None
    comps = g.components()
    if len(comps) > 1:
        with_t = [c for c in comps if c & ts]
        if len(with_t) >= 2:
            with_t.sort(key=lambda c: (len(c & ts), [vkey(v) for v in sorted(c, key=vkey)]))
            return _certificate(g, ts, _canonical_side(g, ts, set(with_t[0])))
        # all terminals in one component: sweep inside it, rest joins side_b
        core = next(c for c in comps if c & ts)
        sub = g.induced(core)
        cert = sparsest_cut_approx(sub, ts)
        if cert is None:
            return None
        return _certificate(g, ts, _canonical_side(g, ts, set(cert.side_a)))
    order = _fiedler_order(g)
    pos = {v: i for i, v in enumerate(order)}
    cut = 0
    ta = 0
    tcount = len(ts)
    best_i, best_sp = None, None
    # incremental sweep: moving order[i] across the cut flips its edges
    for i, v in enumerate(order):
        delta = 0
        for u, _ in g.incident(v):
            if pos[u] < i:
                delta -= 1
            else:
                delta += 1
        cut += delta
        if v in ts:
            ta += 1
        denom = min(ta, tcount - ta)
        if denom == 0 or i == len(order) - 1:
            continue
        sp = Fraction(cut, denom)
        if best_sp is None or sp < best_sp:
            best_sp, best_i = sp, i
    if best_i is None:
        return None
    side = set(order[: best_i + 1])
    return _certificate(g, ts, _canonical_side(g, ts, side))


def sparsest_cut(g: MultiGraph, terminals: Iterable[Vertex], mode: str = "exact",
                 exact_bound: int = EXACT_BOUND_DEFAULT) -> Optional[CutCertificate]:
    if mode == "exact":
        return sparsest_cut_exact(g, terminals, exact_bound)
    if mode == "approx":
        return sparsest_cut_approx(g, terminals)
    if mode == "auto":
        if g.n <= exact_bound:
            return sparsest_cut_exact(g, terminals, exact_bound)
        return sparsest_cut_approx(g, terminals)
    raise PreconditionError(f"unknown sparsest-cut mode {mode!r}")
