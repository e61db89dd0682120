"""Re-routing two families of paths that share a destination.

Given families X and Y of directed simple paths all ending at a sink s,
each family internally disjoint away from s, produce X' <= X with
|X'| >= |X| - |Y| and a replacement path for every Y-path (same endpoints,
edges drawn from the union of the inputs) so that everything in X' + Y'
is pairwise disjoint except at s.

The construction is a stable matching between X-paths and Y-paths in a
complete bipartite multigraph with one parallel edge per shared vertex;
X proposes. Preference orders: an X-path prefers shared vertices closer
to s (reverse path order), a Y-path prefers them closer to its start
(forward order); dummy edges come last, tied dummies by edge id.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import MalformedBundle
from .graphs import Vertex, EdgeId, vkey
from .paths import PathBundle, INTERNALLY_DISJOINT


@dataclass(frozen=True)
class _Edge:
    x: int
    y: int            # index into ys + dummies
    shared: Optional[Vertex]   # None for dummy edges
    key: Tuple

    @property
    def dummy(self) -> bool:
        return self.shared is None


def _check_family(paths: Sequence[Sequence[Vertex]], sink: Vertex, name: str) -> None:
    for i, p in enumerate(paths):
        if not p or p[-1] != sink:
            raise MalformedBundle(f"{name}[{i}] does not end at the sink")
        if len(set(p)) != len(p):
            raise MalformedBundle(f"{name}[{i}] is not simple")
    for i in range(len(paths)):
        for j in range(i + 1, len(paths)):
            shared = set(paths[i]) & set(paths[j])
            if shared - {sink}:
                raise MalformedBundle(f"{name}[{i}] and {name}[{j}] overlap away from the sink")


def reroute_paths(xs: Sequence[Sequence[Vertex]], ys: Sequence[Sequence[Vertex]],
                  sink: Vertex,
                  xs_edges: Optional[Sequence[Sequence[EdgeId]]] = None,
                  ys_edges: Optional[Sequence[Sequence[EdgeId]]] = None,
                  ) -> Tuple[List[int], List[Tuple[List[Vertex], Optional[List[EdgeId]]]]]:
    """Returns (kept x indices, rerouted y paths).

    Rerouted paths come with edge-id witnesses when both input families
    carry them.
    """
    xs = [list(p) for p in xs]
    ys = [list(p) for p in ys]
    _check_family(xs, sink, "xs")
    _check_family(ys, sink, "ys")
    with_edges = xs_edges is not None and ys_edges is not None
    nx, ny = len(xs), len(ys)
    if ny == 0:
        return list(range(nx)), []
    nb = max(nx, ny)   # y side padded with dummy vertices

    xpos = [{v: i for i, v in enumerate(p)} for p in xs]
    ypos = [{v: i for i, v in enumerate(p)} for p in ys]

    edges: List[_Edge] = []
    for xi in range(nx):
        for yi in range(nb):
            if yi < ny:
                shared = sorted((set(xs[xi]) & set(ys[yi])) - {sink}, key=vkey)
                for v in shared:
                    edges.append(_Edge(xi, yi, v, ("v", vkey(v))))
            edges.append(_Edge(xi, yi, None, ("dummy", xi, yi)))

    by_x: List[List[_Edge]] = [[] for _ in range(nx)]
    by_y: List[List[_Edge]] = [[] for _ in range(nb)]
    for e in edges:
        by_x[e.x].append(e)
        by_y[e.y].append(e)

    def xrank(e: _Edge):
        if e.dummy:
            return (1, e.key)
        return (0, -xpos[e.x][e.shared], e.key)

    def yrank(e: _Edge):
        if e.dummy:
            return (1, e.key)
        return (0, ypos[e.y][e.shared], e.key)

    for xi in range(nx):
        by_x[xi].sort(key=xrank)
    yrank_index: Dict[Tuple, int] = {}
    for yi in range(nb):
        by_y[yi].sort(key=yrank)
        for r, e in enumerate(by_y[yi]):
            yrank_index[(e.x, e.y, e.key)] = r

    # deferred acceptance, X proposing
    nxt = [0] * nx
    held: List[Optional[_Edge]] = [None] * nb
    matched_x: List[Optional[_Edge]] = [None] * nx
    free = list(range(nx))
    while free:
        xi = free.pop(0)
        e = by_x[xi][nxt[xi]]
        nxt[xi] += 1
        cur = held[e.y]
        if cur is None:
            held[e.y] = e
            matched_x[xi] = e
        elif yrank_index[(e.x, e.y, e.key)] < yrank_index[(cur.x, cur.y, cur.key)]:
            held[e.y] = e
            matched_x[xi] = e
            matched_x[cur.x] = None
            free.append(cur.x)
        else:
            free.append(xi)

    kept = [xi for xi in range(nx)
            if matched_x[xi] is not None and matched_x[xi].dummy]

    rerouted: List[Tuple[List[Vertex], Optional[List[EdgeId]]]] = []
    for yi in range(ny):
        e = held[yi]
        if e is None or e.dummy:
            out_v = list(ys[yi])
            out_e = list(ys_edges[yi]) if with_edges else None
        else:
            u = e.shared
            cut_y = ypos[yi][u]
            cut_x = xpos[e.x][u]
            out_v = ys[yi][:cut_y] + xs[e.x][cut_x:]
            if with_edges:
                out_e = list(ys_edges[yi][:cut_y]) + list(xs_edges[e.x][cut_x:])
            else:
                out_e = None
        rerouted.append((out_v, out_e))
    return kept, rerouted


def reroute_bundles(xs: PathBundle, ys: PathBundle, sink: Vertex
                    ) -> Tuple[PathBundle, PathBundle]:
    """Bundle-level wrapper over reroute_paths."""
    kept, rerouted = reroute_paths(
        [list(p) for p in xs.paths], [list(p) for p in ys.paths], sink,
        xs_edges=xs.edge_ids, ys_edges=ys.edge_ids)
    kept_paths = tuple(xs.paths[i] for i in kept)
    kept_edges = tuple(xs.edge_ids[i] for i in kept) if xs.edge_ids is not None else None
    new_y_paths = tuple(tuple(p) for p, _ in rerouted)
    new_y_edges = (tuple(tuple(es) for _, es in rerouted)
                   if all(es is not None for _, es in rerouted) and rerouted else None)
    xs2 = PathBundle(kept_paths, INTERNALLY_DISJOINT, xs.sources, xs.sinks, kept_edges)
    ys2 = PathBundle(new_y_paths, INTERNALLY_DISJOINT, ys.sources, ys.sinks, new_y_edges)
    return xs2, ys2
