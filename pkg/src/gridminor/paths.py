"""Path bundles: sets of disjoint paths with a declared disjointness mode."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .errors import MalformedBundle
from .flow import FlowProblem, INF
from .graphs import MultiGraph, Vertex, EdgeId, vkey

VERTEX_DISJOINT = "vertex-disjoint"
INTERNALLY_DISJOINT = "internally-disjoint"
EDGE_DISJOINT = "edge-disjoint"

MODES = (VERTEX_DISJOINT, INTERNALLY_DISJOINT, EDGE_DISJOINT)


@dataclass(frozen=True)
class PathBundle:
    """Paths are vertex sequences; single-vertex paths count as empty paths.

    `edge_ids`, when present, gives the witness edge for every step of every
    path, which makes edge-disjointness checkable in multigraphs.
    """

    paths: Tuple[Tuple[Vertex, ...], ...]
    mode: str
    sources: FrozenSet[Vertex]
    sinks: FrozenSet[Vertex]
    edge_ids: Optional[Tuple[Tuple[EdgeId, ...], ...]] = None

    def __len__(self) -> int:
        return len(self.paths)

    def vertices(self) -> FrozenSet[Vertex]:
        return frozenset(v for p in self.paths for v in p)

    def inner_vertices(self) -> FrozenSet[Vertex]:
        out = set()
        for p in self.paths:
            out.update(p[1:-1])
        return frozenset(out)

    def endpoints_in(self, vset: Iterable[Vertex]) -> List[Vertex]:
        vs = set(vset)
        out = []
        for p in self.paths:
            for v in (p[0], p[-1]):
                if v in vs:
                    out.append(v)
        return sorted(set(out), key=vkey)

    def check(self, g: MultiGraph) -> None:
        """Raise MalformedBundle unless every declared invariant holds."""
        if self.mode not in MODES:
            raise MalformedBundle(f"unknown mode {self.mode!r}")
        if self.edge_ids is not None and len(self.edge_ids) != len(self.paths):
            raise MalformedBundle("edge_ids shape mismatch")
        for idx, p in enumerate(self.paths):
            if not p:
                raise MalformedBundle("a path must contain at least one vertex")
            if len(set(p)) != len(p):
                raise MalformedBundle(f"path {idx} is not simple")
            for v in p:
                if v not in g:
                    raise MalformedBundle(f"path {idx} leaves the host graph at {v!r}")
            for j in range(len(p) - 1):
                if self.edge_ids is not None:
                    eid = self.edge_ids[idx][j]
                    u, v = g.endpoints(eid)
                    if {u, v} != {p[j], p[j + 1]}:
                        raise MalformedBundle(f"path {idx} step {j}: edge witness mismatch")
                elif not g.has_edge_between(p[j], p[j + 1]):
                    raise MalformedBundle(f"path {idx} step {j}: no such edge")
        self._check_disjoint()
        if self.edge_ids is None and self.mode == EDGE_DISJOINT:
            self._check_edge_multiplicity(g)

    def _check_disjoint(self) -> None:
        if self.mode == EDGE_DISJOINT:
            if self.edge_ids is not None:
                seen = set()
                for es in self.edge_ids:
                    for e in es:
                        if e in seen:
                            raise MalformedBundle(f"edge {e!r} reused")
                        seen.add(e)
            return
        for i in range(len(self.paths)):
            for j in range(i + 1, len(self.paths)):
                a, b = set(self.paths[i]), set(self.paths[j])
                shared = a & b
                if self.mode == VERTEX_DISJOINT and shared:
                    raise MalformedBundle(
                        f"paths {i},{j} share {sorted(shared, key=vkey)[0]!r}")
                if self.mode == INTERNALLY_DISJOINT:
                    enda = {self.paths[i][0], self.paths[i][-1]}
                    endb = {self.paths[j][0], self.paths[j][-1]}
                    bad = shared - (enda & endb)
                    if bad:
                        raise MalformedBundle(
                            f"paths {i},{j} share inner vertex "
                            f"{sorted(bad, key=vkey)[0]!r}")

    def _check_edge_multiplicity(self, g: MultiGraph) -> None:
        used: Dict[Tuple, int] = {}
        avail: Dict[Tuple, int] = {}
        for u, v, _ in g.edges():
            k = tuple(sorted((u, v), key=vkey))
            avail[k] = avail.get(k, 0) + 1
        for p in self.paths:
            for j in range(len(p) - 1):
                k = tuple(sorted((p[j], p[j + 1]), key=vkey))
                used[k] = used.get(k, 0) + 1
        for k, c in used.items():
            if c > avail.get(k, 0):
                raise MalformedBundle(f"edge between {k} used {c} times")

    def is_valid(self, g: MultiGraph) -> bool:
        try:
            self.check(g)
            return True
        except MalformedBundle:
            return False


def max_disjoint_paths(g: MultiGraph, a: Iterable[Vertex], b: Iterable[Vertex],
                       mode: str = VERTEX_DISJOINT,
                       forbidden: Iterable[Vertex] = (),
                       limit: int = INF) -> PathBundle:
    """Maximum-cardinality bundle of a-b paths under the disjointness mode.

    `forbidden` vertices may not appear anywhere on a path (they are removed
    from the network, so they cannot be inner vertices; callers must keep
    them out of a and b). Cardinality equals the corresponding min cut.
    """
    aset = sorted(set(a), key=vkey)
    bset = sorted(set(b), key=vkey)
    fset = set(forbidden)
    bad = fset & (set(aset) | set(bset))
    if bad:
        raise MalformedBundle(f"forbidden vertex {sorted(bad, key=vkey)[0]!r} is an endpoint")
    if mode == VERTEX_DISJOINT:
        caps, default = None, 1
    elif mode == INTERNALLY_DISJOINT:
        caps = {v: INF for v in aset}
        caps.update({v: INF for v in bset})
        default = 1
    elif mode == EDGE_DISJOINT:
        caps, default = None, INF
    else:
        raise MalformedBundle(f"unknown mode {mode!r}")
    prob = FlowProblem(g, aset, bset, vertex_caps=caps,
                       default_vertex_cap=default, forbidden=fset)
    prob.solve(limit)
    decomposed = prob.paths()
    return PathBundle(paths=tuple(tuple(p) for p, _ in decomposed),
                      mode=mode,
                      sources=frozenset(aset), sinks=frozenset(bset),
                      edge_ids=tuple(tuple(es) for _, es in decomposed))
