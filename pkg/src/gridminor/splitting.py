"""Splitting off: reduce a graph onto its terminal set.

Every non-terminal edge is deleted or contracted (whichever preserves the
terminals' element connectivity), parallel terminal-white edges are
deduplicated, all edges are doubled, and each white blob is split away by
Mader's edge-splitting, leaving a multigraph on the terminals whose edges
carry host-path witnesses. Edges are partitioned into groups so that any
transversal (one edge per group) lifts to internally disjoint host paths.

Connectivity minima over terminal pairs use the triangle property
(lambda and mu both satisfy c(x,z) >= min(c(x,y), c(y,z))), so a single
fixed pivot terminal suffices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .errors import ConnectivityPreconditionFailed, NoAdmissibleSplit, PreconditionError
from .flow import edge_connectivity, element_connectivity
from .graphs import MultiGraph, Vertex, EdgeId, vkey


def min_element_connectivity(g: MultiGraph, terminals: Sequence[Vertex],
                             stop_below: Optional[int] = None) -> int:
    ts = sorted(set(terminals), key=vkey)
    if len(ts) < 2:
        return 1 << 30
    pivot = ts[0]
    best = 1 << 30
    for t in ts[1:]:
        best = min(best, element_connectivity(g, ts, pivot, t))
        if stop_below is not None and best < stop_below:
            return best
    return best


def min_edge_connectivity(g: MultiGraph, terminals: Sequence[Vertex],
                          stop_below: Optional[int] = None) -> int:
    ts = sorted(set(terminals), key=vkey)
    if len(ts) < 2:
        return 1 << 30
    pivot = ts[0]
    best = 1 << 30
    for t in ts[1:]:
        best = min(best, edge_connectivity(g, pivot, t))
        if stop_below is not None and best < stop_below:
            return best
    return best


@dataclass(frozen=True)
class SplitResult:
    hprime: MultiGraph                       # multigraph on the terminal set
    paths: Dict[EdgeId, Tuple[Vertex, ...]]  # edge -> witness path in the host
    path_edges: Dict[EdgeId, Tuple[EdgeId, ...]]  # host edge ids along each witness
    groups: Tuple[Tuple[EdgeId, ...], ...]   # partition of E(hprime), sizes <= kappa
    mu: int

    def lift_transversal(self, choice: Dict[int, EdgeId]) -> List[Tuple[Vertex, ...]]:
        """Witness paths for one chosen edge per group index."""
        out = []
        for gi, eid in sorted(choice.items()):
            if eid not in self.groups[gi]:
                raise PreconditionError(f"edge {eid!r} is not in group {gi}")
            out.append(self.paths[eid])
        return out


def _delete_or_contract(g: MultiGraph, terminals: List[Vertex], mu: int,
                        strict: bool, recheck_every: int
                        ) -> Tuple[MultiGraph, Dict[Vertex, Set[Vertex]]]:
    ts = set(terminals)
    h = g
    blob: Dict[Vertex, Set[Vertex]] = {v: {v} for v in g.vertices if v not in ts}
    wcount = 0
    since_full = 0
    min_pair: Optional[Tuple[Vertex, Vertex]] = None

    def full_ok(graph: MultiGraph) -> bool:
        nonlocal min_pair
        pivot = terminals[0]
        worst = None
        best = 1 << 30
        for t in terminals[1:]:
            c = element_connectivity(graph, terminals, pivot, t)
            if c < best:
                best = c
                worst = (pivot, t)
        min_pair = worst
        return best >= mu

    def quick_ok(graph: MultiGraph) -> bool:
        if strict or min_pair is None:
            return full_ok(graph)
        return element_connectivity(graph, terminals, *min_pair) >= mu

    if not full_ok(h):
        raise ConnectivityPreconditionFailed(
            f"element connectivity below mu={mu} before splitting")
    while True:
        candidates = [eid for u, v, eid in h.edges() if u not in ts and v not in ts]
        if not candidates:
            break
        eid = candidates[0]
        p, q = h.endpoints(eid)
        trial = h.without_edges([eid])
        if quick_ok(trial):
            h = trial
        else:
            name = f"_w{wcount}"
            while name in h.vertices:
                wcount += 1
                name = f"_w{wcount}"
            wcount += 1
            merged = blob.pop(p) | blob.pop(q)
            h, node, _ = h.contract_cluster({p, q}, supernode=name)
            blob[node] = merged
        since_full += 1
        if not strict and since_full >= recheck_every:
            since_full = 0
            if not full_ok(h):
                raise ConnectivityPreconditionFailed("lazy recheck failed")
    return h, blob


def split_off(g: MultiGraph, terminals: Iterable[Vertex], mu: int,
              strict_recheck: Optional[bool] = None,
              recheck_every: int = 16) -> SplitResult:
    """Reduce g onto `terminals` preserving 2*mu edge connectivity.

    The lazy connectivity mode (strict_recheck=False) verifies only the
    currently minimal terminal pair per step with periodic full rechecks;
    a failed recheck falls back to a strict re-run.
    """
    ts = sorted(set(terminals), key=vkey)
    kappa = len(ts)
    if kappa < 2:
        raise PreconditionError("splitting off needs >= 2 terminals")
    if mu < 1:
        raise PreconditionError("mu must be >= 1")
    if strict_recheck is None:
        strict_recheck = g.n <= 24
    try:
        h, blob = _delete_or_contract(g, ts, mu, strict_recheck, recheck_every)
    except ConnectivityPreconditionFailed as exc:
        if "lazy recheck" not in str(exc):
            raise
        h, blob = _delete_or_contract(g, ts, mu, True, recheck_every)

    # deduplicate parallel terminal-white edges (paths may not share the blob)
    keep: Dict[Tuple, EdgeId] = {}
    drop: List[EdgeId] = []
    for u, v, eid in h.edges():
        tu, tv = u in set(ts), v in set(ts)
        if tu and tv:
            continue
        key = (u, v) if tu else (v, u)
        if key in keep:
            drop.append(eid)
        else:
            keep[key] = eid
    h = h.without_edges(drop)

    doubled = h.doubled(tag="+")

    def orig_edge(eid: EdgeId) -> EdgeId:
        return eid[1] if isinstance(eid, tuple) and len(eid) == 2 and eid[0] == "+" else eid

    def host_path(u: Vertex, eu: EdgeId, w: Vertex, ew: EdgeId,
                  bset: Set[Vertex]) -> Tuple[Tuple[Vertex, ...], Tuple[EdgeId, ...]]:
        """u -eu-> blob -...- blob -ew-> w realized in the host graph."""
        xu, yu = g.endpoints(orig_edge(eu))
        x = yu if xu == u else xu
        xw, yw = g.endpoints(orig_edge(ew))
        y = yw if xw == w else xw
        blob_graph = g.induced(bset)
        inner = blob_graph.bfs_path(x, y)
        assert inner is not None, "white blob is not connected in the host"
        eids: List[EdgeId] = [orig_edge(eu)]
        for a, b in zip(inner, inner[1:]):
            eids.append(sorted((e for (wv, e) in blob_graph.incident(a) if wv == b),
                               key=vkey)[0])
        eids.append(orig_edge(ew))
        return tuple([u] + inner + [w]), tuple(eids)

    groups: List[List[EdgeId]] = []
    paths: Dict[EdgeId, Tuple[Vertex, ...]] = {}
    path_edges: Dict[EdgeId, Tuple[EdgeId, ...]] = {}
    work = doubled
    tset = set(ts)
    for u, v, eid in h.edges():
        if u in tset and v in tset:
            groups.append([eid, ("+", eid)])
            paths[eid] = (u, v)
            paths[("+", eid)] = (u, v)
            path_edges[eid] = (eid,)
            path_edges[("+", eid)] = (eid,)

    split_counter = 0
    for node in sorted(blob, key=vkey):
        if node not in work.vertices:
            continue
        bset = blob[node]
        unit: List[EdgeId] = []
        while work.degree(node) > 0:
            inc = work.incident(node)
            assert work.degree(node) % 2 == 0, "white degree must stay even"
            done = False
            for i in range(len(inc)):
                for j in range(i + 1, len(inc)):
                    (u, eu), (w, ew) = inc[i], inc[j]
                    if u == w:
                        trial = work.without_edges([eu, ew])  # loop: drop the pair
                        new_eid = None
                    else:
                        new_eid = ("s", split_counter)
                        trial = work.without_edges([eu, ew]).with_added(
                            edges=[(u, w, new_eid)])
                    if min_edge_connectivity(trial, ts, stop_below=2 * mu) >= 2 * mu:
                        work = trial
                        if new_eid is not None:
                            pv, pe = host_path(u, eu, w, ew, bset)
                            paths[new_eid] = pv
                            path_edges[new_eid] = pe
                            unit.append(new_eid)
                        split_counter += 1
                        done = True
                        break
                if done:
                    break
            if not done:
                raise NoAdmissibleSplit(
                    f"no admissible split at white vertex {node!r} "
                    f"(degree {work.degree(node)})")
        if unit:
            assert len(unit) <= kappa, "split group exceeds kappa"
            groups.append(unit)
    hprime = work.induced(tset)
    assert min_edge_connectivity(hprime, ts, stop_below=2 * mu) >= 2 * mu
    for t in ts:
        assert hprime.degree(t) <= 2 * g.degree(t), "terminal degree bound violated"
    return SplitResult(hprime, paths, path_edges,
                       tuple(tuple(sorted(u, key=vkey)) for u in groups), mu)
