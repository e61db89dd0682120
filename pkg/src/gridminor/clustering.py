"""Acceptable and good clusterings and the potential-decreasing actions.

A clustering is acceptable when terminals sit in singleton clusters, every
small cluster carries a bandwidth certificate and every large cluster is
connected; good when no large cluster remains. The two actions and the
bandwidth decomposition rebuild clusterings as new values and assert their
quantitative potential drops on every invocation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .cuts import sparsest_cut
from .errors import (CutTooLarge, InterfaceTooLarge, NotGoodClustering,
                     NotViolating, PreconditionError)
from .graphs import MultiGraph, Vertex, vkey
from .params import Params
from .potential import EPS, phi_of_partition

UNCONDITIONAL = None   # bandwidth certificate of clusters with <= 1 interface vertex


@dataclass(frozen=True)
class ClusterInfo:
    vertices: FrozenSet[Vertex]
    small: bool
    bw_cert: Optional[Fraction]   # small clusters: certified well-linkedness
    connected: bool


@dataclass(frozen=True)
class Clustering:
    g: MultiGraph
    terminals: FrozenSet[Vertex]
    params: Params
    clusters: Tuple[ClusterInfo, ...]
    phi: float

    def owner_map(self) -> Dict[Vertex, int]:
        out = {}
        for i, c in enumerate(self.clusters):
            for v in c.vertices:
                out[v] = i
        return out

    def cluster_sets(self) -> List[FrozenSet[Vertex]]:
        return [c.vertices for c in self.clusters]

    def large_indices(self) -> List[int]:
        return [i for i, c in enumerate(self.clusters) if not c.small]

    def is_good(self) -> bool:
        return not self.large_indices()

    def check_acceptable(self) -> Optional[str]:
        """None when acceptable, else the violated clause."""
        seen: Set[Vertex] = set()
        for c in self.clusters:
            if seen & c.vertices:
                return "clusters overlap"
            seen |= c.vertices
        if seen != self.g.vertices:
            return "clusters do not cover the graph"
        owner = self.owner_map()
        for t in sorted(self.terminals, key=vkey):
            if self.clusters[owner[t]].vertices != frozenset([t]):
                return f"terminal {t!r} not in a singleton cluster"
        for i, c in enumerate(self.clusters):
            if c.small:
                if c.bw_cert is not UNCONDITIONAL and c.bw_cert < self.params.alpha_bw:
                    return f"small cluster {i} lacks the bandwidth certificate"
            else:
                if not c.connected:
                    return f"large cluster {i} is disconnected"
        return None

    def is_acceptable(self) -> bool:
        return self.check_acceptable() is None


@dataclass(frozen=True)
class ActionRecord:
    action: str
    phi_before: float
    phi_after: float
    detail: Dict

    @property
    def drop(self) -> float:
        return self.phi_before - self.phi_after


@dataclass(frozen=True)
class ViolatingCut:
    x: FrozenSet[Vertex]
    y: FrozenSet[Vertex]
    gamma_x: Tuple[Vertex, ...]
    gamma_y: Tuple[Vertex, ...]
    sparsity: Fraction


def _is_small(g: MultiGraph, vs: Iterable[Vertex], params: Params) -> bool:
    return len(g.out_edges(vs)) < params.h0


def _make(g: MultiGraph, terminals: FrozenSet[Vertex], params: Params,
          infos: Sequence[ClusterInfo]) -> Clustering:
    ordered = tuple(sorted(infos, key=lambda c: [vkey(v) for v in sorted(c.vertices, key=vkey)]))
    phi = phi_of_partition(g, [c.vertices for c in ordered], params)
    return Clustering(g, terminals, params, ordered, phi)


def certify_small_cluster(g: MultiGraph, vs: FrozenSet[Vertex], params: Params,
                          cut_mode: str = "auto", exact_bound: int = 18
                          ) -> List[ClusterInfo]:
    """Bandwidth decomposition of one small cluster into certified pieces.

    Splits along sub-alpha sparse cuts of the interface until every piece
    certifies; disconnected pieces fall apart through zero-sparsity cuts.
    """
    work: List[FrozenSet[Vertex]] = [vs]
    done: List[ClusterInfo] = []
    while work:
        s = work.pop(0)
        sub = g.induced(s)
        for comp in sub.components():
            piece = frozenset(comp)
            gamma = g.interface(piece)
            if len(gamma) <= 1:
                done.append(ClusterInfo(piece, True, UNCONDITIONAL, True))
                continue
            psub = g.induced(piece)
            cert = sparsest_cut(psub, gamma, mode=cut_mode, exact_bound=exact_bound)
            if cert is None or cert.sparsity >= params.alpha:
                used_exact = psub.n <= exact_bound or cut_mode == "exact"
                value = (cert.sparsity if (cert is not None and used_exact)
                         else params.alpha_bw)
                done.append(ClusterInfo(piece, True, Fraction(value), True))
            else:
                work.append(frozenset(cert.side_a))
                work.append(frozenset(cert.side_b))
    return done


def initial_clustering(g: MultiGraph, terminals: Iterable[Vertex], params: Params) -> Clustering:
    """Every vertex its own cluster; good because Delta < h0."""
    if params.h0 <= g.max_degree():
        raise PreconditionError("h0 must exceed the maximum degree")
    infos = [ClusterInfo(frozenset([v]), True, UNCONDITIONAL, True)
             for v in g.sorted_vertices()]
    return _make(g, frozenset(terminals), params, infos)


def _classify_fragment(g: MultiGraph, piece: FrozenSet[Vertex], params: Params,
                       cut_mode: str, exact_bound: int) -> List[ClusterInfo]:
    """Components of a fragment become certified small clusters or large
    connected clusters."""
    out: List[ClusterInfo] = []
    for comp in g.induced(piece).components():
        cf = frozenset(comp)
        if _is_small(g, cf, params):
            out.extend(certify_small_cluster(g, cf, params, cut_mode, exact_bound))
        else:
            out.append(ClusterInfo(cf, False, None, True))
    return out


def bandwidth_decompose(clustering: Clustering, index: int,
                        cut_mode: str = "auto", exact_bound: int = 18
                        ) -> Tuple[Clustering, ActionRecord]:
    c = clustering.clusters[index]
    if not c.small:
        raise PreconditionError("bandwidth decomposition applies to small clusters")
    pieces = certify_small_cluster(clustering.g, c.vertices, clustering.params,
                                   cut_mode, exact_bound)
    infos = [ci for i, ci in enumerate(clustering.clusters) if i != index] + pieces
    new = _make(clustering.g, clustering.terminals, clustering.params, infos)
    assert new.phi <= clustering.phi + EPS, "bandwidth decomposition raised phi"
    rec = ActionRecord("bandwidth_decompose", clustering.phi, new.phi,
                       {"cluster": sorted(c.vertices, key=vkey),
                        "pieces": len(pieces)})
    return new, rec


def find_violating_cut(g: MultiGraph, cluster: Iterable[Vertex], params: Params,
                       cut_mode: str = "auto", exact_bound: int = 18
                       ) -> Optional[ViolatingCut]:
    """Sparsest cut of the cluster interface below alpha, if any.

    None certifies the alpha_bw-bandwidth property (exactly at small scale,
    via the sweep factor otherwise).
    """
    cs = frozenset(cluster)
    gamma = g.interface(cs)
    if len(gamma) >= params.h0:
        raise InterfaceTooLarge(f"|interface| = {len(gamma)} >= h0 = {params.h0}")
    if len(gamma) <= 1:
        return None
    sub = g.induced(cs)
    cert = sparsest_cut(sub, gamma, mode=cut_mode, exact_bound=exact_bound)
    if cert is None or cert.sparsity >= params.alpha:
        return None
    gx = tuple(sorted(set(gamma) & cert.side_a, key=vkey))
    gy = tuple(sorted(set(gamma) & cert.side_b, key=vkey))
    return ViolatingCut(cert.side_a, cert.side_b, gx, gy, cert.sparsity)


def _recheck_violating(g: MultiGraph, cluster: FrozenSet[Vertex], cut: ViolatingCut,
                       params: Params) -> None:
    if cut.x | cut.y != cluster or cut.x & cut.y:
        raise NotViolating("cut sides do not partition the cluster")
    gamma = set(g.interface(cluster))
    if not set(cut.gamma_x) <= gamma & cut.x or not set(cut.gamma_y) <= gamma & cut.y:
        raise NotViolating("witness sets are not interface vertices of their sides")
    if not cut.gamma_x or not cut.gamma_y:
        raise NotViolating("witness sets must be nonempty")
    if len(cut.gamma_x) + len(cut.gamma_y) > params.h0:
        raise NotViolating("witness sets exceed h0")
    crossing = len(g.induced(cluster).edges_between(cut.x, cut.y))
    if not crossing < params.alpha * min(len(cut.gamma_x), len(cut.gamma_y)):
        raise NotViolating("cut is not below the alpha threshold")


def action_partition(clustering: Clustering, index: int, cut: ViolatingCut,
                     cut_mode: str = "auto", exact_bound: int = 18
                     ) -> Tuple[Clustering, ActionRecord]:
    """PARTITION: split a large cluster along a violating cut; small
    fragments are bandwidth-decomposed. phi drops by more than 1/n."""
    c = clustering.clusters[index]
    if c.small:
        raise NotViolating("PARTITION applies to large clusters")
    _recheck_violating(clustering.g, c.vertices, cut, clustering.params)
    g = clustering.g
    infos = [ci for i, ci in enumerate(clustering.clusters) if i != index]
    for side in (cut.x, cut.y):
        infos.extend(_classify_fragment(g, side, clustering.params, cut_mode, exact_bound))
    new = _make(g, clustering.terminals, clustering.params, infos)
    drop = clustering.phi - new.phi
    assert drop >= 1.0 / g.n - EPS, f"PARTITION drop {drop} < 1/n"
    rec = ActionRecord("partition", clustering.phi, new.phi,
                       {"cluster": sorted(c.vertices, key=vkey),
                        "x": sorted(cut.x, key=vkey), "y": sorted(cut.y, key=vkey)})
    return new, rec


def action_separate(clustering: Clustering, index: int, region: Iterable[Vertex],
                    cut_mode: str = "auto", exact_bound: int = 18
                    ) -> Tuple[Clustering, ActionRecord]:
    """SEPARATE: a large cluster is cut away from the terminals by fewer
    than h0/2 edges; the region shatters into components. phi drops by >= 1."""
    g = clustering.g
    params = clustering.params
    c = clustering.clusters[index]
    if c.small:
        raise PreconditionError("SEPARATE applies to large clusters")
    a = set(region)
    if not c.vertices <= a:
        raise PreconditionError("region must contain the cluster")
    if a & clustering.terminals:
        raise PreconditionError("region must avoid the terminals")
    if len(g.out_edges(a)) >= params.h0 / 2:
        raise CutTooLarge(f"|out(region)| = {len(g.out_edges(a))} >= h0/2")
    before_out = len(g.out_edges(a))
    # normalization: small straddling clusters whose remnant would be large
    # are pulled out of the region entirely
    for ci in clustering.clusters:
        if ci.small and (ci.vertices & a) and (ci.vertices - a):
            if not _is_small(g, ci.vertices - a, params):
                a -= ci.vertices
    if not c.vertices <= a:
        raise PreconditionError("normalization removed the separated cluster")
    assert len(g.out_edges(a)) <= before_out + EPS, "normalization grew the cut"
    infos: List[ClusterInfo] = []
    for ci in clustering.clusters:
        if not (ci.vertices & a):
            infos.append(ci)
            continue
        remnant = ci.vertices - a
        if remnant:
            infos.extend(_classify_fragment(g, frozenset(remnant), params,
                                            cut_mode, exact_bound))
    for comp in g.induced(a).components():
        cf = frozenset(comp)
        assert _is_small(g, cf, params), "components of the region must be small"
        infos.extend(certify_small_cluster(g, cf, params, cut_mode, exact_bound))
    new = _make(g, clustering.terminals, params, infos)
    drop = clustering.phi - new.phi
    assert drop >= 1.0 - EPS, f"SEPARATE drop {drop} < 1"
    rec = ActionRecord("separate", clustering.phi, new.phi,
                       {"cluster": sorted(c.vertices, key=vkey),
                        "region": sorted(a, key=vkey)})
    return new, rec


def replace_with_components(clustering: Clustering, region: Iterable[Vertex],
                            cut_mode: str = "auto", exact_bound: int = 18
                            ) -> Tuple[Clustering, ActionRecord]:
    """Rebuild: clusters outside `region` stay; the region is replaced by
    the components of its induced subgraph (small ones decomposed).

    This is the per-part clustering built from a random partition of the
    contracted graph; at paper scale its phi sits at least 1 below the
    source clustering, which the record tracks.
    """
    g = clustering.g
    a = set(region)
    infos: List[ClusterInfo] = []
    for ci in clustering.clusters:
        if ci.vertices & a:
            if not ci.vertices <= a:
                raise PreconditionError("region must be a union of clusters")
        else:
            infos.append(ci)
    infos.extend(_classify_fragment(g, frozenset(a), clustering.params,
                                    cut_mode, exact_bound))
    new = _make(g, clustering.terminals, clustering.params, infos)
    rec = ActionRecord("replace_with_components", clustering.phi, new.phi,
                       {"region_size": len(a)})
    return new, rec


def legal_contracted_graph(clustering: Clustering, check_edge_bound: bool = False
                           ) -> Tuple[MultiGraph, Dict[int, Vertex]]:
    """Contract every cluster of a good clustering into a supernode.

    Terminal singletons keep their own vertex id. When the caller asserts
    1-well-linked terminals, `check_edge_bound` verifies the contracted
    graph minus terminals keeps at least k/3 edges.
    """
    if not clustering.is_good():
        raise NotGoodClustering("legal contracted graphs require good clusterings")
    g = clustering.g
    used = set(g.vertices)
    names: Dict[int, Vertex] = {}
    for i, c in enumerate(clustering.clusters):
        if len(c.vertices) == 1:
            names[i] = next(iter(c.vertices))
        else:
            j = i
            while f"_C{j}" in used:
                j += len(clustering.clusters)
            names[i] = f"_C{j}"
            used.add(names[i])
    owner = clustering.owner_map()
    edges = []
    for u, v, eid in g.edges():
        cu, cv = owner[u], owner[v]
        if cu == cv:
            continue
        edges.append((names[cu], names[cv], eid))
    h = MultiGraph(set(names.values()), edges)
    if check_edge_bound:
        k = len(clustering.terminals)
        inner = h.without_vertices(clustering.terminals)
        assert inner.m >= k / 3.0, \
            f"contracted graph keeps {inner.m} < k/3 = {k / 3:.1f} edges"
    return h, names
