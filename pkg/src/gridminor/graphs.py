"""Finite undirected multigraphs with stable edge ids.

Parallel edges are allowed and distinguished by edge id; self-loops are
forbidden. Graphs are immutable after construction: every surgery
(contraction, deletion, induced subgraph) returns a new graph, and edge ids
survive surgery so path witnesses can be lifted across it.
"""

from __future__ import annotations

from typing import Dict, FrozenSet, Hashable, Iterable, Iterator, List, Sequence, Set, Tuple

from .errors import EmptyClusterError, GraphError, UnknownVertexError

Vertex = Hashable
EdgeId = Hashable


def vkey(v):
    """Total order on mixed-type ids (ints, strings, and nested tuples)."""
    if isinstance(v, tuple):
        return ("tuple", tuple(vkey(x) for x in v))
    return (type(v).__name__, v)


class MultiGraph:
    __slots__ = ("_vertices", "_edges", "_adj", "_sorted_vertices")

    def __init__(self, vertices: Iterable[Vertex], edges: Iterable[Tuple[Vertex, Vertex, EdgeId]]):
        vs = frozenset(vertices)
        emap: Dict[EdgeId, Tuple[Vertex, Vertex]] = {}
        adj: Dict[Vertex, List[Tuple[Vertex, EdgeId]]] = {v: [] for v in vs}
        for u, v, eid in edges:
            if u == v:
                raise GraphError(f"self-loop at {u!r} (edge {eid!r})")
            if u not in vs or v not in vs:
                raise UnknownVertexError(f"edge {eid!r} endpoint missing from vertex set")
            if eid in emap:
                raise GraphError(f"duplicate edge id {eid!r}")
            emap[eid] = (u, v)
            adj[u].append((v, eid))
            adj[v].append((u, eid))
        self._vertices = vs
        self._edges = emap
        for v in adj:
            adj[v].sort(key=lambda p: (vkey(p[0]), vkey(p[1])))
        self._adj = adj
        self._sorted_vertices = tuple(sorted(vs, key=vkey))

    # -- basic accessors ---------------------------------------------------

    @property
    def vertices(self) -> FrozenSet[Vertex]:
        return self._vertices

    def sorted_vertices(self) -> Tuple[Vertex, ...]:
        return self._sorted_vertices

    @property
    def n(self) -> int:
        return len(self._vertices)

    @property
    def m(self) -> int:
        return len(self._edges)

    def edge_ids(self) -> List[EdgeId]:
        return sorted(self._edges, key=vkey)

    def edges(self) -> Iterator[Tuple[Vertex, Vertex, EdgeId]]:
        for eid in self.edge_ids():
            u, v = self._edges[eid]
            yield u, v, eid

    def endpoints(self, eid: EdgeId) -> Tuple[Vertex, Vertex]:
        return self._edges[eid]

    def has_edge_id(self, eid: EdgeId) -> bool:
        return eid in self._edges

    def incident(self, v: Vertex) -> List[Tuple[Vertex, EdgeId]]:
        """(neighbor, edge id) pairs at v, deterministic order."""
        return self._adj[v]

    def degree(self, v: Vertex) -> int:
        return len(self._adj[v])

    def max_degree(self) -> int:
        return max((len(a) for a in self._adj.values()), default=0)

    def neighbors(self, v: Vertex) -> List[Vertex]:
        seen: Set[Vertex] = set()
        out = []
        for u, _ in self._adj[v]:
            if u not in seen:
                seen.add(u)
                out.append(u)
        return out

    def has_edge_between(self, u: Vertex, v: Vertex) -> bool:
        return any(w == v for w, _ in self._adj.get(u, ()))

    def edges_between(self, a: Iterable[Vertex], b: Iterable[Vertex]) -> List[EdgeId]:
        """Ids of edges with one endpoint in a and the other in b (a, b disjoint)."""
        aset, bset = set(a), set(b)
        out = []
        for eid in self.edge_ids():
            u, v = self._edges[eid]
            if (u in aset and v in bset) or (u in bset and v in aset):
                out.append(eid)
        return out

    def out_edges(self, s: Iterable[Vertex]) -> List[EdgeId]:
        """Ids of edges with exactly one endpoint in s."""
        sset = set(s)
        out = []
        for v in sorted(sset, key=vkey):
            if v not in self._vertices:
                raise UnknownVertexError(repr(v))
            for u, eid in self._adj[v]:
                if u not in sset:
                    out.append(eid)
        return sorted(set(out), key=vkey)

    def interface(self, s: Iterable[Vertex]) -> List[Vertex]:
        """Vertices of s incident to an edge leaving s."""
        sset = set(s)
        out = []
        for v in sorted(sset, key=vkey):
            if any(u not in sset for u, _ in self._adj[v]):
                out.append(v)
        return out

    def inner_edges(self, s: Iterable[Vertex]) -> List[EdgeId]:
        sset = set(s)
        return [eid for eid, (u, v) in sorted(self._edges.items(), key=lambda kv: vkey(kv[0]))
                if u in sset and v in sset]

    # -- traversal ---------------------------------------------------------

    def component_of(self, v: Vertex) -> Set[Vertex]:
        seen = {v}
        stack = [v]
        while stack:
            x = stack.pop()
            for u, _ in self._adj[x]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return seen

    def components(self) -> List[Set[Vertex]]:
        seen: Set[Vertex] = set()
        comps = []
        for v in self._sorted_vertices:
            if v not in seen:
                c = self.component_of(v)
                seen |= c
                comps.append(c)
        return comps

    def is_connected(self) -> bool:
        if not self._vertices:
            return True
        return len(self.component_of(self._sorted_vertices[0])) == self.n

    def bfs_path(self, a: Vertex, b: Vertex, avoid: Iterable[Vertex] = ()) -> List[Vertex] | None:
        """A shortest a-b path avoiding `avoid` as any vertex, or None."""
        blocked = set(avoid) - {a, b}
        if a == b:
            return [a]
        prev = {a: None}
        queue = [a]
        while queue:
            nxt = []
            for x in queue:
                for u, _ in self._adj[x]:
                    if u in blocked or u in prev:
                        continue
                    prev[u] = x
                    if u == b:
                        path = [b]
                        while path[-1] != a:
                            path.append(prev[path[-1]])
                        path.reverse()
                        return path
                    nxt.append(u)
            queue = nxt
        return None

    def spanning_tree_edges(self, root: Vertex | None = None, order: str = "bfs") -> List[EdgeId]:
        """Edge ids of a spanning forest (single tree when connected)."""
        out: List[EdgeId] = []
        seen: Set[Vertex] = set()
        roots = [root] if root is not None else []
        roots += [v for v in self._sorted_vertices if v != root]
        for r in roots:
            if r in seen:
                continue
            seen.add(r)
            frontier = [r]
            while frontier:
                x = frontier.pop(0 if order == "bfs" else -1)
                for u, eid in self._adj[x]:
                    if u not in seen:
                        seen.add(u)
                        out.append(eid)
                        frontier.append(u)
        return out

    # -- surgeries ---------------------------------------------------------

    def induced(self, keep: Iterable[Vertex]) -> "MultiGraph":
        kset = set(keep)
        missing = kset - self._vertices
        if missing:
            raise UnknownVertexError(repr(sorted(missing, key=vkey)[0]))
        es = [(u, v, eid) for eid, (u, v) in self._edges.items() if u in kset and v in kset]
        return MultiGraph(kset, es)

    def without_edges(self, eids: Iterable[EdgeId]) -> "MultiGraph":
        drop = set(eids)
        es = [(u, v, eid) for eid, (u, v) in self._edges.items() if eid not in drop]
        return MultiGraph(self._vertices, es)

    def without_vertices(self, vs: Iterable[Vertex]) -> "MultiGraph":
        return self.induced(self._vertices - set(vs))

    def with_added(self, vertices: Iterable[Vertex] = (),
                   edges: Iterable[Tuple[Vertex, Vertex, EdgeId]] = ()) -> "MultiGraph":
        vs = set(self._vertices) | set(vertices)
        es = [(u, v, eid) for eid, (u, v) in self._edges.items()]
        es.extend(edges)
        return MultiGraph(vs, es)

    def subgraph_of_edges(self, eids: Iterable[EdgeId],
                          extra_vertices: Iterable[Vertex] = ()) -> "MultiGraph":
        keep = set(eids)
        vs = set(extra_vertices)
        es = []
        for eid in sorted(keep, key=vkey):
            u, v = self._edges[eid]
            vs.add(u)
            vs.add(v)
            es.append((u, v, eid))
        return MultiGraph(vs, es)

    def fresh_vertex(self, stem: str = "c") -> Vertex:
        i = 0
        while f"_{stem}{i}" in self._vertices:
            i += 1
        return f"_{stem}{i}"

    def contract_cluster(self, cluster: Iterable[Vertex],
                         supernode: Vertex | None = None
                         ) -> Tuple["MultiGraph", Vertex, Dict[EdgeId, Tuple[Vertex, Vertex]]]:
        """Contract `cluster` into one supernode.

        Edges inside the cluster are dropped (they would become self-loops);
        edges with exactly one endpoint inside are redirected to the
        supernode and keep their ids. Returns the new graph, the supernode
        id, and a back-map from every surviving redirected edge id to its
        original endpoints, so paths through the supernode can be lifted.
        """
        cset = set(cluster)
        if not cset:
            raise EmptyClusterError("cannot contract an empty cluster")
        missing = cset - self._vertices
        if missing:
            raise UnknownVertexError(repr(sorted(missing, key=vkey)[0]))
        node = supernode if supernode is not None else self.fresh_vertex()
        if node in self._vertices - cset:
            raise GraphError(f"supernode id {node!r} collides with an existing vertex")
        back: Dict[EdgeId, Tuple[Vertex, Vertex]] = {}
        vs = (self._vertices - cset) | {node}
        es = []
        for eid, (u, v) in self._edges.items():
            iu, iv = u in cset, v in cset
            if iu and iv:
                continue
            if iu or iv:
                back[eid] = (u, v)
                es.append((node if iu else u, node if iv else v, eid))
            else:
                es.append((u, v, eid))
        return MultiGraph(vs, es), node, back

    # -- misc ----------------------------------------------------------------

    def doubled(self, tag: str = "+") -> "MultiGraph":
        """Every edge replaced by two parallel copies (ids eid and (tag, eid))."""
        es = []
        for eid, (u, v) in self._edges.items():
            es.append((u, v, eid))
            es.append((u, v, (tag, eid)))
        return MultiGraph(self._vertices, es)

    def __contains__(self, v: Vertex) -> bool:
        return v in self._vertices

    def __repr__(self) -> str:
        return f"MultiGraph(n={self.n}, m={self.m})"

    def __eq__(self, other) -> bool:
        return (isinstance(other, MultiGraph)
                and self._vertices == other._vertices
                and self._edges == other._edges)

    def __hash__(self):
        return hash((self._vertices, tuple(sorted(self._edges.items(), key=lambda kv: vkey(kv[0])))))


def build_graph(edge_list: Sequence[Tuple[Vertex, Vertex]],
                vertices: Iterable[Vertex] = ()) -> MultiGraph:
    """Convenience constructor assigning integer edge ids 0..m-1."""
    vs = set(vertices)
    for u, v in edge_list:
        vs.add(u)
        vs.add(v)
    return MultiGraph(vs, [(u, v, i) for i, (u, v) in enumerate(edge_list)])
