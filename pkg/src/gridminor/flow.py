"""Exact integral max-flow (Dinic) and disjoint-path extraction.

All connectivity oracles in the library reduce to this module: undirected
multigraph edges become arc pairs, vertex capacities are realized by
in/out splitting, and integral flows are decomposed into vertex sequences
with edge-id witnesses. Everything is deterministic given input order.
"""

from __future__ import annotations

from typing import Dict, Hashable, Iterable, List, Optional, Sequence, Set, Tuple

from .graphs import MultiGraph, Vertex, EdgeId, vkey

INF = 1 << 50


class Dinic:
    """Standard Dinic max-flow on an explicit arc list."""

    def __init__(self) -> None:
        self.head: List[int] = []
        self.dest: List[int] = []
        self.cap: List[int] = []
        self.adj: List[List[int]] = []

    def add_node(self) -> int:
        self.adj.append([])
        return len(self.adj) - 1

    def add_arc(self, u: int, v: int, cap: int) -> int:
        a = len(self.dest)
        self.dest.append(v)
        self.cap.append(cap)
        self.adj[u].append(a)
        self.dest.append(u)
        self.cap.append(0)
        self.adj[v].append(a + 1)
        return a

    def flow_on(self, arc: int) -> int:
        return self.cap[arc ^ 1]

    def max_flow(self, s: int, t: int, limit: int = INF) -> int:
        total = 0
        n = len(self.adj)
        while total < limit:
            level = [-1] * n
            level[s] = 0
            queue = [s]
            while queue:
                nxt = []
                for x in queue:
                    for a in self.adj[x]:
                        if self.cap[a] > 0 and level[self.dest[a]] < 0:
                            level[self.dest[a]] = level[x] + 1
                            nxt.append(self.dest[a])
                queue = nxt
            if level[t] < 0:
                break
            it = [0] * n

            def dfs(x: int, pushed: int) -> int:
                if x == t:
                    return pushed
                while it[x] < len(self.adj[x]):
                    a = self.adj[x][it[x]]
                    y = self.dest[a]
                    if self.cap[a] > 0 and level[y] == level[x] + 1:
                        got = dfs(y, min(pushed, self.cap[a]))
                        if got:
                            self.cap[a] -= got
                            self.cap[a ^ 1] += got
                            return got
                    it[x] += 1
                return 0

            while total < limit:
                pushed = dfs(s, limit - total)
                if not pushed:
                    break
                total += pushed
        return total

    def residual_reachable(self, s: int) -> Set[int]:
        seen = {s}
        stack = [s]
        while stack:
            x = stack.pop()
            for a in self.adj[x]:
                y = self.dest[a]
                if self.cap[a] > 0 and y not in seen:
                    seen.add(y)
                    stack.append(y)
        return seen


class FlowProblem:
    """Disjoint a-b paths in a multigraph under a disjointness regime.

    Vertex capacities are realized by splitting every vertex v into
    v_in -> v_out; each undirected edge becomes a pair of opposite arcs
    whose net flow is canceled before decomposition, so each edge carries
    at most one path.
    """

    def __init__(self, g: MultiGraph,
                 sources: Iterable[Vertex], sinks: Iterable[Vertex],
                 vertex_caps: Optional[Dict[Vertex, int]] = None,
                 default_vertex_cap: int = 1,
                 forbidden: Iterable[Vertex] = (),
                 source_cap: int = INF, sink_cap: int = INF,
                 edge_cap: int = 1):
        self.g = g
        self.sources = sorted(set(sources), key=vkey)
        self.sinks = sorted(set(sinks), key=vkey)
        self.forbidden = set(forbidden)
        self.dinic = Dinic()
        self.v_in: Dict[Vertex, int] = {}
        self.v_out: Dict[Vertex, int] = {}
        self.split_arc: Dict[Vertex, int] = {}
        self.edge_arcs: Dict[EdgeId, Tuple[int, int]] = {}
        caps = vertex_caps or {}
        for v in g.sorted_vertices():
            if v in self.forbidden:
                continue
            i = self.dinic.add_node()
            o = self.dinic.add_node()
            self.v_in[v] = i
            self.v_out[v] = o
            self.split_arc[v] = self.dinic.add_arc(i, o, caps.get(v, default_vertex_cap))
        for u, v, eid in g.edges():
            if u in self.forbidden or v in self.forbidden:
                continue
            a1 = self.dinic.add_arc(self.v_out[u], self.v_in[v], edge_cap)
            a2 = self.dinic.add_arc(self.v_out[v], self.v_in[u], edge_cap)
            self.edge_arcs[eid] = (a1, a2)
        self.s = self.dinic.add_node()
        self.t = self.dinic.add_node()
        for v in self.sources:
            self.dinic.add_arc(self.s, self.v_in[v], source_cap)
        for v in self.sinks:
            self.dinic.add_arc(self.v_out[v], self.t, sink_cap)
        self.value: Optional[int] = None

    def solve(self, limit: int = INF) -> int:
        self.value = self.dinic.max_flow(self.s, self.t, limit)
        return self.value

    def _net_edge_flow(self) -> Dict[Vertex, List[Tuple[Vertex, EdgeId]]]:
        """Outgoing net unit flows per vertex, opposite arc pairs canceled."""
        out: Dict[Vertex, List[Tuple[Vertex, EdgeId]]] = {v: [] for v in self.v_in}
        for eid, (a1, a2) in sorted(self.edge_arcs.items(), key=lambda kv: vkey(kv[0])):
            u, v = self.g.endpoints(eid)
            f = self.dinic.flow_on(a1) - self.dinic.flow_on(a2)
            for _ in range(abs(f)):
                if f > 0:
                    out[u].append((v, eid))
                else:
                    out[v].append((u, eid))
        return out

    def paths(self) -> List[Tuple[List[Vertex], List[EdgeId]]]:
        """Decompose the integral flow into `value` many paths.

        Each path is (vertex sequence, edge-id sequence); a source that
        routes flow directly into the sink side at itself yields the empty
        path ([v], []).
        """
        if self.value is None:
            self.solve()
        assert self.value is not None
        net = self._net_edge_flow()
        starts: List[Vertex] = []
        # flow leaving the super-source tells how many paths start at each source
        for v in self.sources:
            pushed = 0
            for a in self.dinic.adj[self.s]:
                if self.dinic.dest[a] == self.v_in[v]:
                    pushed += self.dinic.flow_on(a)
            starts.extend([v] * pushed)
        sink_budget: Dict[Vertex, int] = {}
        for v in self.sinks:
            got = 0
            for a in self.dinic.adj[self.v_out[v]]:
                if self.dinic.dest[a] == self.t:
                    got += self.dinic.flow_on(a)
            sink_budget[v] = got
        result = []
        for v0 in starts:
            pathv = [v0]
            pathe: List[EdgeId] = []
            cur = v0
            # Conservation guarantees the walk always finds an outgoing unit
            # or unspent sink budget, so this loop cannot get stuck.
            while net[cur]:
                nxt, eid = net[cur].pop(0)
                if nxt in pathv:
                    # excise leftover circulation
                    i = pathv.index(nxt)
                    pathv = pathv[: i + 1]
                    pathe = pathe[:i]
                else:
                    pathv.append(nxt)
                    pathe.append(eid)
                cur = nxt
            if sink_budget.get(cur, 0) <= 0:
                raise AssertionError(f"flow decomposition stuck at {cur!r}")
            sink_budget[cur] -= 1
            result.append((pathv, pathe))
        return result

    def cut_vertices(self) -> List[Vertex]:
        """Vertices whose split arc crosses the residual min cut."""
        reach = self.dinic.residual_reachable(self.s)
        out = []
        for v, a in sorted(self.split_arc.items(), key=lambda kv: vkey(kv[0])):
            if self.v_in[v] in reach and self.v_out[v] not in reach:
                out.append(v)
        return out

    def cut_edges(self) -> List[EdgeId]:
        reach = self.dinic.residual_reachable(self.s)
        out = []
        for eid, (a1, a2) in sorted(self.edge_arcs.items(), key=lambda kv: vkey(kv[0])):
            u, v = self.g.endpoints(eid)
            if self.v_out[u] in reach and self.v_in[v] not in reach:
                out.append(eid)
            elif self.v_out[v] in reach and self.v_in[u] not in reach:
                out.append(eid)
        return out


def max_flow_value(g: MultiGraph, sources, sinks,
                   vertex_caps=None, default_vertex_cap=1, forbidden=(),
                   limit: int = INF) -> int:
    p = FlowProblem(g, sources, sinks, vertex_caps, default_vertex_cap, forbidden)
    return p.solve(limit)


def edge_connectivity(g: MultiGraph, s: Vertex, t: Vertex) -> int:
    """lambda(s, t): maximum number of pairwise edge-disjoint s-t paths."""
    return max_flow_value(g, [s], [t], default_vertex_cap=INF)


def vertex_connectivity(g: MultiGraph, s: Vertex, t: Vertex) -> int:
    """Maximum number of internally vertex-disjoint s-t paths."""
    caps = {s: INF, t: INF}
    return max_flow_value(g, [s], [t], vertex_caps=caps, default_vertex_cap=1)


def element_connectivity(g: MultiGraph, terminals: Iterable[Vertex],
                         s: Vertex, t: Vertex) -> int:
    """mu(s, t): paths pairwise disjoint in edges and non-terminal vertices."""
    caps = {v: INF for v in terminals}
    caps[s] = INF
    caps[t] = INF
    return max_flow_value(g, [s], [t], vertex_caps=caps, default_vertex_cap=1)


def terminal_element_connectivity(g: MultiGraph, terminals: Sequence[Vertex]) -> int:
    """mu over all terminal pairs (min)."""
    ts = sorted(set(terminals), key=vkey)
    if len(ts) < 2:
        return INF
    best = INF
    for i in range(len(ts)):
        for j in range(i + 1, len(ts)):
            best = min(best, element_connectivity(g, ts, ts[i], ts[j]))
            if best == 0:
                return 0
    return best
