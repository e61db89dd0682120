"""Spanning tree with many leaves, or a long 2-path.

A 2-path is an induced path all of whose vertices have degree exactly 2
in the host graph. Leaf count is pushed up by two local improvement moves
until neither applies; if it still falls short, some maximal degree-2 run
of the tree, minus two vertices at each end, is a 2-path of the host.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .errors import PreconditionError
from .graphs import MultiGraph, Vertex, vkey


@dataclass(frozen=True)
class LeafyTree:
    kind: str  # "tree"
    tree_adj: Dict[Vertex, Tuple[Vertex, ...]]
    leaves: Tuple[Vertex, ...]


@dataclass(frozen=True)
class TwoPath:
    kind: str  # "two-path"
    path: Tuple[Vertex, ...]


def _simple_support(g: MultiGraph) -> Dict[Vertex, List[Vertex]]:
    return {v: g.neighbors(v) for v in g.sorted_vertices()}


class _RootedTree:
    def __init__(self, adj: Dict[Vertex, Set[Vertex]], root: Vertex):
        self.root = root
        self.parent: Dict[Vertex, Optional[Vertex]] = {root: None}
        self.children: Dict[Vertex, List[Vertex]] = {v: [] for v in adj}
        order = [root]
        seen = {root}
        i = 0
        while i < len(order):
            x = order[i]
            i += 1
            for u in sorted(adj[x], key=vkey):
                if u not in seen:
                    seen.add(u)
                    self.parent[u] = x
                    self.children[x].append(u)
                    order.append(u)
        self.adj = adj

    def degree(self, v: Vertex) -> int:
        return len(self.children[v]) + (0 if self.parent[v] is None else 1)

    def leaves(self) -> List[Vertex]:
        return [v for v in sorted(self.adj, key=vkey) if self.degree(v) == 1]

    def only_child(self, v: Vertex) -> Optional[Vertex]:
        return self.children[v][0] if len(self.children[v]) == 1 else None

    def in_subtree(self, v: Vertex, u: Vertex) -> bool:
        x: Optional[Vertex] = u
        while x is not None:
            if x == v:
                return True
            x = self.parent[x]
        return False

    def edge_set(self) -> Set[Tuple[Vertex, Vertex]]:
        out = set()
        for v, p in self.parent.items():
            if p is not None:
                out.add((min(v, p, key=vkey), max(v, p, key=vkey)))
        return out


def _try_improve(t: _RootedTree, zadj: Dict[Vertex, List[Vertex]]) -> Optional[Set[Tuple[Vertex, Vertex]]]:
    """One leaf-increasing edge swap, or None when no move applies."""
    edges = t.edge_set()

    def ekey(a, b):
        return (min(a, b, key=vkey), max(a, b, key=vkey))

    for a in sorted(t.adj, key=vkey):
        # move 1: grandparent-grandchild chord across a degree-2 chain
        if t.degree(a) != 2:
            continue
        b = t.only_child(a)
        if b is None or t.degree(b) != 2:
            continue
        c = t.only_child(b)
        if c is None or t.degree(c) != 2:
            continue
        if c in zadj[a]:
            new = set(edges)
            new.discard(ekey(b, c))
            new.add(ekey(a, c))
            return new
    for v in sorted(t.adj, key=vkey):
        # move 2: a chord out of the middle of a degree-2 run of length 5
        if t.degree(v) != 2:
            continue
        v1 = t.parent[v]
        if v1 is None or t.degree(v1) != 2:
            continue
        v2 = t.parent[v1]
        if v2 is None or t.degree(v2) != 2:
            continue
        c1 = t.only_child(v)
        if c1 is None or t.degree(c1) != 2:
            continue
        c2 = t.only_child(c1)
        if c2 is None or t.degree(c2) != 2:
            continue
        for u in sorted(set(zadj[v]), key=vkey):
            if u in (v1, v2, c1, c2, v):
                continue
            new = set(edges)
            if not t.in_subtree(v, u):
                new.discard(ekey(v1, v2))
            else:
                new.discard(ekey(c1, c2))
            new.add(ekey(v, u))
            return new
    return None


def leaves_or_two_path(z: MultiGraph, leaf_target: int, path_target: int):
    """Either a spanning tree with >= leaf_target leaves or a 2-path with
    >= path_target vertices, per the precondition n/(2*leaf_target) >=
    path_target + 5.

    Degrees are measured in the simple support of z (parallel edges
    collapsed); internal callers only hand over simple graphs.
    """
    if leaf_target < 1 or path_target < 1:
        raise PreconditionError("targets must be positive")
    if not z.is_connected():
        raise PreconditionError("host graph must be connected")
    n = z.n
    if n < 2 * leaf_target * (path_target + 5):
        raise PreconditionError(
            f"need n/(2*l) >= p+5: n={n}, l={leaf_target}, p={path_target}")
    zadj = _simple_support(z)
    adj: Dict[Vertex, Set[Vertex]] = {v: set() for v in zadj}
    root = z.sorted_vertices()[0]
    t = _RootedTree({v: set(us) for v, us in zadj.items()}, root)
    # start from the BFS spanning tree
    tree_adj: Dict[Vertex, Set[Vertex]] = {v: set() for v in zadj}
    for v, p in t.parent.items():
        if p is not None:
            tree_adj[v].add(p)
            tree_adj[p].add(v)
    t = _RootedTree(tree_adj, root)

    while len(t.leaves()) < leaf_target:
        before = len(t.leaves())
        new_edges = _try_improve(t, zadj)
        if new_edges is None:
            break
        tree_adj = {v: set() for v in zadj}
        for a, b in new_edges:
            tree_adj[a].add(b)
            tree_adj[b].add(a)
        t = _RootedTree(tree_adj, root)
        after = len(t.leaves())
        assert after > before, "improvement move failed to add a leaf"

    leaves = t.leaves()
    if len(leaves) >= leaf_target:
        return LeafyTree("tree",
                         {v: tuple(sorted(tree_adj[v], key=vkey)) for v in tree_adj},
                         tuple(sorted(leaves, key=vkey)))

    # longest maximal degree-2 run of the final tree
    deg2 = {v for v in zadj if t.degree(v) == 2}
    best: List[Vertex] = []
    seen: Set[Vertex] = set()
    for v in sorted(deg2, key=vkey):
        if v in seen:
            continue
        run = [v]
        seen.add(v)
        for end in (0, 1):
            cur = v
            while True:
                nbrs = [u for u in tree_adj[cur] if u in deg2 and u not in seen]
                if not nbrs:
                    break
                cur = sorted(nbrs, key=vkey)[0]
                seen.add(cur)
                if end == 0:
                    run.insert(0, cur)
                else:
                    run.append(cur)
        # re-walk so the run is an actual path in tree order
        if len(run) > len(best):
            best = run
    trimmed = best[2:-2]
    if len(trimmed) < path_target:
        raise AssertionError("counting bound violated: no long 2-path found")
    for v in trimmed:
        assert len(zadj[v]) == 2, f"2-path vertex {v!r} has host degree {len(zadj[v])}"
    return TwoPath("two-path", tuple(trimmed[:max(path_target, len(trimmed))]))
