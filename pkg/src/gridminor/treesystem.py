"""Tree-of-sets systems and the meta-tree construction.

The outer loop maintains a good clustering; each phase randomly partitions
the contracted graph, derives one acceptable clustering per part, and runs
iterations that either produce a tree-of-sets system or return a
certificate (violating partition / separating cut) that drives a
potential-decreasing clusterer action.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .boost import BoostConfig, select_linked_families
from .clustering import (ActionRecord, Clustering, ViolatingCut, action_partition,
                         action_separate, find_violating_cut, initial_clustering,
                         legal_contracted_graph, replace_with_components)
from .errors import (ConnectivityPreconditionFailed, NoDegree3Tree, PreconditionError,
                     RetriesExhausted)
from .flow import INF, FlowProblem
from .graphs import MultiGraph, Vertex, EdgeId, vkey
from .params import Params
from .paths import PathBundle, VERTEX_DISJOINT, max_disjoint_paths
from .splitting import SplitResult, min_element_connectivity, split_off
from .welllinked import PairVerdict, are_linked, is_node_well_linked


@dataclass(frozen=True)
class TreeOfSets:
    clusters: Tuple[FrozenSet[Vertex], ...]
    skeleton: Tuple[Tuple[int, int], ...]          # edges over cluster indices
    bundles: Dict[Tuple[int, int], PathBundle]     # skeleton edge -> direct paths
    alpha_bw: Fraction
    strong: bool = False

    @property
    def width(self) -> int:
        return len(self.clusters)

    @property
    def height(self) -> int:
        if not self.bundles:
            return 0
        return min(len(b) for b in self.bundles.values())

    def skeleton_degrees(self) -> Dict[int, int]:
        deg = {i: 0 for i in range(len(self.clusters))}
        for a, b in self.skeleton:
            deg[a] += 1
            deg[b] += 1
        return deg

    def endpoint_sets(self) -> Dict[Tuple[int, int], Dict[int, Tuple[Vertex, ...]]]:
        """Per skeleton edge, the bundle endpoints inside each of its two clusters."""
        out = {}
        for (a, b), bundle in self.bundles.items():
            ca, cb = self.clusters[a], self.clusters[b]
            ga = [p[0] if p[0] in ca else p[-1] for p in bundle.paths]
            gb = [p[0] if p[0] in cb else p[-1] for p in bundle.paths]
            out[(a, b)] = {a: tuple(ga), b: tuple(gb)}
        return out

    def union_graph(self, g: MultiGraph) -> MultiGraph:
        eids: Set[EdgeId] = set()
        vs: Set[Vertex] = set()
        for c in self.clusters:
            vs |= c
            eids.update(g.inner_edges(c))
        for bundle in self.bundles.values():
            if bundle.edge_ids:
                for es in bundle.edge_ids:
                    eids.update(es)
            for p in bundle.paths:
                vs.update(p)
        return g.subgraph_of_edges(eids, extra_vertices=vs)


def validate_tree_of_sets(g: MultiGraph, t: TreeOfSets, params: Params,
                          terminals: Iterable[Vertex] = (),
                          cut_mode: str = "auto", exact_bound: int = 18
                          ) -> List[str]:
    """Invariant suite; returns the list of violated clauses (empty = pass)."""
    problems: List[str] = []
    ts = set(terminals)
    seen: Set[Vertex] = set()
    for i, c in enumerate(t.clusters):
        if seen & c:
            problems.append(f"cluster {i} overlaps another cluster")
        seen |= c
        if ts & c:
            problems.append(f"cluster {i} contains terminals")
        if not g.induced(c).is_connected():
            problems.append(f"cluster {i} is disconnected")
    deg = t.skeleton_degrees()
    if any(d > 3 for d in deg.values()):
        problems.append("skeleton degree exceeds 3")
    if len(t.skeleton) != len(t.clusters) - 1:
        problems.append("skeleton is not a tree")
    else:
        comp = {i: i for i in range(len(t.clusters))}

        def find(x):
            while comp[x] != x:
                comp[x] = comp[comp[x]]
                x = comp[x]
            return x

        for a, b in t.skeleton:
            ra, rb = find(a), find(b)
            if ra == rb:
                problems.append("skeleton contains a cycle")
                break
            comp[ra] = rb
    allv: Set[Vertex] = set()
    cluster_union: Set[Vertex] = set()
    for c in t.clusters:
        cluster_union |= c
    for (a, b), bundle in t.bundles.items():
        if bundle.edge_ids is None:
            problems.append(f"bundle {(a, b)} lacks edge witnesses")
            continue
        try:
            bundle.check(g)
        except Exception as exc:   # malformed bundle details
            problems.append(f"bundle {(a, b)}: {exc}")
            continue
        for p in bundle.paths:
            if not (p[0] in t.clusters[a] and p[-1] in t.clusters[b]) and \
               not (p[0] in t.clusters[b] and p[-1] in t.clusters[a]):
                problems.append(f"bundle {(a, b)}: path endpoints in wrong clusters")
            for v in p[1:-1]:
                if v in cluster_union:
                    problems.append(f"bundle {(a, b)}: cluster vertex {v!r} is interior")
                    break
            shared = set(p) & allv
            if shared:
                problems.append(f"bundle {(a, b)}: path reuses {sorted(shared, key=vkey)[0]!r}")
            allv.update(p)
    gstar = t.union_graph(g)
    for i, c in enumerate(t.clusters):
        gamma = gstar.interface(c)
        if len(gamma) <= 1:
            continue
        try:
            cut = find_violating_cut(gstar, c, params, cut_mode, exact_bound)
        except PreconditionError:
            cut = None   # interface larger than h0: certificate out of scope
        if cut is not None:
            problems.append(f"cluster {i} fails the bandwidth certificate")
    return problems


def verify_strongness(g: MultiGraph, t: TreeOfSets,
                      nwl_bound: int = 6, linked_bound: int = 5,
                      rng: Optional[random.Random] = None,
                      sample_rounds: int = 60) -> List[str]:
    problems = []
    rng = rng or random.Random(0)
    eps = t.endpoint_sets()
    incident: Dict[int, List[Tuple[Tuple[int, int], Tuple[Vertex, ...]]]] = {}
    for (a, b), sides in eps.items():
        incident.setdefault(a, []).append(((a, b), sides[a]))
        incident.setdefault(b, []).append(((a, b), sides[b]))
    for i, lst in incident.items():
        sub = g.induced(t.clusters[i])
        for (e, gamma) in lst:
            v = is_node_well_linked(sub, gamma, bound=nwl_bound, rng=rng,
                                    sample_rounds=sample_rounds)
            if not v.holds:
                problems.append(f"cluster {i}: endpoints of edge {e} not node-well-linked")
        for x in range(len(lst)):
            for y in range(x + 1, len(lst)):
                va = are_linked(sub, lst[x][1], lst[y][1], bound=linked_bound,
                                rng=rng, sample_rounds=sample_rounds)
                if not va.holds:
                    problems.append(f"cluster {i}: edges {lst[x][0]} and {lst[y][0]} not linked")
    return problems


# ---------------------------------------------------------------------------


def random_terminal_partition(contracted: MultiGraph, terminals: Iterable[Vertex],
                              r0: int, rng: random.Random,
                              retries: int = 200) -> List[Set[Vertex]]:
    """Uniform partition of the non-terminal supernodes into r0 parts with
    |out(X_j)| < 10m/r0 and |E(X_j)| >= m/(2 r0^2); resampled until both
    bounds verify exactly."""
    ts = set(terminals)
    pool = [v for v in contracted.sorted_vertices() if v not in ts]
    inner = contracted.without_vertices(ts)
    m = inner.m
    if r0 == 1:
        return [set(pool)]
    for _ in range(retries):
        parts: List[Set[Vertex]] = [set() for _ in range(r0)]
        for v in pool:
            parts[rng.randrange(r0)].add(v)
        ok = True
        for p in parts:
            if not p:
                ok = False
                break
            if len(contracted.out_edges(p)) >= 10 * m / r0:
                ok = False
                break
            if len(inner.inner_edges(p)) < m / (2 * r0 * r0):
                ok = False
                break
        if ok:
            return parts
    raise RetriesExhausted(f"no random partition met the bounds in {retries} tries")


def degree3_spanning_tree(z: MultiGraph, capacities: Optional[Dict[Tuple, int]] = None,
                          require_entry_bounds: bool = True,
                          rng: Optional[random.Random] = None
                          ) -> Tuple[List[Tuple[Vertex, Vertex]], Dict]:
    """Spanning tree of max degree <= 3 over z's simple support, plus the
    fractional certificate x_e = ((r-1)/r) (c(e)/C(v) + c(e)/C(u)).

    Entry bounds (capacity window and pairwise flow) witness feasibility of
    the LP; the tree itself comes from greedy DFS attempts with an exact
    branch-and-bound fallback.
    """
    rng = rng or random.Random(0)
    vs = z.sorted_vertices()
    r = len(vs)
    if r == 0:
        raise PreconditionError("empty graph")
    if r == 1:
        return [], {"x": {}, "r": 1}
    caps: Dict[Tuple, int] = {}
    for u, v, _ in z.edges():
        k = tuple(sorted((u, v), key=vkey))
        caps[k] = caps.get(k, 0) + 1
    if capacities:
        caps = dict(capacities)
    cv = {v: 0 for v in vs}
    for (u, v), c in caps.items():
        cv[u] += c
        cv[v] += c
    ell = max(cv.values())
    entry = {"ell": ell, "capacity_window_ok": all(
        cv[v] >= (1 - 1 / r**2) * ell for v in vs)}
    if require_entry_bounds and not entry["capacity_window_ok"]:
        raise PreconditionError("capacity window (1-1/r^2)ell <= C(v) <= ell violated")
    x = {}
    for (u, v), c in caps.items():
        x[(u, v)] = (r - 1) / r * (c / cv[v] + c / cv[u])
    cert = {"x": x, "r": r, "sum": sum(x.values()), "ell": ell}

    simple_adj: Dict[Vertex, List[Vertex]] = {v: [] for v in vs}
    for (u, v) in caps:
        simple_adj[u].append(v)
        simple_adj[v].append(u)
    for v in simple_adj:
        simple_adj[v].sort(key=vkey)

    def greedy_attempt(seed: int) -> Optional[List[Tuple[Vertex, Vertex]]]:
        local = random.Random(seed)
        order = list(vs)
        local.shuffle(order)
        root = order[0]
        deg = {v: 0 for v in vs}
        seen = {root}
        edges: List[Tuple[Vertex, Vertex]] = []
        stack = [root]
        while stack:
            xv = stack[-1]
            nxt = [u for u in simple_adj[xv] if u not in seen]
            if not nxt or deg[xv] >= 3:
                stack.pop()
                continue
            u = min(nxt, key=lambda w: (len([q for q in simple_adj[w] if q not in seen]), vkey(w)))
            seen.add(u)
            edges.append((xv, u))
            deg[xv] += 1
            deg[u] += 1
            stack.append(u)
        return edges if len(seen) == r else None

    for attempt in range(8):
        tree = greedy_attempt(attempt)
        if tree is not None and all(
                sum(1 for (a, b) in tree if v in (a, b)) <= 3 for v in vs):
            return tree, cert

    # exact branch and bound over the simple support
    all_edges = sorted(caps.keys(), key=lambda e: (vkey(e[0]), vkey(e[1])))
    best: Optional[List[Tuple[Vertex, Vertex]]] = None

    def bb(idx: int, chosen: List[Tuple[Vertex, Vertex]], parent: Dict, deg: Dict):
        nonlocal best
        if best is not None:
            return
        if len(chosen) == r - 1:
            best = list(chosen)
            return
        if idx >= len(all_edges):
            return
        if len(all_edges) - idx < (r - 1) - len(chosen):
            return

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        u, v = all_edges[idx]
        ru, rv = find(u), find(v)
        if ru != rv and deg[u] < 3 and deg[v] < 3:
            parent2 = dict(parent)
            deg2 = dict(deg)
            parent2[ru] = rv
            deg2[u] += 1
            deg2[v] += 1
            bb(idx + 1, chosen + [(u, v)], parent2, deg2)
        bb(idx + 1, chosen, parent, deg)

    bb(0, [], {v: v for v in vs}, {v: 0 for v in vs})
    if best is None:
        raise NoDegree3Tree("no spanning tree of maximum degree 3 exists")
    return best, cert


def verify_degree3_certificate(z: MultiGraph, cert: Dict, tol: float = 1e-9) -> List[str]:
    """The three LP constraint families for the fractional solution."""
    problems = []
    x = cert["x"]
    r = cert["r"]
    if abs(sum(x.values()) - (r - 1)) > tol:
        problems.append("sum x_e != |V| - 1")
    vs = z.sorted_vertices()
    idx = {v: i for i, v in enumerate(vs)}
    inc: Dict[Vertex, float] = {v: 0.0 for v in vs}
    for (u, v), val in x.items():
        inc[u] += val
        inc[v] += val
    for v in vs:
        if inc[v] > 2 + tol:
            problems.append(f"fractional degree of {v!r} exceeds 2")
    # subset constraints by bitmask DP over the simple support
    n = len(vs)
    if n <= 20:
        adj_mask = [0] * n
        weight: Dict[Tuple[int, int], float] = {}
        for (u, v), val in x.items():
            iu, iv = idx[u], idx[v]
            adj_mask[iu] |= 1 << iv
            adj_mask[iv] |= 1 << iu
            weight[(min(iu, iv), max(iu, iv))] = val
        inside = [0.0] * (1 << n)
        for mask in range(1, 1 << n):
            low = (mask & -mask).bit_length() - 1
            rest = mask ^ (1 << low)
            extra = 0.0
            nb = adj_mask[low] & rest
            while nb:
                j = (nb & -nb).bit_length() - 1
                extra += weight[(min(low, j), max(low, j))]
                nb &= nb - 1
            inside[mask] = inside[rest] + extra
            size = mask.bit_count()
            if size >= 2 and inside[mask] > size - 1 + tol:
                problems.append(f"subset constraint violated at mask {mask:#x}")
                break
    return problems


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Progress:
    """A failed iteration's certificate, driving a clusterer action."""
    kind: str                      # "separate" | "partition"
    part: int                      # which acceptable clustering to act on
    cluster: FrozenSet[Vertex]
    region: Optional[FrozenSet[Vertex]] = None   # separate: region A
    cut: Optional[ViolatingCut] = None           # partition: the witness


@dataclass
class BuildLog:
    events: List[Dict] = field(default_factory=list)

    def add(self, kind: str, **info) -> None:
        self.events.append({"event": kind, **info})


def _flow_to_terminals(g: MultiGraph, cluster: FrozenSet[Vertex],
                       terminals: Set[Vertex], demand: int
                       ) -> Tuple[int, Optional[Set[Vertex]]]:
    """Edge-disjoint flow from the cluster to the terminals; on shortfall,
    returns the source side of the min cut as a separating region."""
    prob = FlowProblem(g, cluster, terminals, default_vertex_cap=INF)
    val = prob.solve(limit=demand)
    if val >= demand:
        return val, None
    reach = prob.dinic.residual_reachable(prob.s)
    region = {v for v in g.vertices
              if v not in terminals and prob.v_in.get(v) in reach}
    region |= set(cluster)
    assert len(g.out_edges(region)) == val, "min-cut region mismatch"
    return val, region


def _lift_path(g: MultiGraph, clusters: Sequence[FrozenSet[Vertex]],
               names_inv: Dict[Vertex, int],
               pv: Tuple[Vertex, ...], pe: Tuple[EdgeId, ...]
               ) -> Tuple[Tuple[Vertex, ...], Tuple[EdgeId, ...]]:
    """Replace supernode endpoints of a contracted-graph path by the host
    endpoints of its first/last edges."""
    verts = list(pv)
    if verts[0] in names_inv:
        u, v = g.endpoints(pe[0])
        verts[0] = u if u in clusters[names_inv[pv[0]]] else v
    if verts[-1] in names_inv:
        u, v = g.endpoints(pe[-1])
        verts[-1] = u if u in clusters[names_inv[pv[-1]]] else v
    return tuple(verts), tuple(pe)


def _tree_diameter_path(adj: Dict[Vertex, List[Vertex]], root: Vertex) -> List[Vertex]:
    def far(x):
        prev = {x: None}
        order = [x]
        i = 0
        while i < len(order):
            y = order[i]
            i += 1
            for u in adj[y]:
                if u not in prev:
                    prev[u] = y
                    order.append(u)
        end = order[-1]
        path = [end]
        while prev[path[-1]] is not None:
            path.append(prev[path[-1]])
        return path
    a = far(root)[0]
    return far(a)


@dataclass
class TreeBuildConfig:
    cut_mode: str = "auto"
    exact_bound: int = 18
    max_phases: int = 12
    max_iterations: int = 60
    partition_retries: int = 60
    transversal_retries: int = 20
    boost: BoostConfig = field(default_factory=BoostConfig)
    case1_min_width: int = 2
    mu_headroom: int = 4   # extra element connectivity feeding bundle height


def iteration_once(g: MultiGraph, terminals: Set[Vertex],
                   routers: List[Tuple[int, FrozenSet[Vertex]]],
                   params: Params, cfg: TreeBuildConfig,
                   rng: random.Random, log: BuildLog):
    """One attempt to build a tree-of-sets system from candidate routers.

    Returns a TreeOfSets or a Progress certificate.
    """
    demand = math.ceil(float(params.h0) / 2)
    for part, cluster in routers:
        val, region = _flow_to_terminals(g, cluster, terminals, demand=demand)
        if region is not None:
            log.add("separate_certificate", part=part, flow=val)
            return Progress("separate", part, cluster, region=frozenset(region))
    clusters = [c for _, c in routers]
    work = g
    names: Dict[int, Vertex] = {}
    for i, c in enumerate(clusters):
        work, node, _ = work.contract_cluster(c, supernode=f"_R{i}")
        names[i] = node
    names_inv = {v: i for i, v in names.items()}
    tnodes = sorted(names.values(), key=vkey)
    mu_target = max(1, int(float(params.h0) // (6 * params.delta)))
    mu_goal = max(mu_target, params.h * cfg.mu_headroom)
    mu_measured = min_element_connectivity(work, tnodes)
    if mu_measured < 1:
        raise ConnectivityPreconditionFailed(
            "routers are element-disconnected; the host graph must be connected")
    mu = min(mu_measured, mu_goal)
    log.add("split_off", mu=mu, terminals=len(tnodes))
    split = split_off(work, tnodes, mu)
    # parallel edges in H', and how many of them sit in distinct groups
    # (only group-distinct parallels survive a transversal)
    multi: Dict[Tuple[int, int], List[EdgeId]] = {}
    for u, v, eid in split.hprime.edges():
        key = tuple(sorted((names_inv[u], names_inv[v])))
        multi.setdefault(key, []).append(eid)
    group_of: Dict[EdgeId, int] = {}
    for gi, grp in enumerate(split.groups):
        for e in grp:
            group_of[e] = gi
    dist = {k: len({group_of[e] for e in es}) for k, es in multi.items()}
    h1_formula = max(1, int(float(params.h0) // (2 * params.delta * params.r0 ** 2)))

    def skeleton_at(threshold: int):
        zadj: Dict[int, List[int]] = {i: [] for i in range(len(clusters))}
        for (a, b), d in dist.items():
            if d >= threshold:
                zadj[a].append(b)
                zadj[b].append(a)
        comp = {0}
        stack = [0]
        while stack:
            x = stack.pop()
            for u in zadj[x]:
                if u not in comp:
                    comp.add(u)
                    stack.append(u)
        if len(comp) < len(clusters):
            return None, None, None
        # DFS spanning tree: deep root paths favor Case 1
        parent: Dict[int, Optional[int]] = {0: None}
        visited: Set[int] = set()
        stack = [0]
        while stack:
            x = stack.pop()
            if x in visited:
                continue
            visited.add(x)
            for u in sorted(zadj[x], reverse=True):
                if u not in visited:
                    parent[u] = x
                    stack.append(u)
        tree_adj: Dict[int, List[int]] = {i: [] for i in range(len(clusters))}
        for v, p in parent.items():
            if p is not None:
                tree_adj[v].append(p)
                tree_adj[p].append(v)
        diameter = _tree_diameter_path(tree_adj, 0)
        return zadj, tree_adj, diameter

    # the paper's threshold guarantees connectivity at scale; at desk scale
    # the height target is scanned downward until Z stays connected
    target_r = min(params.r, len(clusters))
    best = None
    for threshold in range(max(params.h, h1_formula), 0, -1):
        zadj, tree_adj, diameter = skeleton_at(threshold)
        if zadj is None:
            continue
        key = (min(len(diameter), target_r), threshold)
        if best is None or key > best[0]:
            best = (key, threshold, zadj, tree_adj, diameter)
        if len(diameter) >= target_r and threshold >= params.h:
            break
    assert best is not None, "threshold graph Z disconnected even at 1"
    _, threshold, zadj, tree_adj, diameter = best
    n_leaves = sum(1 for i in tree_adj if len(tree_adj[i]) == 1)
    log.add("skeleton", leaves=n_leaves, longest_path=len(diameter),
            threshold=threshold)

    if len(diameter) >= target_r:
        return _case1_path(g, clusters, names_inv, split, multi,
                           diameter[:target_r], params, cfg, rng, log)
    if n_leaves >= target_r:
        return _case2_leaves(g, clusters, names, names_inv, split, multi, tree_adj,
                             params, cfg, rng, log, routers)
    # desk fallback: skeleton too small for the target on both counts; take
    # the longest available path (width recorded by the caller)
    return _case1_path(g, clusters, names_inv, split, multi, diameter,
                       params, cfg, rng, log)


def _pick_transversal(groups: Sequence[Sequence[EdgeId]],
                      wanted: List[List[EdgeId]], target: int, surplus: int,
                      rng: random.Random, retries: int) -> Tuple[List[Set[EdgeId]], int]:
    """One edge per group, giving every wanted set the largest achievable
    uniform quota t <= target, plus up to `surplus` spare edges per set.

    Random transversal sampling first (the construction's own move); when
    sampling misses, the group-to-bundle assignment is solved exactly as a
    b-matching flow. Returns (selections, achieved uniform quota).
    """
    group_of: Dict[EdgeId, int] = {}
    for gi, grp in enumerate(groups):
        for e in grp:
            group_of[e] = gi
    for _ in range(retries):
        star = {gi: rng.choice(list(grp)) for gi, grp in enumerate(groups)}
        chosen = set(star.values())
        sel = [set(w) & chosen for w in wanted]
        if all(len(s) >= target for s in sel):
            return sel, target

    from .flow import Dinic
    nb = len(wanted)
    pair_edges: Dict[Tuple[int, int], List[EdgeId]] = {}
    for i, w in enumerate(wanted):
        for e in w:
            pair_edges.setdefault((group_of[e], i), []).append(e)
    gids = sorted({gi for gi, _ in pair_edges})

    def build(quota: int):
        d = Dinic()
        s = d.add_node()
        t = d.add_node()
        gnode = {gi: d.add_node() for gi in gids}
        bnode = [d.add_node() for _ in range(nb)]
        for gi in gids:
            d.add_arc(s, gnode[gi], 1)
        arcs = {}
        for (gi, i), es in sorted(pair_edges.items()):
            arcs[(gi, i)] = d.add_arc(gnode[gi], bnode[i], 1)
        sink_arcs = [d.add_arc(bnode[i], t, quota) for i in range(nb)]
        return d, s, t, arcs, sink_arcs

    best_t = 0
    for t_try in range(min(target, len(gids)), 0, -1):
        d, s, t, arcs, sink_arcs = build(t_try)
        if d.max_flow(s, t) >= t_try * nb:
            best_t = t_try
            break
    if best_t == 0:
        return [set() for _ in wanted], 0
    d, s, t, arcs, sink_arcs = build(best_t)
    d.max_flow(s, t)
    for a in sink_arcs:          # raise bundle caps and squeeze out extras
        d.cap[a] += surplus
    d.max_flow(s, t)
    sel = [set() for _ in range(nb)]
    for (gi, i), a in arcs.items():
        if d.flow_on(a) > 0:
            sel[i].add(sorted(pair_edges[(gi, i)], key=vkey)[0])
    return sel, best_t


def _distinct_endpoint_filter(paths: List[Tuple[Tuple[Vertex, ...], Tuple[EdgeId, ...]]],
                              used: Set[Vertex]) -> List[Tuple[Tuple[Vertex, ...], Tuple[EdgeId, ...]]]:
    out = []
    for pv, pe in paths:
        if pv[0] in used or pv[-1] in used:
            continue
        out.append((pv, pe))
        used.add(pv[0])
        used.add(pv[-1])
    return out


def _case1_path(g, clusters, names_inv, split, multi, path_nodes,
                params, cfg, rng, log):
    if len(path_nodes) < 2:
        # degenerate single-cluster system (r = 1): no bundles
        return TreeOfSets((clusters[path_nodes[0]],), (), {}, params.alpha_bw) \
            if path_nodes else Progress("separate", 0, clusters[0],
                                        region=frozenset(clusters[0]))
    h1 = max(1, int(float(params.h0) // (2 * params.delta * params.r0 ** 2)))
    h2 = max(1, h1 // (2 * params.r0))
    consecutive = [tuple(sorted((path_nodes[i], path_nodes[i + 1])))
                   for i in range(len(path_nodes) - 1)]
    wanted = [multi[key] for key in consecutive]
    # take generously (endpoint disjointification prunes) and trim later
    target = max(params.h * (2 * params.delta), h2)
    sel, achieved = _pick_transversal(split.groups, wanted, target,
                                      surplus=2 * params.delta,
                                      rng=rng, retries=cfg.transversal_retries)
    assert achieved >= 1, "transversal selection failed despite the threshold"
    used_endpoints: Set[Vertex] = set()
    bundles: Dict[Tuple[int, int], PathBundle] = {}
    sizes = []
    for idx, key in enumerate(consecutive):
        lifted = []
        for eid in sorted(sel[idx], key=vkey):
            pv, pe = _lift_path(g, clusters, names_inv,
                                split.paths[eid], split.path_edges[eid])
            lifted.append((pv, pe))
        kept = _distinct_endpoint_filter(lifted, used_endpoints)
        if not kept:
            log.add("case1_dry_bundle", edge=key)
            return Progress("separate", 0, clusters[0],
                            region=frozenset(clusters[0]))
        a, b = key
        bundles[key] = PathBundle(tuple(pv for pv, _ in kept), VERTEX_DISJOINT,
                                  frozenset(clusters[a]), frozenset(clusters[b]),
                                  tuple(pe for _, pe in kept))
        sizes.append(len(kept))
    h = min(sizes)
    for key in list(bundles):
        b = bundles[key]
        bundles[key] = PathBundle(b.paths[:h], b.mode, b.sources, b.sinks,
                                  b.edge_ids[:h] if b.edge_ids else None)
    keep = sorted(set(path_nodes))
    remap = {old: new for new, old in enumerate(keep)}
    skeleton = tuple(tuple(sorted((remap[a], remap[b]))) for a, b in consecutive)
    tree = TreeOfSets(tuple(clusters[i] for i in keep), skeleton,
                      {tuple(sorted((remap[a], remap[b]))): bundles[(a, b)]
                       for a, b in consecutive},
                      params.alpha_bw)
    log.add("case1_tree", width=tree.width, height=tree.height)
    return _certify_or_progress(g, tree, params, cfg, log, keep)


def _certify_or_progress(g, tree: TreeOfSets, params, cfg, log, part_of_cluster):
    """part_of_cluster maps tree cluster index -> owning acceptable clustering."""
    gstar = tree.union_graph(g)
    for i, c in enumerate(tree.clusters):
        try:
            cut = find_violating_cut(gstar, c, params, cfg.cut_mode, cfg.exact_bound)
        except PreconditionError:
            cut = None
        if cut is not None:
            log.add("bandwidth_violation", cluster=i)
            return Progress("partition", part_of_cluster[i], c, cut=cut)
    return tree


def _case2_leaves(g, clusters, names, names_inv, split, multi, tree_adj,
                  params, cfg, rng, log, routers):
    leaves = [i for i in tree_adj if len(tree_adj[i]) == 1]
    root = max(tree_adj, key=lambda i: (len(tree_adj[i]), -i))
    if root in leaves and len(leaves) > 1:
        leaves = [l for l in leaves if l != root]
    r_target = min(params.r, len(leaves))
    leaves = sorted(leaves)[:r_target]
    log.add("case2", leaves=leaves, root=root)
    ex = extract_leaf_edge_sets(g, clusters, names_inv, split, multi, tree_adj,
                                leaves, root, params, cfg, rng, log)
    if isinstance(ex, Progress):
        return ex
    leaf_edges, leaf_paths = ex
    return _phase2(g, clusters, leaves, leaf_edges, leaf_paths, params, cfg, rng, log)


def extract_leaf_edge_sets(g, clusters, names_inv, split, multi, tree_adj,
                           leaves, root, params, cfg, rng, log):
    """Case-2 Step 1: per-leaf boundary edge sets E_i whose endpoints are
    pairwise linked through the root cluster.

    Routes disjoint leaf-to-root paths (leaf clusters cannot be interior:
    a saturated per-leaf quota forbids through-traffic), certifies the
    root-side endpoints, links them pairwise inside the root cluster, and
    keeps the first edges of the surviving paths.
    """
    rootc = clusters[root]
    h1 = max(1, int(float(params.h0) // (2 * params.delta * params.r0 ** 2)))
    q_leaf = max(1, int(h1 * float(params.alpha) / (2 * len(leaves) * params.delta)))
    work = g
    lnames: Dict[int, Vertex] = {}
    for i in leaves + [root]:
        work, node, _ = work.contract_cluster(clusters[i], supernode=f"_L{i}")
        lnames[i] = node
    inv = {v: k for k, v in lnames.items()}

    prob = None
    while q_leaf >= 1:
        caps = {lnames[i]: q_leaf for i in leaves}
        caps[lnames[root]] = 1 << 30
        prob = FlowProblem(work, [lnames[i] for i in leaves], [lnames[root]],
                           vertex_caps=caps, default_vertex_cap=1)
        val = prob.solve()
        if val == len(leaves) * q_leaf:
            break   # every leaf saturated: no through-traffic possible
        if q_leaf == 1:
            # some leaf cannot reach the root avoiding the others: its side
            # of the min cut is a separating region
            reach = prob.dinic.residual_reachable(prob.s)
            blocked = [i for i in leaves if prob.v_in[lnames[i]] in reach]
            i = blocked[0] if blocked else leaves[0]
            region: Set[Vertex] = set()
            for v in work.vertices:
                if prob.v_in.get(v) in reach and v != lnames[root]:
                    if v in inv:
                        region |= set(clusters[inv[v]])
                    else:
                        region.add(v)
            region |= set(clusters[i])
            log.add("case2_flow_shortfall", leaf=i, value=val)
            return Progress("separate", i, clusters[i], region=frozenset(region))
        q_leaf = max(1, q_leaf // 2)
        log.add("case2_quota_shrunk", q_leaf=q_leaf)

    lifted: Dict[int, List[Tuple[Tuple[Vertex, ...], Tuple[EdgeId, ...]]]] = {i: [] for i in leaves}
    for pv, pe in prob.paths():
        leaf = inv[pv[0]]
        lv, le = _lift_path(g, clusters, inv, pv, pe)
        lifted[leaf].append((lv, le))
    # root-side endpoint sets must be well-linked inside the root cluster
    a_sets = {i: [pv[-1] for pv, _ in lifted[i]] for i in leaves}
    all_a = sorted({v for vs in a_sets.values() for v in vs}, key=vkey)
    sub = g.induced(rootc)
    if len(all_a) >= 2:
        cut = find_violating_cut(g, rootc, params, cfg.cut_mode, cfg.exact_bound) \
            if len(g.interface(rootc)) < params.h0 else None
        if cut is not None:
            log.add("case2_root_violating_cut")
            return Progress("partition", root, rootc, cut=cut)
    linked = select_linked_families(sub, [a_sets[i] for i in leaves],
                                    params.alpha, cfg.boost, rng, divisor=1)
    leaf_edges: Dict[int, List[EdgeId]] = {}
    leaf_paths: Dict[int, List[Tuple[Tuple[Vertex, ...], Tuple[EdgeId, ...]]]] = {}
    h3 = min((len(x) for x in linked), default=0)
    if h3 == 0:
        i = leaves[0]
        log.add("case2_link_failure")
        return Progress("separate", i, clusters[i], region=frozenset(clusters[i]))
    for i, keepset in zip(leaves, linked):
        chosen = [(pv, pe) for pv, pe in lifted[i] if pv[-1] in set(keepset)][:h3]
        leaf_paths[i] = chosen
        leaf_edges[i] = [pe[0] for _, pe in chosen]
    log.add("case2_leaf_edges", h3=h3)
    return leaf_edges, leaf_paths


def _phase2(g, clusters, leaves, leaf_edges, leaf_paths, params, cfg, rng, log):
    """Case-2 Step 2: rebuild on the leaf clusters with trimmed boundary,
    split off, threshold, and hang bundles on a degree-3 spanning tree."""
    tset: Dict[int, Vertex] = {}
    work = g
    keep_edges: Set[EdgeId] = set()
    for i in leaves:
        keep_edges.update(leaf_edges[i])
    for i in leaves:
        drop = [e for e in g.out_edges(clusters[i]) if e not in keep_edges]
        work = work.without_edges([e for e in drop if work.has_edge_id(e)])
    for i in leaves:
        work, node, _ = work.contract_cluster(clusters[i], supernode=f"_F{i}")
        tset[i] = node
    tnodes = sorted(tset.values(), key=vkey)
    names_inv = {v: i for i, v in tset.items()}
    h3 = min(len(leaf_edges[i]) for i in leaves)
    mu2 = min_element_connectivity(work, tnodes, stop_below=h3)
    mu2 = min(h3, mu2)
    if mu2 < 1:
        log.add("phase2_disconnected")
        return Progress("separate", leaves[0], clusters[leaves[0]],
                        region=frozenset(clusters[leaves[0]]))
    split = split_off(work, tnodes, mu2)
    ell = 2 * mu2
    multi: Dict[Tuple[int, int], List[EdgeId]] = {}
    for u, v, eid in split.hprime.edges():
        key = tuple(sorted((names_inv[u], names_inv[v])))
        multi.setdefault(key, []).append(eid)
    threshold = max(1, int(ell / max(2, len(leaves)) ** 3))
    zcaps = {k: len(es) for k, es in multi.items() if len(es) >= threshold}
    zedges = []
    for (a, b), c in zcaps.items():
        for t in range(c):
            zedges.append((a, b, ("z", a, b, t)))
    ztilde = MultiGraph({i for i in leaves}, zedges)
    tree_edges, cert = degree3_spanning_tree(ztilde, require_entry_bounds=False, rng=rng)
    log.add("phase2_tree", edges=tree_edges)
    wanted = [multi[tuple(sorted(e))] for e in tree_edges]
    sel, achieved = _pick_transversal(split.groups, wanted,
                                      max(params.h * 2, 1), surplus=2 * params.delta,
                                      rng=rng, retries=cfg.transversal_retries)
    if achieved < 1:
        log.add("phase2_transversal_failure")
        return Progress("separate", leaves[0], clusters[leaves[0]],
                        region=frozenset(clusters[leaves[0]]))
    bundles: Dict[Tuple[int, int], PathBundle] = {}
    used: Set[Vertex] = set()
    skeleton = []
    for idx, e in enumerate(tree_edges):
        a, b = tuple(sorted(e))
        lifted = []
        for eid in sorted(sel[idx], key=vkey):
            pv, pe = split.paths[eid], split.path_edges[eid]
            # strip the synthetic-free endpoints: supernode ends lift to hosts
            lv, le = _lift_path(g, clusters, names_inv, pv, pe)
            lifted.append((lv, le))
        kept = _distinct_endpoint_filter(lifted, used)
        if not kept:
            log.add("phase2_dry_bundle", edge=(a, b))
            return Progress("separate", leaves[0], clusters[leaves[0]],
                            region=frozenset(clusters[leaves[0]]))
        bundles[(a, b)] = PathBundle(tuple(pv for pv, _ in kept), VERTEX_DISJOINT,
                                     frozenset(clusters[a]), frozenset(clusters[b]),
                                     tuple(pe for _, pe in kept))
        skeleton.append((a, b))
    h = min(len(b) for b in bundles.values())
    for key in list(bundles):
        b = bundles[key]
        bundles[key] = PathBundle(b.paths[:h], b.mode, b.sources, b.sinks,
                                  b.edge_ids[:h] if b.edge_ids else None)
    keep = sorted(leaves)
    remap = {old: new for new, old in enumerate(keep)}
    tree = TreeOfSets(tuple(clusters[i] for i in keep),
                      tuple((remap[a], remap[b]) for a, b in skeleton),
                      {(remap[a], remap[b]): bundles[(a, b)] for a, b in skeleton},
                      params.alpha_bw)
    log.add("phase2_tree_of_sets", width=tree.width, height=tree.height)
    return _certify_or_progress(g, tree, params, cfg, log,
                                {remap[i]: i for i in keep})


def build_tree_of_sets(g: MultiGraph, terminals: Iterable[Vertex], params: Params,
                       rng: Optional[random.Random] = None,
                       cfg: Optional[TreeBuildConfig] = None
                       ) -> Tuple[TreeOfSets, BuildLog]:
    """The meta-tree loop: maintain a good clustering, try iterations, and
    apply the returned certificates until a tree-of-sets system verifies.

    Terminals must be degree-1 and node-well-linked (the pipeline attaches
    pendants to guarantee this)."""
    rng = rng or random.Random(0)
    cfg = cfg or TreeBuildConfig()
    ts = set(terminals)
    for t in ts:
        if g.degree(t) != 1:
            raise PreconditionError(f"terminal {t!r} must have degree 1")
    log = BuildLog()
    clustering = initial_clustering(g, ts, params)
    for phase in range(cfg.max_phases):
        log.add("phase", phase=phase, phi=clustering.phi)
        contracted, names = legal_contracted_graph(clustering)
        parts = random_terminal_partition(contracted, ts, params.r0, rng)
        owner = clustering.owner_map()
        cluster_by_name = {}
        for i, info in enumerate(clustering.clusters):
            cluster_by_name[names[i]] = info.vertices
        regions: List[Set[Vertex]] = []
        for p in parts:
            reg: Set[Vertex] = set()
            for supernode in p:
                reg |= set(cluster_by_name[supernode])
            regions.append(reg)
        locals_: List[Clustering] = []
        refreshed = False
        for j, reg in enumerate(regions):
            cj, rec = replace_with_components(clustering, reg, cfg.cut_mode,
                                              cfg.exact_bound)
            log.add("part_clustering", part=j, drop=rec.drop)
            if cj.is_good():
                clustering = cj
                refreshed = True
                break
            locals_.append(cj)
        if refreshed:
            continue
        for it in range(cfg.max_iterations):
            routers = []
            for j, cj in enumerate(locals_):
                larges = cj.large_indices()
                if not larges:
                    clustering = cj
                    refreshed = True
                    break
                pick = max(larges, key=lambda i: len(g.out_edges(cj.clusters[i].vertices)))
                routers.append((j, cj.clusters[pick].vertices))
            if refreshed:
                break
            outcome = iteration_once(g, ts, routers, params, cfg, rng, log)
            if isinstance(outcome, TreeOfSets):
                problems = validate_tree_of_sets(g, outcome, params, ts,
                                                 cfg.cut_mode, cfg.exact_bound)
                assert not problems, f"tree-of-sets invariants failed: {problems}"
                log.add("success", width=outcome.width, height=outcome.height)
                return outcome, log
            j = outcome.part
            cj = locals_[j]
            idx = next(i for i, info in enumerate(cj.clusters)
                       if info.vertices == outcome.cluster)
            if outcome.kind == "separate":
                region = set(outcome.region) - ts
                cj2, rec = action_separate(cj, idx, region, cfg.cut_mode, cfg.exact_bound)
            else:
                cj2, rec = action_partition(cj, idx, outcome.cut, cfg.cut_mode,
                                            cfg.exact_bound)
            log.add("action", kind=outcome.kind, part=j, drop=rec.drop)
            if cj2.is_good():
                clustering = cj2
                break
            locals_[j] = cj2
    raise RetriesExhausted("meta-tree loop exhausted its phase budget")
