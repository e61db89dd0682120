"""Boosting edge-well-linkedness to node-well-linkedness.

The constructive route: group terminals along a spanning tree so one
representative per group is 1/2-well-linked, find a balanced partition
(A, B) with connected G[B] whose path entry points are well-linked in
G[A], group the connecting paths inside G[B] into disjoint connected
clusters, and keep one terminal per cluster.

Asymptotically the paper-scale constants make the output node-well-linked
outright; at desk scale the guarantee degrades, so the result is put
through the exhaustive/sampled oracle and trimmed until it certifies.
The achieved |T'|/kappa ratio is recorded rather than asserted.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .cuts import sparsest_cut
from .errors import PreconditionError
from .graphs import MultiGraph, Vertex, vkey
from .paths import PathBundle, max_disjoint_paths, VERTEX_DISJOINT
from .welllinked import PairVerdict, are_linked, is_node_well_linked


@dataclass(frozen=True)
class GroupedTerminals:
    chosen: Tuple[Vertex, ...]
    trees: Dict[Vertex, FrozenSet[Vertex]]
    achieved_ratio: float
    certificate: PairVerdict


@dataclass(frozen=True)
class BalancedPartition:
    side_a: FrozenSet[Vertex]
    side_b: FrozenSet[Vertex]
    paths: PathBundle              # disjoint T_B -> T_A paths
    entry_set: Tuple[Vertex, ...]  # first A-vertices, well-linked in G[A]
    entry_alpha: Fraction          # certified well-linkedness of the entry set
    iterations: int


@dataclass
class BoostConfig:
    group_q: int = 1               # paths per cluster in the B-side grouping
    nwl_bound: int = 8             # exhaustive node-well-linkedness bound
    sample_rounds: int = 120
    cut_mode: str = "auto"
    exact_cut_bound: int = 18
    trim_cap: int = 10_000


def _rooted(g: MultiGraph, tree_edges: Sequence, root: Vertex):
    adj: Dict[Vertex, List[Vertex]] = {v: [] for v in g.vertices}
    for eid in tree_edges:
        u, v = g.endpoints(eid)
        adj[u].append(v)
        adj[v].append(u)
    parent: Dict[Vertex, Optional[Vertex]] = {root: None}
    order = [root]
    i = 0
    while i < len(order):
        x = order[i]
        i += 1
        for u in sorted(adj[x], key=vkey):
            if u not in parent:
                parent[u] = x
                order.append(u)
    return parent, order


def spanning_tree_groups(g: MultiGraph, terminals: Sequence[Vertex],
                         group_size: int) -> List[FrozenSet[Vertex]]:
    """Disjoint connected vertex groups, each holding >= group_size
    terminals (the classic grouping along a spanning tree).

    The last group absorbs the root leftovers, so group sizes range up to
    Delta * group_size plus the leftover.
    """
    ts = set(terminals)
    if not g.is_connected():
        raise PreconditionError("grouping needs a connected graph")
    root = g.sorted_vertices()[0]
    parent, order = _rooted(g, g.spanning_tree_edges(root), root)
    tcount: Dict[Vertex, int] = {v: (1 if v in ts else 0) for v in g.vertices}
    vset: Dict[Vertex, Set[Vertex]] = {v: {v} for v in g.vertices}
    groups: List[FrozenSet[Vertex]] = []
    for v in reversed(order):   # postorder accumulation
        p = parent[v]
        if v != root and tcount[v] >= group_size:
            groups.append(frozenset(vset[v]))
            tcount[v] = 0
            vset[v] = set()
            continue
        if p is not None:
            tcount[p] += tcount[v]
            vset[p] |= vset[v]
    if tcount[root] >= group_size or not groups:
        groups.append(frozenset(vset[root]))
    else:
        last = groups.pop()
        groups.append(frozenset(last | vset[root]))
    return groups


def _entry_vertices(paths: PathBundle, side_a: Set[Vertex]) -> List[Vertex]:
    out = []
    for p in paths.paths:
        for v in p:
            if v in side_a:
                out.append(v)
                break
    return sorted(set(out), key=vkey)


def _uncross(ga: MultiGraph, s_set: Set[Vertex], x: Set[Vertex]) -> Tuple[Set[Vertex], Set[Vertex]]:
    """Massage a cut of the connected graph ga into one with both sides
    connected, without increasing sparsity w.r.t. s_set."""
    y = set(ga.vertices) - x

    def sparsity(xx, yy):
        e = len(ga.edges_between(xx, yy))
        d = min(len(xx & s_set), len(yy & s_set))
        return Fraction(e, d) if d else None

    while True:
        cx = [c for c in ga.induced(x).components()] if x else []
        cy = [c for c in ga.induced(y).components()] if y else []
        if len(cx) + len(cy) <= 2:
            return x, y
        moved = False
        for side, comps, other in (("x", cx, y), ("y", cy, x)):
            for c in sorted(comps, key=lambda c: [vkey(v) for v in sorted(c, key=vkey)]):
                if len(comps) <= 1:
                    continue
                if not (c & s_set):
                    if side == "x":
                        x -= c
                        y |= c
                    else:
                        y -= c
                        x |= c
                    moved = True
                    break
            if moved:
                break
        if moved:
            continue
        cur = sparsity(x, y)
        assert cur is not None
        # averaging argument: some component's boundary meets its quota
        done = False
        for side, comps in (("x", cx), ("y", cy)):
            if len(comps) <= 1 or done:
                continue
            home = x if side == "x" else y
            rho_side = Fraction(len(ga.edges_between(x, y)), len(home & s_set))
            for c in sorted(comps, key=lambda c: [vkey(v) for v in sorted(c, key=vkey)]):
                boundary = len(ga.edges_between(c, (y if side == "x" else x)))
                if boundary >= rho_side * len(c & s_set) and len(c & s_set) < len(home & s_set):
                    if side == "x":
                        x -= c
                        y |= c
                    else:
                        y -= c
                        x |= c
                    done = True
                    break
        assert done, "uncrossing made no progress"
        new = sparsity(x, y)
        assert new is not None and new <= cur


def find_balanced_good_partition(g: MultiGraph, terminals: Iterable[Vertex],
                                 cfg: Optional[BoostConfig] = None) -> BalancedPartition:
    """Balanced partition (A, B): G[A] and G[B] connected, a maximum set of
    disjoint T_B -> T_A paths, and entry vertices well-linked in G[A].

    Terminates within |E| iterations: each rejected candidate strictly
    shrinks the (A, B) cut.
    """
    cfg = cfg or BoostConfig()
    ts = sorted(set(terminals), key=vkey)
    if len(ts) < 2:
        raise PreconditionError("balanced partition needs >= 2 terminals")
    if not g.is_connected():
        raise PreconditionError("balanced partition needs a connected graph")
    delta = max(2, g.max_degree())
    target = max(1, len(ts) // (2 * delta))
    root = g.sorted_vertices()[0]
    parent, order = _rooted(g, g.spanning_tree_edges(root), root)
    tcount = {v: (1 if v in set(ts) else 0) for v in g.vertices}
    vset: Dict[Vertex, Set[Vertex]] = {v: {v} for v in g.vertices}
    lowest = None
    for v in reversed(order):
        p = parent[v]
        if p is not None:
            tcount[p] += tcount[v]
            vset[p] |= vset[v]
    # lowest vertex whose subtree holds >= target terminals
    depth = {root: 0}
    for v in order[1:]:
        depth[v] = depth[parent[v]] + 1
    candidates = [v for v in order if tcount[v] >= target and v != root]
    if candidates:
        lowest = max(candidates, key=lambda v: (depth[v], vkey(v)))
        a = set(vset[lowest])
    else:
        a = {order[-1]}
    b = set(g.vertices) - a
    if not (b & set(ts)) or not (a & set(ts)):
        raise PreconditionError("initial partition failed to split the terminals")

    iterations = 0
    edge_budget = g.m + 1
    while True:
        iterations += 1
        assert iterations <= edge_budget, "balanced-partition loop exceeded |E| bound"
        ta = a & set(ts)
        tb = b & set(ts)
        if len(ta) < len(tb):
            a, b = b, a
            ta, tb = tb, ta
        paths = max_disjoint_paths(g, tb, ta, VERTEX_DISJOINT)
        entry = _entry_vertices(paths, a)
        if len(entry) <= 1:
            return BalancedPartition(frozenset(a), frozenset(b), paths,
                                     tuple(entry), Fraction(1), iterations)
        ga = g.induced(a)
        cert = sparsest_cut(ga, entry, mode=cfg.cut_mode, exact_bound=cfg.exact_cut_bound)
        if cert is None or cert.sparsity >= 1:
            alpha = cert.sparsity if cert is not None else Fraction(1)
            return BalancedPartition(frozenset(a), frozenset(b), paths,
                                     tuple(entry), alpha, iterations)
        x, y = _uncross(ga, set(entry), set(cert.side_a))
        # drop the side with fewer T_A terminals into B
        if (len(x & ta), [vkey(v) for v in sorted(x, key=vkey)]) > \
           (len(y & ta), [vkey(v) for v in sorted(y, key=vkey)]):
            x, y = y, x
        old_cut = len(g.edges_between(a, b))
        a = set(y)
        b = set(g.vertices) - a
        assert len(g.edges_between(a, b)) < old_cut, "cut size failed to decrease"


def _group_paths_in_b(g: MultiGraph, side_b: Set[Vertex],
                      truncated: List[Tuple[Vertex, Tuple[Vertex, ...]]],
                      q: int, delta: int) -> List[List[int]]:
    """Partition (most of) the truncated paths into groups of q..4*Delta*q
    paths, each spanned by a connected subgraph of G[B]; returns index lists."""
    if q <= 1:
        return [[i] for i in range(len(truncated))]
    gb = g.induced(side_b)
    work = gb
    node_of_path = {}
    for i, (_, p) in enumerate(truncated):
        work, node, _ = work.contract_cluster(set(p), supernode=f"_p{i}")
        node_of_path[f"_p{i}"] = i
    if not work.is_connected():
        # grouping happens per component; handle the common connected case
        comps = work.components()
    else:
        comps = [set(work.vertices)]
    groups: List[List[int]] = []
    for comp in comps:
        sub = work.induced(comp)
        root = sub.sorted_vertices()[0]
        parent, order = _rooted(sub, sub.spanning_tree_edges(root), root)
        weight = {v: (1 if v in node_of_path else 0) for v in sub.vertices}
        members: Dict[Vertex, List[int]] = {
            v: ([node_of_path[v]] if v in node_of_path else []) for v in sub.vertices}
        for v in reversed(order):
            p = parent[v]
            if v != root and weight[v] >= q:
                groups.append(members[v])
                weight[v] = 0
                members[v] = []
                continue
            if p is not None:
                weight[p] += weight[v]
                members[p] = members[p] + members[v]
        if weight[root] >= q:
            groups.append(members[root])
    return [grp for grp in groups if len(grp) >= q]


def boost_to_node_well_linked(g: MultiGraph, terminals: Iterable[Vertex], alpha,
                              cfg: Optional[BoostConfig] = None,
                              rng: Optional[random.Random] = None) -> GroupedTerminals:
    """Select a subset of the (alpha-well-linked) terminals that is
    node-well-linked, with one disjoint witness tree per survivor.

    The verdict of the node-well-linkedness oracle is part of the output;
    candidates are trimmed until it passes, and the achieved |T'|/kappa
    ratio is recorded.
    """
    cfg = cfg or BoostConfig()
    rng = rng or random.Random(0)
    ts = sorted(set(terminals), key=vkey)
    kappa = len(ts)
    if kappa == 0:
        raise PreconditionError("no terminals")
    alpha = Fraction(alpha).limit_denominator(10**9) if not isinstance(alpha, Fraction) else alpha
    if alpha <= 0:
        raise PreconditionError("alpha must be positive")
    if kappa == 1:
        return GroupedTerminals((ts[0],), {ts[0]: frozenset([ts[0]])}, 1.0,
                                PairVerdict(True))
    delta = max(1, g.max_degree())
    group_size = min(kappa, max(1, ceil(1 / alpha)))
    groups = spanning_tree_groups(g, ts, group_size)
    reps: List[Vertex] = []
    tree_of: Dict[Vertex, FrozenSet[Vertex]] = {}
    for grp in groups:
        members = sorted(grp & set(ts), key=vkey)
        rep = members[0]
        reps.append(rep)
        tree_of[rep] = grp

    candidates: List[Vertex] = reps
    if len(reps) >= 4:
        part = find_balanced_good_partition(g, reps, cfg)
        tb = sorted(set(reps) & set(part.side_b), key=vkey)
        starts = {p[0] for p in part.paths.paths if p}
        routed = [t for t in tb if t in starts]
        if routed:
            trunc = []
            for p in part.paths.paths:
                if p[0] not in routed:
                    continue
                cut = next(i for i, v in enumerate(p) if v in part.side_a)
                trunc.append((p[0], p[:cut]))
            grouped = _group_paths_in_b(g, set(part.side_b), trunc,
                                        cfg.group_q, delta)
            picked = []
            for grp in grouped:
                reps_in = sorted(trunc[i][0] for i in grp)
                picked.append(sorted(reps_in, key=vkey)[0])
            if picked:
                candidates = sorted(set(picked), key=vkey)

    chosen, verdict = _trim_to_nwl(g, candidates, cfg, rng)
    if len(chosen) < len(reps):
        # Desk-scale fallback: the asymptotic guarantee behind the clustered
        # candidates is weak at small kappa, so also certify directly from
        # the pre-grouped representatives and keep the larger answer.
        alt, alt_verdict = _trim_to_nwl(g, reps, cfg, rng)
        if len(alt) > len(chosen):
            chosen, verdict = alt, alt_verdict
    ratio = len(chosen) / kappa
    return GroupedTerminals(tuple(chosen),
                            {t: tree_of.get(t, frozenset([t])) for t in chosen},
                            ratio, verdict)


def _trim_to_nwl(g: MultiGraph, candidates: Sequence[Vertex], cfg: BoostConfig,
                 rng: random.Random) -> Tuple[List[Vertex], PairVerdict]:
    chosen = list(candidates)
    trims = 0
    while True:
        verdict = is_node_well_linked(g, chosen, bound=cfg.nwl_bound, rng=rng,
                                      sample_rounds=cfg.sample_rounds)
        if verdict.holds or len(chosen) <= 1:
            return chosen, verdict
        trims += 1
        if trims > cfg.trim_cap:
            raise PreconditionError("node-well-linkedness trimming did not converge")
        t1, _ = verdict.violating_pair
        drop = sorted(set(t1) & set(chosen), key=vkey)
        chosen.remove(drop[0] if drop else chosen[-1])


def select_linked_families(g: MultiGraph, families: Sequence[Iterable[Vertex]], alpha,
                           cfg: Optional[BoostConfig] = None,
                           rng: Optional[random.Random] = None,
                           divisor: Optional[int] = None
                           ) -> List[Tuple[Vertex, ...]]:
    """Per family, a node-well-linked subset such that all pairs of chosen
    subsets are linked; subsets are trimmed until the oracles agree.

    `divisor` defaults to 12*Delta (the paper's cap on each subset's share
    of its boosted family); pass 1 to keep every boosted terminal.
    """
    cfg = cfg or BoostConfig()
    rng = rng or random.Random(0)
    fams = [sorted(set(f), key=vkey) for f in families]
    for i in range(len(fams)):
        for j in range(i + 1, len(fams)):
            if set(fams[i]) & set(fams[j]):
                raise PreconditionError("families must be disjoint")
    delta = max(1, g.max_degree())
    div = divisor if divisor is not None else 12 * delta
    picked: List[List[Vertex]] = []
    for fam in fams:
        boosted = boost_to_node_well_linked(g, fam, alpha, cfg, rng)
        take = max(1, len(boosted.chosen) // div)
        picked.append(list(boosted.chosen[:take]))
    changed = True
    guard = 0
    while changed:
        changed = False
        guard += 1
        assert guard < 10_000
        for i in range(len(picked)):
            for j in range(i + 1, len(picked)):
                if not picked[i] or not picked[j]:
                    continue
                v = are_linked(g, picked[i], picked[j], bound=cfg.nwl_bound,
                               rng=rng, sample_rounds=cfg.sample_rounds)
                if not v.holds:
                    bigger = picked[i] if len(picked[i]) >= len(picked[j]) else picked[j]
                    bigger.pop()
                    changed = True
    return [tuple(p) for p in picked]
