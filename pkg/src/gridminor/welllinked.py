"""Well-linkedness in the flavors the pipeline needs.

Edge well-linkedness reduces to sparsest cut. Node-well-linkedness and
linkedness are subset-pair properties; the exhaustive checkers iterate all
relevant pairs and certify by max-flow, falling back to randomized pair
sampling when the terminal set exceeds the configured bound (the verdict
is then marked "sampled").
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .cuts import CutCertificate, sparsest_cut
from .errors import PreconditionError
from .flow import FlowProblem
from .graphs import MultiGraph, Vertex, vkey

NWL_BOUND_DEFAULT = 10
LINKED_BOUND_DEFAULT = 7
SAMPLE_ROUNDS_DEFAULT = 200


@dataclass(frozen=True)
class WellLinkedVerdict:
    holds: bool
    alpha: Fraction
    witness: Optional[CutCertificate] = None
    mode: str = "exact"   # "exact" | "approx"


@dataclass(frozen=True)
class PairVerdict:
    holds: bool
    violating_pair: Optional[Tuple[Tuple[Vertex, ...], Tuple[Vertex, ...]]] = None
    separator: Optional[Tuple[Vertex, ...]] = None
    mode: str = "exhaustive"  # "exhaustive" | "sampled"
    pairs_checked: int = 0


def is_well_linked(g: MultiGraph, terminals: Iterable[Vertex], alpha,
                   mode: str = "exact", exact_bound: int = 20) -> WellLinkedVerdict:
    """alpha-well-linked: every bipartition cuts >= alpha * min-side terminals.

    Exact mode certifies both answers; approx mode can only certify a
    violation (its "holds" means no cut below alpha was found).
    """
    ts = set(terminals)
    alpha = Fraction(alpha).limit_denominator(10**9) if not isinstance(alpha, Fraction) else alpha
    if len(ts) <= 1:
        return WellLinkedVerdict(True, alpha, mode=mode)
    cert = sparsest_cut(g, ts, mode=mode, exact_bound=exact_bound)
    if cert is None:
        return WellLinkedVerdict(True, alpha, mode=mode)
    if cert.sparsity < alpha:
        return WellLinkedVerdict(False, alpha, witness=cert, mode=mode)
    return WellLinkedVerdict(True, alpha, mode=mode)


def _routable(g: MultiGraph, a: Sequence[Vertex], b: Sequence[Vertex],
              removed: Iterable[Vertex] = ()) -> Tuple[bool, List[Vertex]]:
    """Can |a| fully vertex-disjoint a->b paths avoid `removed` entirely?"""
    prob = FlowProblem(g, a, b, forbidden=set(removed))
    val = prob.solve()
    if val >= len(a):
        return True, []
    return False, prob.cut_vertices()


def is_node_well_linked(g: MultiGraph, terminals: Iterable[Vertex],
                        bound: int = NWL_BOUND_DEFAULT,
                        rng: Optional[random.Random] = None,
                        sample_rounds: int = SAMPLE_ROUNDS_DEFAULT,
                        max_size: Optional[int] = None) -> PairVerdict:
    """Every pair of equal-sized terminal subsets joined by fully disjoint
    paths (empty paths at shared vertices allowed).

    It suffices to check, for each disjoint pair (A, B), the hardest
    completion T1 = A + rest, T2 = B + rest: shared vertices only shrink
    the graph, so a violation for any overlapping pair implies one for the
    maximal-overlap pair with the same disjoint cores. `max_size` restricts
    the check to disjoint cores of at most that size.
    """
    ts = sorted(set(terminals), key=vkey)
    k = len(ts)
    if k <= 1:
        return PairVerdict(True)
    top = k // 2 if max_size is None else min(k // 2, max_size)
    if k <= bound or max_size is not None:
        checked = 0
        for s in range(1, top + 1):
            for a in combinations(ts, s):
                rest = [t for t in ts if t not in a]
                for b in combinations(rest, s):
                    if vkey(b[0]) < vkey(a[0]):
                        continue  # unordered pair, one orientation suffices
                    shared = [t for t in ts if t not in a and t not in b]
                    ok, cut = _routable(g, a, b, removed=shared)
                    checked += 1
                    if not ok:
                        t1 = tuple(sorted(a + tuple(shared), key=vkey))
                        t2 = tuple(sorted(b + tuple(shared), key=vkey))
                        return PairVerdict(False, (t1, t2), tuple(cut),
                                           "exhaustive", checked)
        return PairVerdict(True, mode="exhaustive", pairs_checked=checked)
    rng = rng or random.Random(0)
    checked = 0
    for _ in range(sample_rounds):
        s = rng.randint(1, top)
        pool = list(ts)
        rng.shuffle(pool)
        a, b = tuple(pool[:s]), tuple(pool[s:2 * s])
        shared = [t for t in ts if t not in a and t not in b]
        ok, cut = _routable(g, a, b, removed=shared)
        checked += 1
        if not ok:
            t1 = tuple(sorted(a + tuple(shared), key=vkey))
            t2 = tuple(sorted(b + tuple(shared), key=vkey))
            return PairVerdict(False, (t1, t2), tuple(cut), "sampled", checked)
    return PairVerdict(True, mode="sampled", pairs_checked=checked)


def are_linked(g: MultiGraph, a: Iterable[Vertex], b: Iterable[Vertex],
               bound: int = LINKED_BOUND_DEFAULT,
               rng: Optional[random.Random] = None,
               sample_rounds: int = SAMPLE_ROUNDS_DEFAULT) -> PairVerdict:
    """Linked: every equal-sized pair A' <= a, B' <= b admits |A'| fully
    vertex-disjoint connecting paths."""
    aset = sorted(set(a), key=vkey)
    bset = sorted(set(b), key=vkey)
    if set(aset) & set(bset):
        raise PreconditionError("linkedness is defined for disjoint sets")
    if not aset or not bset:
        return PairVerdict(True)
    if max(len(aset), len(bset)) <= bound:
        checked = 0
        for s in range(1, min(len(aset), len(bset)) + 1):
            for asub in combinations(aset, s):
                for bsub in combinations(bset, s):
                    ok, cut = _routable(g, asub, bsub)
                    checked += 1
                    if not ok:
                        return PairVerdict(False, (asub, bsub), tuple(cut),
                                           "exhaustive", checked)
        return PairVerdict(True, mode="exhaustive", pairs_checked=checked)
    rng = rng or random.Random(0)
    checked = 0
    for _ in range(sample_rounds):
        s = rng.randint(1, min(len(aset), len(bset)))
        asub = tuple(rng.sample(aset, s))
        bsub = tuple(rng.sample(bset, s))
        ok, cut = _routable(g, asub, bsub)
        checked += 1
        if not ok:
            return PairVerdict(False, (asub, bsub), tuple(cut), "sampled", checked)
    return PairVerdict(True, mode="sampled", pairs_checked=checked)


def split_integers(xs: Sequence[int]) -> Tuple[List[int], List[int]]:
    """Partition indices so both side-sums reach N/3 (sorted greedy).

    Requires every value at most 2N/3; values are processed in decreasing
    order and each goes to the currently lighter side.
    """
    if any(x < 0 for x in xs):
        raise PreconditionError("values must be non-negative")
    total = sum(xs)
    if total <= 0:
        raise PreconditionError("total must be positive")
    if max(xs) > Fraction(2 * total, 3):
        raise PreconditionError("some value exceeds 2N/3")
    order = sorted(range(len(xs)), key=lambda i: (-xs[i], i))
    a: List[int] = []
    b: List[int] = []
    sa = sb = 0
    for i in order:
        if sa <= sb:
            a.append(i)
            sa += xs[i]
        else:
            b.append(i)
            sb += xs[i]
    assert 3 * sa >= total and 3 * sb >= total
    return sorted(a), sorted(b)


@dataclass(frozen=True)
class SurvivingComponent:
    component: FrozenSet[Vertex]
    terminal_count: int
    required: Fraction
    guarantee_met: bool


def surviving_component(g: MultiGraph, terminals: Iterable[Vertex], alpha,
                        removed_edges: Iterable = (),
                        removed_vertices: Iterable[Vertex] = ()) -> SurvivingComponent:
    """The component of g minus the removal that keeps most terminals.

    When the caller's well-linkedness assertion is genuine and the removal
    small, the survivor keeps at least |T| - m'/alpha (edge removal) resp.
    |T| - n'*Delta/alpha (vertex removal) terminals; `guarantee_met` reports
    whether that bound held rather than crashing, since a failure falsifies
    the caller's certificate.
    """
    ts = set(terminals)
    alpha = Fraction(alpha) if not isinstance(alpha, Fraction) else alpha
    redges = set(removed_edges)
    rverts = set(removed_vertices)
    h = g.without_edges(redges)
    if rverts:
        h = h.without_vertices(rverts)
    comps = h.components()
    if not comps:
        return SurvivingComponent(frozenset(), 0, Fraction(len(ts)), len(ts) == 0)
    best = max(comps, key=lambda c: (len(c & ts), -len(c), [vkey(v) for v in sorted(c, key=vkey)][:1]))
    kept = len(best & ts)
    required = Fraction(len(ts))
    if redges:
        required -= Fraction(len(redges), 1) / alpha
    if rverts:
        required -= Fraction(len(rverts) * max(1, g.max_degree()), 1) / alpha
    return SurvivingComponent(frozenset(best), kept, required, Fraction(kept) >= required)
