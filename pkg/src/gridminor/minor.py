"""Minor models and their verifier.

A model maps each minor vertex to a connected set of host vertices; the
sets are pairwise disjoint and every minor edge has a witness host edge
between the two sets. The verifier is the hard gate every construction in
this library must pass.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Hashable, List, Optional, Tuple

from .graphs import MultiGraph, Vertex, EdgeId, vkey


@dataclass(frozen=True)
class MinorModel:
    branch_sets: Dict[Hashable, FrozenSet[Vertex]]
    edge_witness: Dict[EdgeId, EdgeId]  # minor edge id -> host edge id


@dataclass(frozen=True)
class Violation:
    clause: str      # "connectivity" | "disjointness" | "witness" | "coverage"
    detail: str


def verify_minor_model(host: MultiGraph, minor: MultiGraph,
                       model: MinorModel) -> Tuple[bool, Optional[Violation]]:
    """True iff `model` certifies `minor` as a minor of `host`.

    On failure returns the first violated clause with witnesses, checking
    coverage, connectivity, disjointness, then edge witnesses, in that
    deterministic order.
    """
    for v in minor.sorted_vertices():
        if v not in model.branch_sets or not model.branch_sets[v]:
            return False, Violation("coverage", f"minor vertex {v!r} has no branch set")
    for v in minor.sorted_vertices():
        bs = model.branch_sets[v]
        for x in bs:
            if x not in host:
                return False, Violation("coverage",
                                        f"branch set of {v!r} contains foreign vertex {x!r}")
        sub = host.induced(bs)
        if not sub.is_connected():
            return False, Violation("connectivity",
                                    f"branch set of {v!r} induces a disconnected subgraph")
    vs = minor.sorted_vertices()
    owner: Dict[Vertex, Hashable] = {}
    for v in vs:
        for x in model.branch_sets[v]:
            if x in owner:
                return False, Violation(
                    "disjointness",
                    f"host vertex {x!r} lies in branch sets of {owner[x]!r} and {v!r}")
            owner[x] = v
    for u, v, eid in minor.edges():
        if eid not in model.edge_witness:
            return False, Violation("witness", f"minor edge {eid!r} has no witness")
        w = model.edge_witness[eid]
        if not host.has_edge_id(w):
            return False, Violation("witness", f"witness {w!r} is not a host edge")
        x, y = host.endpoints(w)
        bu, bv = model.branch_sets[u], model.branch_sets[v]
        if not ((x in bu and y in bv) or (x in bv and y in bu)):
            return False, Violation(
                "witness",
                f"witness {w!r} of minor edge {eid!r} does not join the two branch sets")
    return True, None


def identity_model(g: MultiGraph) -> MinorModel:
    return MinorModel(branch_sets={v: frozenset([v]) for v in g.vertices},
                      edge_witness={eid: eid for eid in g.edge_ids()})


def grid_graph(rows: int, cols: int | None = None) -> MultiGraph:
    """The rows x cols grid; vertices are (r, c) tuples-as-strings."""
    if cols is None:
        cols = rows
    vs = [f"{r},{c}" for r in range(rows) for c in range(cols)]
    es = []
    k = 0
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                es.append((f"{r},{c}", f"{r},{c + 1}", k))
                k += 1
            if r + 1 < rows:
                es.append((f"{r},{c}", f"{r + 1},{c}", k))
                k += 1
    return MultiGraph(vs, es)
