"""Pairwise connectivity oracles in the three flavors the pipeline uses."""

from __future__ import annotations

from typing import Iterable

from . import flow
from .errors import PreconditionError
from .graphs import MultiGraph, Vertex

EDGE = "edge"
ELEMENT = "element"
VERTEX = "vertex"


def connectivity(g: MultiGraph, terminals: Iterable[Vertex],
                 s: Vertex, t: Vertex, kind: str = EDGE) -> int:
    """lambda(s,t), mu(s,t) or internally-vertex-disjoint connectivity.

    Element connectivity counts paths pairwise disjoint in edges and in
    non-terminal vertices; terminals may be shared.
    """
    if s == t:
        raise PreconditionError("connectivity requires s != t")
    if kind == EDGE:
        return flow.edge_connectivity(g, s, t)
    if kind == ELEMENT:
        return flow.element_connectivity(g, terminals, s, t)
    if kind == VERTEX:
        return flow.vertex_connectivity(g, s, t)
    raise PreconditionError(f"unknown connectivity kind {kind!r}")
