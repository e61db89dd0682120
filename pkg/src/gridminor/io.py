"""JSON and DOT serialization for graphs and pipeline artifacts."""

from __future__ import annotations

import json
from typing import Any, Dict, IO, List

from .errors import ParseError
from .graphs import MultiGraph, vkey
from .minor import MinorModel
from .paths import PathBundle


def graph_to_json(g: MultiGraph) -> Dict[str, Any]:
    return {"vertices": sorted(g.vertices, key=vkey),
            "edges": [[u, v, eid] for u, v, eid in g.edges()]}


def graph_from_json(obj: Dict[str, Any]) -> MultiGraph:
    try:
        vertices = obj["vertices"]
        edges = [tuple(e) for e in obj["edges"]]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"bad graph JSON: {exc}") from exc
    for e in edges:
        if len(e) != 3:
            raise ParseError(f"bad edge record {e!r}")
    return MultiGraph(vertices, edges)


def dump_graph(g: MultiGraph, fp: IO[str]) -> None:
    json.dump(graph_to_json(g), fp, indent=None, separators=(",", ":"), default=str)
    fp.write("\n")


def load_graph(fp: IO[str]) -> MultiGraph:
    return graph_from_json(json.load(fp))


def graph_to_dot(g: MultiGraph, highlight: Dict[str, List] | None = None) -> str:
    """DOT export; `highlight` maps a color name to a vertex list."""
    colored = {}
    for color, vs in (highlight or {}).items():
        for v in vs:
            colored[v] = color
    lines = ["graph G {"]
    for v in g.sorted_vertices():
        attrs = f' [style=filled, fillcolor="{colored[v]}"]' if v in colored else ""
        lines.append(f'  "{v}"{attrs};')
    for u, v, eid in g.edges():
        lines.append(f'  "{u}" -- "{v}" [label="{eid}"];')
    lines.append("}")
    return "\n".join(lines)


def bundle_to_json(b: PathBundle) -> Dict[str, Any]:
    return {"mode": b.mode,
            "sources": sorted(b.sources, key=vkey),
            "sinks": sorted(b.sinks, key=vkey),
            "paths": [list(p) for p in b.paths],
            "edge_ids": [list(es) for es in b.edge_ids] if b.edge_ids is not None else None}


def bundle_from_json(obj: Dict[str, Any]) -> PathBundle:
    try:
        return PathBundle(paths=tuple(tuple(p) for p in obj["paths"]),
                          mode=obj["mode"],
                          sources=frozenset(obj["sources"]),
                          sinks=frozenset(obj["sinks"]),
                          edge_ids=(tuple(tuple(es) for es in obj["edge_ids"])
                                    if obj.get("edge_ids") is not None else None))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"bad bundle JSON: {exc}") from exc


def model_to_json(m: MinorModel) -> Dict[str, Any]:
    return {"branch_sets": {str(k): sorted(v, key=vkey) for k, v in m.branch_sets.items()},
            "edge_witness": {str(k): v for k, v in m.edge_witness.items()}}


def model_from_json(obj: Dict[str, Any]) -> MinorModel:
    try:
        return MinorModel(
            branch_sets={k: frozenset(v) for k, v in obj["branch_sets"].items()},
            edge_witness=dict(obj["edge_witness"]))
    except (KeyError, TypeError, AttributeError) as exc:
        raise ParseError(f"bad minor-model JSON: {exc}") from exc
