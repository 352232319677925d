"""DOT, GraphML and JSON serialization of dependence graphs.

Output is byte-deterministic: nodes and edges are written in graph order and
floats with fixed formatting.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET

from .model import PROXY, DependenceGraph, GraphEdge, Node

ORDER_COLORS = ("black", "blue", "red", "green")


def edge_color(order):
    return ORDER_COLORS[min(int(order), 3)]


def _q(s):
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(g: DependenceGraph) -> str:
    lines = [f"graph {_q(g.method)} {{", '  node [fontname="Helvetica"];']
    for n in g.nodes:
        shape = "ellipse" if n.kind == PROXY else "box"
        lines.append(f"  {_q(n.name)} [shape={shape}];")
    names = g.names
    for e in g.edges:
        attrs = [f"color={edge_color(e.order)}"]
        if e.labeled:
            attrs.append(f'label="{e.value:.2f}"')
        lines.append(f"  {_q(names[e.a])} -- {_q(names[e.b])} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_graphml(g: DependenceGraph) -> str:
    ns = "http://graphml.graphdrawing.org/xmlns"
    root = ET.Element("graphml", {"xmlns": ns})
    keys = [
        ("kind", "node", "string"),
        ("value", "edge", "double"),
        ("order", "edge", "int"),
        ("conditioning", "edge", "string"),
        ("color", "edge", "string"),
        ("labeled", "edge", "boolean"),
    ]
    for name, domain, typ in keys:
        ET.SubElement(root, "key", {"id": name, "for": domain, "attr.name": name,
                                    "attr.type": typ})
    graph = ET.SubElement(root, "graph", {"id": g.method, "edgedefault": "undirected"})
    names = g.names
    for n in g.nodes:
        node = ET.SubElement(graph, "node", {"id": n.name})
        ET.SubElement(node, "data", {"key": "kind"}).text = n.kind
    for k, e in enumerate(g.edges):
        edge = ET.SubElement(graph, "edge", {"id": f"e{k}", "source": names[e.a],
                                             "target": names[e.b]})
        data = {
            "value": repr(e.value),
            "order": str(e.order),
            "conditioning": ",".join(names[c] for c in e.conditioning),
            "color": edge_color(e.order),
            "labeled": "true" if e.labeled else "false",
        }
        for key, text in data.items():
            ET.SubElement(edge, "data", {"key": key}).text = text
    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def to_dict(g: DependenceGraph) -> dict:
    names = g.names
    return {
        "method": g.method,
        "metadata": g.metadata,
        "nodes": [{"name": n.name, "kind": n.kind} for n in g.nodes],
        "edges": [
            {
                "a": names[e.a],
                "b": names[e.b],
                "value": float(e.value),
                "order": e.order,
                "conditioning": [names[c] for c in e.conditioning],
                "labeled": e.labeled,
            }
            for e in g.edges
        ],
    }


def _plain(o):
    # numpy scalars and arrays that end up in metadata
    if hasattr(o, "tolist"):
        return o.tolist()
    raise TypeError(f"{type(o).__name__} is not JSON serializable")


def to_json(g: DependenceGraph) -> str:
    return json.dumps(to_dict(g), indent=2, sort_keys=True, default=_plain) + "\n"


def from_dict(obj) -> DependenceGraph:
    nodes = tuple(Node(n["name"], n["kind"]) for n in obj["nodes"])
    pos = {n.name: k for k, n in enumerate(nodes)}
    edges = tuple(
        GraphEdge(pos[e["a"]], pos[e["b"]], e["value"], e["order"],
                  tuple(pos[c] for c in e["conditioning"]), e["labeled"])
        for e in obj["edges"]
    )
    return DependenceGraph(nodes, edges, obj["method"], obj.get("metadata", {}))


def from_json(text) -> DependenceGraph:
    return from_dict(json.loads(text))


WRITERS = {"dot": to_dot, "graphml": to_graphml, "json": to_json}


def export_graph(g: DependenceGraph, fmt, path):
    """Write ``g`` to ``path`` as dot, graphml or json."""
    try:
        writer = WRITERS[fmt]
    except KeyError:
        raise ValueError(f"unknown format {fmt!r}; choose from {sorted(WRITERS)}") from None
    text = writer(g)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path
