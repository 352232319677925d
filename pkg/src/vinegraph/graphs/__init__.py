from .export import export_graph, from_json, to_dot, to_graphml, to_json
from .methods import graph_cdg, graph_foci, graph_tc
from .model import OBSERVED, PROXY, DependenceGraph, GraphEdge, Node
from .vine import (
    VineEdge,
    VineStructure,
    build_truncated_vine,
    correlation_from_vine,
    validate_vine,
    vine_log_sum,
    vine_to_graph,
)

__all__ = [
    "OBSERVED",
    "PROXY",
    "DependenceGraph",
    "GraphEdge",
    "Node",
    "VineEdge",
    "VineStructure",
    "build_truncated_vine",
    "correlation_from_vine",
    "export_graph",
    "from_json",
    "graph_cdg",
    "graph_foci",
    "graph_tc",
    "to_dot",
    "to_graphml",
    "to_json",
    "validate_vine",
    "vine_log_sum",
    "vine_to_graph",
]
