"""Undirected dependence graph with per-edge provenance."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

OBSERVED = "observed"
PROXY = "proxy"


@dataclass(frozen=True)
class Node:
    name: str
    kind: str = OBSERVED


@dataclass(frozen=True)
class GraphEdge:
    """Edge between node indices ``a < b``; ``order`` is the conditioning-set size."""

    a: int
    b: int
    value: float
    order: int = 0
    conditioning: tuple = ()
    labeled: bool = False

    def __post_init__(self):
        object.__setattr__(self, "a", int(self.a))
        object.__setattr__(self, "b", int(self.b))
        if self.a == self.b:
            raise ValueError("self-loops are not allowed")
        if self.a > self.b:
            a, b = self.b, self.a
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "b", b)
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "conditioning", tuple(int(k) for k in self.conditioning))


@dataclass(frozen=True)
class DependenceGraph:
    nodes: tuple
    edges: tuple
    method: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        seen = set()
        for e in self.edges:
            if not (0 <= e.a < len(self.nodes) and 0 <= e.b < len(self.nodes)):
                raise ValueError(f"edge ({e.a}, {e.b}) refers to a missing node")
            if (e.a, e.b) in seen:
                raise ValueError(f"duplicate edge ({e.a}, {e.b})")
            seen.add((e.a, e.b))

    @property
    def names(self):
        return [n.name for n in self.nodes]

    def __len__(self):
        return len(self.edges)

    def pairs(self):
        """Edge set as sorted (a, b) index pairs."""
        return sorted((e.a, e.b) for e in self.edges)

    def named_pairs(self):
        """Edge set as frozensets of node names, for order-free comparisons."""
        names = self.names
        return {frozenset((names[e.a], names[e.b])) for e in self.edges}

    def degrees(self):
        deg = Counter()
        for e in self.edges:
            deg[e.a] += 1
            deg[e.b] += 1
        return {n.name: deg.get(i, 0) for i, n in enumerate(self.nodes)}

    def neighbors(self, i):
        return sorted({e.b if e.a == i else e.a for e in self.edges if i in (e.a, e.b)})

    def subgraph(self, keep):
        """Induced subgraph on node indices ``keep`` (renumbered in the given order)."""
        keep = list(keep)
        pos = {j: k for k, j in enumerate(keep)}
        edges = [
            GraphEdge(pos[e.a], pos[e.b], e.value, e.order,
                      tuple(pos[c] for c in e.conditioning if c in pos), e.labeled)
            for e in self.edges if e.a in pos and e.b in pos
        ]
        return DependenceGraph(tuple(self.nodes[j] for j in keep), tuple(edges), self.method,
                               dict(self.metadata))


def make_nodes(names, kinds=None):
    if kinds is None:
        kinds = [OBSERVED] * len(names)
    return tuple(Node(str(n), k) for n, k in zip(names, kinds))
