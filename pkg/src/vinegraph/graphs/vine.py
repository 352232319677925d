"""Truncated partial-correlation vines built by sequential maximum spanning trees."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from ..correlation import CorrelationMatrix, PartialCorrelator
from ..errors import VineError
from .model import DependenceGraph, GraphEdge, make_nodes

DEFAULT_MAX_LEVEL = 3
DEFAULT_STOP = 0.1
DEFAULT_DRAW = (0.2, 0.2, 0.2)
DEFAULT_LABEL = (0.5, 0.3, 0.4)


@dataclass(frozen=True)
class VineEdge:
    """Edge ``(a, b; S)`` of tree ``tree_level``.

    ``nodes`` are the two joined nodes: variable indices in tree 1, edge
    positions within the previous tree afterwards.
    """

    conditioned: tuple
    conditioning: tuple
    value: float
    tree_level: int
    nodes: tuple

    def __post_init__(self):
        for name in ("conditioned", "conditioning", "nodes"):
            object.__setattr__(self, name, tuple(int(x) for x in getattr(self, name)))
        object.__setattr__(self, "value", float(self.value))

    @property
    def labels(self):
        return frozenset(self.conditioned) | frozenset(self.conditioning)

    @property
    def weight(self):
        return edge_weight(self.value)


@dataclass(frozen=True)
class VineStructure:
    trees: tuple
    d: int
    variable_names: tuple = None
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(tuple(t) for t in self.trees))
        if self.variable_names is None:
            object.__setattr__(self, "variable_names", tuple(str(j + 1) for j in range(self.d)))

    @property
    def truncation_level(self):
        return len(self.trees)

    def edges(self):
        return [e for t in self.trees for e in t]

    def with_values(self, values):
        """Same structure with new edge values, given per tree."""
        trees = [[replace(e, value=float(v)) for e, v in zip(t, vals)]
                 for t, vals in zip(self.trees, values)]
        return VineStructure(trees, self.d, self.variable_names)


def edge_weight(rho):
    r2 = float(rho) ** 2
    return np.inf if r2 >= 1.0 else -np.log1p(-r2)


def _kruskal(n_nodes, candidates):
    """Maximum spanning tree. ``candidates`` are (u, v, a, b, S, value) tuples;
    ties on weight go to the lexicographically smaller conditioned pair."""
    order = sorted(candidates, key=lambda c: (-edge_weight(c[5]), c[2], c[3], c[4]))
    ds = DisjointSet(range(n_nodes))
    chosen = []
    for c in order:
        if ds.merge(c[0], c[1]):
            chosen.append(c)
            if len(chosen) == n_nodes - 1:
                break
    return chosen


def proximity_candidates(prev_tree):
    """All pairs of previous-tree edges whose label sets differ by exactly two elements."""
    out = []
    labels = [e.labels for e in prev_tree]
    for p in range(len(prev_tree)):
        for q in range(p + 1, len(prev_tree)):
            delta = labels[p] ^ labels[q]
            if len(delta) == 2:
                a, b = sorted(delta)
                out.append((p, q, a, b, tuple(sorted(labels[p] & labels[q]))))
    return out


def build_truncated_vine(R, max_level=DEFAULT_MAX_LEVEL, stop_threshold=DEFAULT_STOP):
    """Sequential maximum-spanning-tree vine with edge weight -log(1 - rho^2).

    Stops after ``max_level`` trees, or before tree l >= 2 when every candidate
    partial correlation is below ``stop_threshold`` in absolute value.
    """
    if not isinstance(R, CorrelationMatrix):
        R = CorrelationMatrix(R)
    R.require_pd()
    d = R.d
    if not 1 <= max_level <= d - 1:
        raise ValueError(f"max_level must lie in [1, {d - 1}]")
    pc = PartialCorrelator(R)
    V = R.values
    cands = [(i, j, i, j, (), V[i, j]) for i, j in zip(*np.triu_indices(d, k=1))]
    t1 = _kruskal(d, cands)
    if len(t1) != d - 1:
        raise VineError("tree 1 is not spanning")
    trees = [[VineEdge((c[2], c[3]), (), float(c[5]), 1, (c[0], c[1])) for c in t1]]
    stopped = False
    for level in range(2, max_level + 1):
        prev = trees[-1]
        cands = [(p, q, a, b, S, pc(a, b, S)) for p, q, a, b, S in proximity_candidates(prev)]
        if stop_threshold > 0 and all(abs(c[5]) < stop_threshold for c in cands):
            stopped = True
            break
        chosen = _kruskal(len(prev), cands)
        if len(chosen) != len(prev) - 1:
            raise VineError(f"candidate graph at tree {level} is disconnected")
        trees.append([VineEdge((c[2], c[3]), c[4], float(c[5]), level, (c[0], c[1]))
                      for c in chosen])
    meta = {"max_level": max_level, "stop_threshold": stop_threshold, "stopped_early": stopped}
    return VineStructure(trees, d, R.variable_names, meta)


@dataclass(frozen=True)
class VineValidation:
    ok: bool
    condition: str = None
    message: str = ""
    edges: tuple = ()

    def __bool__(self):
        return self.ok


def _fail(condition, message, edges=()):
    return VineValidation(False, condition, message, tuple(edges))


def validate_vine(v: VineStructure) -> VineValidation:
    """Check tree sizes, that each tree spans the previous tree's edges, the
    proximity condition, and that edge labels derive from the joined nodes."""
    d = v.d
    for level, tree in enumerate(v.trees, start=1):
        if len(tree) != d - level:
            return _fail("tree_size", f"tree {level} has {len(tree)} edges, expected {d - level}")
        for e in tree:
            if e.tree_level != level:
                return _fail("tree_size", f"edge {e.conditioned} marked level {e.tree_level} "
                                          f"in tree {level}", [e])
    for level, tree in enumerate(v.trees, start=1):
        n_nodes = d if level == 1 else len(v.trees[level - 2])
        ds = DisjointSet(range(n_nodes))
        for e in tree:
            u, w = e.nodes
            if not (0 <= u < n_nodes and 0 <= w < n_nodes) or u == w:
                return _fail("spanning", f"tree {level} edge joins invalid nodes {e.nodes}", [e])
            if not ds.merge(u, w):
                return _fail("spanning", f"tree {level} contains a cycle", [e])
    for level, tree in enumerate(v.trees[1:], start=2):
        prev = v.trees[level - 2]
        for e in tree:
            n1, n2 = prev[e.nodes[0]], prev[e.nodes[1]]
            if len(n1.labels ^ n2.labels) != 2:
                return _fail("proximity",
                             f"tree {level} joins {_fmt(n1)} and {_fmt(n2)} whose label sets "
                             "do not differ by two elements", [e, n1, n2])
    for level, tree in enumerate(v.trees, start=1):
        for e in tree:
            if level == 1:
                ok = tuple(sorted(e.nodes)) == tuple(e.conditioned) and not e.conditioning
            else:
                prev = v.trees[level - 2]
                n1, n2 = prev[e.nodes[0]], prev[e.nodes[1]]
                ok = (frozenset(e.conditioned) == n1.labels ^ n2.labels
                      and frozenset(e.conditioning) == n1.labels & n2.labels)
            if not ok or not -1.0 < e.value < 1.0:
                return _fail("labels", f"edge {_fmt(e)} does not derive from its nodes", [e])
    return VineValidation(True)


def _fmt(e):
    a, b = e.conditioned
    s = ",".join(str(k + 1) for k in e.conditioning)
    return f"[{a + 1},{b + 1}" + (f";{s}]" if s else "]")


def vine_log_sum(v: VineStructure):
    """Sum of log(1 - rho_e^2) over all vine edges."""
    return float(sum(np.log1p(-e.value ** 2) for e in v.edges()))


def correlation_from_vine(v: VineStructure) -> CorrelationMatrix:
    """Invert a full partial-correlation vine to its correlation matrix."""
    d = v.d
    if v.truncation_level != d - 1:
        raise VineError("a full vine (d - 1 trees) is required")
    C = np.full((d, d), np.nan)
    np.fill_diagonal(C, 1.0)
    pc = PartialCorrelator(C)
    for tree in v.trees:
        for e in tree:
            a, b = e.conditioned
            cur = e.value
            rest = frozenset(e.conditioning)
            while rest:
                k = min(rest)
                rest = rest - {k}
                rak, rbk = pc(a, k, rest), pc(b, k, rest)
                cur = cur * np.sqrt((1.0 - rak * rak) * (1.0 - rbk * rbk)) + rak * rbk
            if np.isnan(cur):
                raise VineError(f"edge {_fmt(e)} depends on an undetermined correlation")
            C[a, b] = C[b, a] = cur
    return CorrelationMatrix(C, v.variable_names)


def vine_to_graph(v: VineStructure, draw_thresholds=DEFAULT_DRAW, label_thresholds=DEFAULT_LABEL,
                  tree1_label_threshold=0.0, kinds=None, method="vine") -> DependenceGraph:
    """Project a vine onto a graph: all tree-1 edges, plus edges of tree l >= 2
    whose |partial correlation| exceeds the threshold for order min(l - 1, 3)."""
    if len(draw_thresholds) < 3 or len(label_thresholds) < 3:
        raise ValueError("thresholds are needed for orders 1, 2 and 3+")
    edges = []
    for e in v.edges():
        order = e.tree_level - 1
        if order == 0:
            labeled = abs(e.value) > tree1_label_threshold
        else:
            bucket = min(order, 3) - 1
            if not abs(e.value) > draw_thresholds[bucket]:
                continue
            labeled = abs(e.value) > label_thresholds[bucket]
        edges.append(GraphEdge(*e.conditioned, e.value, order, e.conditioning, labeled))
    meta = {
        "truncation_level": v.truncation_level,
        "draw_thresholds": list(draw_thresholds),
        "label_thresholds": list(label_thresholds),
    }
    return DependenceGraph(make_nodes(v.variable_names, kinds), tuple(edges), method, meta)
