"""Baseline graphs: thresholded correlations, conditional dependence and FOCI."""

from __future__ import annotations

import numpy as np

from ..correlation import CorrelationMatrix, partial_corr_given_rest
from ..errors import SingularityError
from .model import DependenceGraph, GraphEdge, make_nodes


def _as_corr(R):
    return R if isinstance(R, CorrelationMatrix) else CorrelationMatrix(R)


def _check_tau(tau):
    if not 0.0 <= tau < 1.0:
        raise ValueError("threshold must lie in [0, 1)")


def graph_tc(R, tau, kinds=None) -> DependenceGraph:
    """Edge (i, j) iff |r_ij| > tau."""
    R = _as_corr(R)
    _check_tau(tau)
    V = R.values
    edges = [GraphEdge(i, j, V[i, j], 0)
             for i, j in zip(*np.triu_indices(R.d, k=1)) if abs(V[i, j]) > tau]
    return DependenceGraph(make_nodes(R.variable_names, kinds), tuple(edges), "tc",
                           {"tau": tau})


def graph_cdg(R, tau, kinds=None) -> DependenceGraph:
    """Edge (i, j) iff the partial correlation given all other variables exceeds tau in |.|."""
    R = _as_corr(R)
    _check_tau(tau)
    P = partial_corr_given_rest(R)
    d = R.d
    edges = [
        GraphEdge(i, j, P[i, j], d - 2, tuple(k for k in range(d) if k not in (i, j)))
        for i, j in zip(*np.triu_indices(d, k=1)) if abs(P[i, j]) > tau
    ]
    return DependenceGraph(make_nodes(R.variable_names, kinds), tuple(edges), "cdg",
                           {"tau": tau})


def foci_statistic(R, i):
    """Modified first-order statistics for row ``i``; entry [j, k] is
    (|r_ij| - |r_ik||r_jk|) / sqrt((1 - r_ik^2)(1 - r_jk^2)), NaN where k is i or j."""
    V = np.abs(np.asarray(getattr(R, "values", R), dtype=float))
    d = V.shape[0]
    s = np.sqrt(1.0 - V ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        stat = (V[i][:, None] - V[i][None, :] * V) / (s[i][None, :] * s)
    stat[:, i] = np.nan
    stat[np.arange(d), np.arange(d)] = np.nan
    return stat


def graph_foci(R, tau, kinds=None) -> DependenceGraph:
    """Edge (i, j) iff |r_ij| >= tau and no third variable drives the modified
    first-order statistic below tau (near-zero or reversed association)."""
    R = _as_corr(R)
    _check_tau(tau)
    V = R.values
    d = R.d
    off = ~np.eye(d, dtype=bool)
    if np.any(np.abs(V[off]) >= 1.0):
        i, k = np.argwhere((np.abs(V) >= 1.0) & off)[0]
        raise SingularityError(f"|r| = 1 between {R.variable_names[i]} and {R.variable_names[k]}")
    worst = np.abs(V).copy()
    if d >= 3:
        for i in range(d):
            stat = foci_statistic(V, i)
            stat[i] = np.inf
            worst[i] = np.nanmin(stat, axis=1)
    edges = []
    for i, j in zip(*np.triu_indices(d, k=1)):
        if abs(V[i, j]) >= tau and worst[i, j] >= tau:
            edges.append(GraphEdge(i, j, V[i, j], 1))
    return DependenceGraph(make_nodes(R.variable_names, kinds), tuple(edges), "foci",
                           {"tau": tau})
