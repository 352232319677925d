"""Clustering of variables around latent components and separation of weak members."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PartitionError

MIN_GROUP = 3
N_RESTARTS = 20
MAX_SWEEPS = 200
DEFAULT_TAU_WEAK = 0.3
M_SCAN_MAX = 12
M_GAIN = 0.05


@dataclass(frozen=True)
class GroupPartition:
    """Disjoint groups of variable indices plus the isolated set.

    ``criterion`` is the summed leading eigenvalue of the group blocks as
    found by the clustering, before any weak-member separation.
    """

    groups: tuple
    isolated: tuple
    homogeneity: tuple
    d: int
    criterion: float = float("nan")

    def __post_init__(self):
        seen = [j for g in self.groups for j in g] + list(self.isolated)
        if sorted(seen) != list(range(self.d)):
            raise PartitionError("groups and isolated set must partition all variables")
        for g in self.groups:
            if len(g) < MIN_GROUP:
                raise PartitionError(f"group {list(g)} has fewer than {MIN_GROUP} members")
        if len(self.homogeneity) != len(self.groups):
            raise PartitionError("one homogeneity value per group required")

    @classmethod
    def build(cls, groups, isolated, d, R=None, criterion=float("nan")):
        """Canonical form: members sorted, groups ordered by smallest member."""
        groups = sorted((tuple(sorted(int(j) for j in g)) for g in groups if len(g)), key=min)
        isolated = tuple(sorted(int(j) for j in isolated))
        if R is None:
            hom = tuple(float("nan") for _ in groups)
        else:
            hom = tuple(_leading(R, g)[0] / len(g) for g in groups)
        return cls(tuple(groups), isolated, hom, int(d), float(criterion))

    @property
    def m(self):
        return len(self.groups)

    def assignment(self):
        """Group index per variable, -1 for isolated."""
        out = np.full(self.d, -1)
        for k, g in enumerate(self.groups):
            out[list(g)] = k
        return out

    def labels(self, names):
        lab = {names[j]: "isolated" for j in self.isolated}
        for k, g in enumerate(self.groups):
            for j in g:
                lab[names[j]] = str(k + 1)
        return lab

    def order(self):
        """Variables in group order then isolated, for heatmap display."""
        return [j for g in self.groups for j in g] + list(self.isolated)


def _values(R):
    return np.asarray(getattr(R, "values", R), dtype=float)


def _leading(R, members):
    R = _values(R)
    idx = list(members)
    lam, vec = np.linalg.eigh(R[np.ix_(idx, idx)])
    return float(lam[-1]), vec[:, -1]


def component_correlations(R, members):
    """Correlation of every variable with the first principal component of ``members``.

    The component sign is chosen so most members correlate positively with it.
    """
    R = _values(R)
    lam, v = _leading(R, members)
    c = R[:, list(members)] @ v / np.sqrt(lam)
    inner = c[list(members)]
    if np.sum(inner > 0) < np.sum(inner < 0):
        c = -c
    return c


def _run_clv(R, m, rng, max_sweeps=MAX_SWEEPS):
    d = R.shape[0]
    seeds = rng.choice(d, size=m, replace=False)
    assign = np.argmax(R[:, seeds] ** 2, axis=1)
    assign[seeds] = np.arange(m)
    trace = []
    for _ in range(max_sweeps):
        if len(np.unique(assign)) < m:
            return None
        C = np.empty((m, d))
        total = 0.0
        for k in range(m):
            members = np.flatnonzero(assign == k)
            lam, v = _leading(R, members)
            C[k] = (R[:, members] @ v) ** 2 / lam
            total += lam
        trace.append(total)
        best = C.max(axis=0)
        keep = C[assign, np.arange(d)] >= best - 1e-12
        new = np.where(keep, assign, np.argmax(C, axis=0))
        if np.array_equal(new, assign):
            return assign, total, trace
        assign = new
    return assign, trace[-1], trace


def _canonical(assign):
    relabel, out = {}, np.empty_like(assign)
    for j, g in enumerate(assign):
        out[j] = relabel.setdefault(int(g), len(relabel))
    return out


def clv_partition(R, m, seed=0, n_restarts=N_RESTARTS, return_trace=False):
    """Partition variables into ``m`` groups maximizing the summed squared
    correlation of members with their group's first principal component.

    Best of ``n_restarts`` seeded restarts; exact ties in the criterion go to the
    lexicographically smallest canonical assignment.
    """
    R = _values(R)
    d = R.shape[0]
    if not 1 <= m or MIN_GROUP * m > d:
        raise PartitionError(f"m={m} out of range for d={d} (need 1 <= m <= d/{MIN_GROUP})")
    if m == 1:
        part = GroupPartition.build([range(d)], [], d, R, _leading(R, range(d))[0])
        return (part, [[part.criterion]]) if return_trace else part

    children = np.random.SeedSequence(seed).spawn(n_restarts)
    best, best_key, traces = None, None, []
    for child in children:
        res = _run_clv(R, m, np.random.default_rng(child))
        if res is None:
            continue
        assign, total, trace = res
        traces.append(trace)
        canon = _canonical(assign)
        key = (-round(total, 10), tuple(canon))
        if best_key is None or key < best_key:
            best, best_key = (canon, total), key
    if best is None:
        raise PartitionError(f"every restart produced an empty group for m={m}")
    canon, total = best
    groups = [np.flatnonzero(canon == k) for k in range(m)]
    small = [g for g in groups if len(g) < MIN_GROUP]
    big = [g for g in groups if len(g) >= MIN_GROUP]
    isolated = [j for g in small for j in g]
    part = GroupPartition.build(big, isolated, d, R, total)
    return (part, traces) if return_trace else part


def separate_weak(partition: GroupPartition, R, tau_weak=DEFAULT_TAU_WEAK):
    """Move members whose strongest within-group |correlation| is below ``tau_weak``
    to the isolated set, repeating until stable; groups under 3 members dissolve."""
    R = _values(R)
    groups = [list(g) for g in partition.groups]
    isolated = list(partition.isolated)
    changed = True
    while changed:
        changed = False
        kept = []
        for g in groups:
            sub = np.abs(R[np.ix_(g, g)])
            np.fill_diagonal(sub, -np.inf)
            weak = sub.max(axis=1) < tau_weak
            if weak.any():
                changed = True
                isolated += [j for j, w in zip(g, weak) if w]
                g = [j for j, w in zip(g, weak) if not w]
            if len(g) < MIN_GROUP:
                changed = changed or bool(g)
                isolated += g
            else:
                kept.append(g)
        groups = kept
    return GroupPartition.build(groups, isolated, partition.d, R, partition.criterion)


def choose_m(R, seed=0, m_max=M_SCAN_MAX, gain=M_GAIN, n_restarts=N_RESTARTS):
    """Scan m = 2..min(m_max, d/3) and keep the last m whose criterion gain over
    m - 1 is at least ``gain``; returns ``(m, {m: criterion})``."""
    R = _values(R)
    d = R.shape[0]
    top = min(m_max, d // MIN_GROUP)
    crit = {1: _leading(R, range(d))[0]}
    for m in range(2, top + 1):
        crit[m] = clv_partition(R, m, seed, n_restarts).criterion
        if (crit[m] - crit[m - 1]) / crit[m - 1] < gain:
            return m - 1, crit
    return max(crit), crit
