"""1-factor fits, residual diagnostics, proxy latent variables and factor simulators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .correlation import CorrelationMatrix
from .errors import ConvergenceError, PartitionError
from .transform import normal_scores

MAX_ITER = 500
REL_TOL = 1e-10
HEYWOOD_CAP = 0.999
DEFAULT_T_MAX = 0.25


def default_t_rowsum(d_g):
    return 0.25 * (d_g - 1) * 0.5


@dataclass(frozen=True, eq=False)
class OneFactorFit:
    loadings: np.ndarray
    objective: float
    n_iter: int = 0
    trace: tuple = ()

    @property
    def uniquenesses(self):
        return 1.0 - self.loadings ** 2

    def implied(self):
        """A A^T + Psi^2, which has a unit diagonal by construction."""
        a = self.loadings
        M = np.outer(a, a)
        np.fill_diagonal(M, 1.0)
        return M


def _objective(R, a):
    M = R - np.outer(a, a)
    iu = np.triu_indices_from(M, k=1)
    return float(np.sum(M[iu] ** 2))


def _orient(a):
    """Flip the overall sign so most loadings are positive (ties: largest |loading| positive)."""
    pos, neg = np.sum(a > 0), np.sum(a < 0)
    if neg > pos or (neg == pos and a[np.argmax(np.abs(a))] < 0):
        return -a
    return a


def fit_one_factor(R, max_iter=MAX_ITER, tol=REL_TOL) -> OneFactorFit:
    """Least-squares 1-factor fit of the off-diagonal correlations.

    Gauss-Seidel sweeps of the exact coordinate minimizer
    ``a_i = sum_{j!=i} r_ij a_j / sum_{j!=i} a_j^2`` starting from the scaled
    leading eigenvector. Each coordinate step cannot increase the objective.
    """
    R = np.asarray(getattr(R, "values", R), dtype=float)
    d = R.shape[0]
    if d < 3:
        raise ValueError("a 1-factor model needs at least 3 variables")
    lam, vec = np.linalg.eigh(R)
    a = vec[:, -1] * np.sqrt(max(lam[-1], 0.0))
    a = np.clip(a, -HEYWOOD_CAP, HEYWOOD_CAP)
    off = R - np.diag(np.diag(R))
    obj = _objective(R, a)
    trace = [obj]
    for it in range(1, max_iter + 1):
        for i in range(d):
            den = float(a @ a - a[i] * a[i])
            if den <= 0.0:
                a[i] = 0.0
                continue
            a[i] = min(HEYWOOD_CAP, max(-HEYWOOD_CAP, float(off[i] @ a) / den))
        new = _objective(R, a)
        trace.append(new)
        if new < 1e-28 or abs(obj - new) <= tol * obj:
            return OneFactorFit(_orient(a), new, it, tuple(trace))
        obj = new
    raise ConvergenceError(
        f"1-factor fit did not converge in {max_iter} iterations (objective {obj:.3g})",
        loadings=_orient(a), trace=trace)


@dataclass(frozen=True, eq=False)
class ResidualReport:
    D: np.ndarray
    strong_residual_flags: np.ndarray
    thresholds: tuple

    def flagged(self):
        return [int(j) for j in np.flatnonzero(self.strong_residual_flags)]


def residual_report(R_data, fit: OneFactorFit, t_max=DEFAULT_T_MAX, t_rowsum=None):
    R_data = np.asarray(getattr(R_data, "values", R_data), dtype=float)
    if R_data.shape[0] != fit.loadings.shape[0]:
        raise ValueError("fit and correlation matrix dimensions differ")
    if t_rowsum is None:
        t_rowsum = default_t_rowsum(R_data.shape[0])
    D = np.abs(fit.implied() - R_data)
    np.fill_diagonal(D, 0.0)
    flags = (D.max(axis=1) > t_max) | (D.sum(axis=1) > t_rowsum)
    return ResidualReport(D, flags, (float(t_max), float(t_rowsum)))


@dataclass(frozen=True, eq=False)
class ProxyVariable:
    group_id: str
    values: np.ndarray
    member_columns: tuple
    # the per-sample mean of member z-scores is re-ranked to the z-scale
    restandardized: bool = field(default=True)


def make_proxy(z, member_columns, group_id="1") -> ProxyVariable:
    members = tuple(int(j) for j in member_columns)
    if not members:
        raise ValueError("proxy needs at least one member column")
    values = np.asarray(getattr(z, "values", z), dtype=float)
    avg = values[:, list(members)].mean(axis=1)
    return ProxyVariable(str(group_id), normal_scores(avg), members)


def _check_loadings(x, what="loading"):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) >= 1.0):
        raise ValueError(f"every {what} must lie in (-1, 1)")
    return x


def simulate_one_factor(loadings, include_latent=False, names=None) -> CorrelationMatrix:
    """Sigma = A A^T + Psi^2, or the matrix bordered by the latent column W."""
    a = _check_loadings(loadings)
    d = a.size
    S = np.outer(a, a)
    np.fill_diagonal(S, 1.0)
    if names is None:
        names = [str(j + 1) for j in range(d)]
    names = list(names)
    if include_latent:
        S = np.block([[S, a[:, None]], [a[None, :], np.ones((1, 1))]])
        names.append("W")
    return CorrelationMatrix(S, tuple(names))


def _group_labels(groups, d):
    labels = np.full(d, -1)
    for g, members in enumerate(groups):
        for j in members:
            if not 0 <= j < d or labels[j] != -1:
                raise PartitionError("groups must be disjoint and lie within range")
            labels[j] = g
    if np.any(labels < 0):
        raise PartitionError("groups must cover all variables")
    return labels


def simulate_bifactor(global_loadings, group_partial_loadings, groups, names=None):
    """Bi-factor correlation matrix; ``groups`` is a list of index lists."""
    g = _check_loadings(global_loadings, "global loading")
    delta = _check_loadings(group_partial_loadings, "group partial loading")
    if g.shape != delta.shape:
        raise ValueError("loading vectors differ in length")
    labels = _group_labels(groups, g.size)
    s = np.sqrt(1.0 - g ** 2)
    same = labels[:, None] == labels[None, :]
    S = np.outer(g, g) + same * np.outer(delta * s, delta * s)
    np.fill_diagonal(S, 1.0)
    return CorrelationMatrix(S, names)


def sample_bifactor_parameters(group_sizes, global_range=(0.3, 0.8),
                               local_range=(0.4, 0.7), seed=None):
    rng = np.random.default_rng(seed)
    d = int(sum(group_sizes))
    gamma = rng.uniform(*global_range, size=d)
    delta = rng.uniform(*local_range, size=d)
    bounds = np.cumsum([0, *group_sizes])
    groups = [list(range(bounds[k], bounds[k + 1])) for k in range(len(group_sizes))]
    return gamma, delta, groups


def sample_one_factor(loadings, n, seed=None):
    """Draw n samples of Z_j = a_j W + psi_j e_j; returns (Z, W)."""
    a = _check_loadings(loadings)
    rng = np.random.default_rng(seed)
    W = rng.standard_normal(n)
    E = rng.standard_normal((n, a.size))
    return W[:, None] * a + E * np.sqrt(1.0 - a ** 2), W


def sample_bifactor(gamma, delta, groups, n, seed=None):
    """Draw n samples from the bi-factor model; returns (Z, latent) with latent[:, 0] global."""
    gamma = _check_loadings(gamma)
    delta = _check_loadings(delta)
    labels = _group_labels(groups, gamma.size)
    rng = np.random.default_rng(seed)
    W0 = rng.standard_normal(n)
    Wg = rng.standard_normal((n, len(groups)))
    E = rng.standard_normal((n, gamma.size))
    local = Wg[:, labels] * delta + E * np.sqrt(1.0 - delta ** 2)
    Z = W0[:, None] * gamma + local * np.sqrt(1.0 - gamma ** 2)
    return Z, np.column_stack([W0, Wg])
