"""Correlation and partial-correlation engine."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotPositiveDefiniteError, SingularityError

PD_EPS = 1e-8
SINGULAR_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    values: np.ndarray
    variable_names: tuple = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("correlation matrix must be square")
        if not np.allclose(v, v.T, atol=1e-12, rtol=0):
            raise ValueError("correlation matrix must be symmetric")
        if not np.allclose(np.diag(v), 1.0, atol=1e-12, rtol=0):
            raise ValueError("correlation matrix must have a unit diagonal")
        if np.any(np.abs(v) > 1.0 + 1e-12):
            raise ValueError("correlations must lie in [-1, 1]")
        v = (v + v.T) / 2.0
        np.fill_diagonal(v, 1.0)
        v = np.clip(v, -1.0, 1.0)
        v.setflags(write=False)
        names = self.variable_names
        if names is None:
            names = tuple(str(j + 1) for j in range(v.shape[0]))
        names = tuple(str(n) for n in names)
        if len(names) != v.shape[0]:
            raise ValueError("one name per variable required")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "variable_names", names)

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return (self.variable_names == other.variable_names
                and np.array_equal(self.values, other.values, equal_nan=True))

    @property
    def d(self):
        return self.values.shape[0]

    @property
    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.values)[0])

    @property
    def is_positive_definite(self):
        return self.min_eigenvalue > PD_EPS

    def require_pd(self):
        if not self.is_positive_definite:
            raise NotPositiveDefiniteError(
                f"matrix is not positive definite (min eigenvalue {self.min_eigenvalue:.3g}); "
                "apply ridge_repair first")

    def submatrix(self, idx):
        idx = list(idx)
        return CorrelationMatrix(self.values[np.ix_(idx, idx)],
                                 tuple(self.variable_names[i] for i in idx))

    def permuted(self, perm):
        return self.submatrix(perm)


def empirical_corr(z, names=None):
    """Pearson correlation of the columns of ``z`` (a ZMatrix or an array)."""
    values = getattr(z, "values", z)
    values = np.asarray(values, dtype=float)
    if names is None:
        names = getattr(z, "variable_names", None)
    n = values.shape[0]
    if n < 3:
        raise ValueError("need at least 3 samples")
    sd = values.std(axis=0)
    if np.any(sd == 0):
        raise ValueError(f"constant columns: {list(np.flatnonzero(sd == 0))}")
    R = np.corrcoef(values, rowvar=False)
    R = (R + R.T) / 2.0
    np.fill_diagonal(R, 1.0)
    return CorrelationMatrix(np.clip(R, -1.0, 1.0), names)


def ridge_repair(R: CorrelationMatrix):
    """Shift the spectrum so the smallest eigenvalue exceeds PD_EPS, then rescale to unit diagonal.

    Returns ``(matrix, repaired)``.
    """
    lam = R.min_eigenvalue
    if lam > PD_EPS:
        return R, False
    v = R.values + (PD_EPS - lam + 1e-10) * np.eye(R.d)
    s = np.sqrt(np.diag(v))
    return CorrelationMatrix(v / np.outer(s, s), R.variable_names), True


class PartialCorrelator:
    """Memoized recursion for partial correlations of arbitrary order.

    The conditioning index peeled at each step is the smallest one, so results
    are reproducible; the cache is keyed by (pair, conditioning set).
    """

    def __init__(self, R):
        self.R = np.asarray(getattr(R, "values", R), dtype=float)
        self._cache = {}

    def __call__(self, i, j, L=()):
        i, j = int(i), int(j)
        L = frozenset(int(k) for k in L)
        if i == j:
            raise ValueError("i and j must differ")
        if i in L or j in L:
            raise ValueError("conditioning set must exclude i and j")
        return self._rho(min(i, j), max(i, j), L)

    def _rho(self, i, j, L):
        if not L:
            return float(self.R[i, j])
        key = (i, j, L)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        k = min(L)
        rest = L - {k}
        r_ij = self._rho(i, j, rest)
        r_ik = self._rho(*sorted((i, k)), rest)
        r_jk = self._rho(*sorted((j, k)), rest)
        den_i = 1.0 - r_ik * r_ik
        den_j = 1.0 - r_jk * r_jk
        for a, den in ((i, den_i), (j, den_j)):
            if den <= SINGULAR_EPS:
                raise SingularityError(
                    f"1 - rho^2 <= {SINGULAR_EPS} for ({a}, {k}) given {sorted(rest)}")
        val = (r_ij - r_ik * r_jk) / np.sqrt(den_i * den_j)
        val = float(min(1.0, max(-1.0, val)))
        self._cache[key] = val
        return val


def partial_corr_recursive(R, i, j, L=()):
    """Partial correlation of i and j given L by peeling one conditioning index at a time."""
    d = np.asarray(getattr(R, "values", R)).shape[0]
    if len(set(L)) > d - 2:
        raise ValueError("conditioning set too large")
    return PartialCorrelator(R)(i, j, L)


def partial_corr_given_rest(R) -> np.ndarray:
    """Full-order partial correlations, -s^ij / sqrt(s^ii s^jj) from the inverse."""
    if not isinstance(R, CorrelationMatrix):
        R = CorrelationMatrix(R)
    R.require_pd()
    K = np.linalg.inv(R.values)
    K = (K + K.T) / 2.0
    s = np.sqrt(np.diag(K))
    P = -K / np.outer(s, s)
    np.fill_diagonal(P, 1.0)
    return P


def log_det(R) -> float:
    if not isinstance(R, CorrelationMatrix):
        R = CorrelationMatrix(R)
    sign, ld = np.linalg.slogdet(R.values)
    if sign <= 0 or not R.is_positive_definite:
        raise NotPositiveDefiniteError("log_det requires a positive definite matrix")
    return float(ld)
