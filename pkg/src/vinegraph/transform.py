"""Rank transform to the z-scale, copula surrogate imputation and re-orientation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri
from scipy.stats import rankdata

from .errors import DegenerateVariableError, ImputationError, NotImputedError

logger = logging.getLogger(__name__)

FLIP_MARKER = "-"
MIN_JOINT_OBS = 10
SURROGATE_FLOOR = 0.3


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """Raw samples x variables table; missing cells are NaN."""

    values: np.ndarray
    variable_names: tuple
    sample_ids: tuple

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 2:
            raise ValueError("values must be a 2-d array")
        n, d = values.shape
        if n < 3 or d < 2:
            raise ValueError(f"need n >= 3 samples and d >= 2 variables, got {n}x{d}")
        names = tuple(str(v) for v in self.variable_names)
        ids = tuple(str(s) for s in self.sample_ids)
        if len(names) != d or len(ids) != n:
            raise ValueError("name/id lengths do not match the value matrix")
        for j, name in enumerate(names):
            col = values[:, j]
            obs = col[~np.isnan(col)]
            if obs.size == 0:
                raise DegenerateVariableError(f"variable {name!r} is entirely missing")
            if np.all(obs == obs[0]):
                raise DegenerateVariableError(f"variable {name!r} is constant on its observed cells")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "variable_names", names)
        object.__setattr__(self, "sample_ids", ids)

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return (self.variable_names == other.variable_names and self.sample_ids == other.sample_ids
                and np.array_equal(self.values, other.values, equal_nan=True))

    @classmethod
    def from_array(cls, values, variable_names=None, sample_ids=None):
        values = np.asarray(values, dtype=float)
        n, d = values.shape
        if variable_names is None:
            variable_names = [f"V{j + 1}" for j in range(d)]
        if sample_ids is None:
            sample_ids = [f"S{i + 1}" for i in range(n)]
        return cls(values, tuple(variable_names), tuple(sample_ids))

    @property
    def shape(self):
        return self.values.shape

    @property
    def missing(self):
        return np.isnan(self.values)

    def has_missing(self):
        return bool(self.missing.any())


@dataclass(frozen=True, eq=False)
class ZMatrix:
    """Data on the z-scale with the sign applied to each column.

    ``variable_names`` holds the display names: columns with orientation -1
    carry a trailing ``-``.
    """

    values: np.ndarray
    orientation: tuple
    variable_names: tuple
    sample_ids: tuple = ()

    def __post_init__(self):
        values = _frozen(self.values)
        d = values.shape[1]
        orientation = tuple(int(s) for s in self.orientation)
        if len(orientation) != d or any(s not in (1, -1) for s in orientation):
            raise ValueError("orientation must hold one sign (+1/-1) per column")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "orientation", orientation)
        object.__setattr__(self, "variable_names", tuple(self.variable_names))
        object.__setattr__(self, "sample_ids", tuple(self.sample_ids))

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return (self.variable_names == other.variable_names and self.orientation == other.orientation and self.sample_ids == other.sample_ids
                and np.array_equal(self.values, other.values, equal_nan=True))

    @property
    def shape(self):
        return self.values.shape

    @property
    def base_names(self):
        return tuple(
            name[: -len(FLIP_MARKER)] if s == -1 and name.endswith(FLIP_MARKER) else name
            for name, s in zip(self.variable_names, self.orientation)
        )

    def flipped(self):
        return [j for j, s in enumerate(self.orientation) if s == -1]


def normal_scores(x):
    """Phi^-1((rank - 0.5) / n) with average ranks for ties."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    return ndtri((rankdata(x) - 0.5) / n)


def rank_to_normal(data: DataMatrix) -> ZMatrix:
    if data.has_missing():
        cols = [data.variable_names[j] for j in np.flatnonzero(data.missing.any(axis=0))]
        raise NotImputedError(f"missing cells present in {cols}; run impute_missing first")
    z = np.empty_like(data.values)
    for j in range(data.shape[1]):
        col = data.values[:, j]
        if np.all(col == col[0]):
            raise DegenerateVariableError(f"variable {data.variable_names[j]!r} is constant")
        z[:, j] = normal_scores(col)
    return ZMatrix(z, (1,) * data.shape[1], data.variable_names, data.sample_ids)


@dataclass
class ImputationReport:
    """What impute_missing did for each incomplete variable."""

    surrogates: dict = field(default_factory=dict)  # name -> (surrogate name, corr, beta)
    median_filled: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    skipped: bool = False

    def to_dict(self):
        return {
            "skipped": self.skipped,
            "surrogates": {
                k: {"surrogate": s, "correlation": c, "beta": b}
                for k, (s, c, b) in self.surrogates.items()
            },
            "median_filled": list(self.median_filled),
            "warnings": list(self.warnings),
        }


def _quantile_map(x_obs):
    """Sorted observed values paired with their z-scale grid positions."""
    xs = np.sort(x_obs)
    grid = ndtri((np.arange(1, xs.size + 1) - 0.5) / xs.size)
    return xs, grid


def impute_missing(data: DataMatrix, floor: float = SURROGATE_FLOOR,
                   min_joint: int = MIN_JOINT_OBS):
    """Fill missing cells by regression on a surrogate variable on the z-scale.

    Returns ``(DataMatrix, ImputationReport)``. Observed cells are never altered.
    """
    report = ImputationReport()
    mask = data.missing
    if not mask.any():
        report.skipped = True
        return data, report

    values = np.array(data.values, copy=True)
    complete = np.flatnonzero(~mask.any(axis=0))
    for v in np.flatnonzero(mask.any(axis=0)):
        name = data.variable_names[v]
        obs = ~mask[:, v]
        if complete.size == 0 or obs.sum() < min_joint:
            raise ImputationError(f"no eligible surrogate for variable {name!r}")

        zv = normal_scores(data.values[obs, v])
        best, best_corr = None, -1.0
        ties = []
        for s in complete:
            zs = normal_scores(data.values[obs, s])
            r = float(np.corrcoef(zv, zs)[0, 1])
            if abs(r) > best_corr + 1e-15:
                best, best_corr, ties = s, abs(r), [s]
            elif abs(abs(r) - best_corr) <= 1e-15:
                ties.append(s)
        if len(ties) > 1:
            msg = (f"{name}: surrogate tie among {[data.variable_names[t] for t in ties]}, "
                   f"kept lowest index {data.variable_names[best]}")
            report.warnings.append(msg)

        if best_corr < floor:
            fill = float(np.median(data.values[obs, v]))
            values[~obs, v] = fill
            report.median_filled.append(name)
            msg = f"{name}: best surrogate |r|={best_corr:.3f} below {floor}; median fill"
            report.warnings.append(msg)
            logger.warning(msg)
            continue

        s_obs = data.values[obs, best]
        zs = normal_scores(s_obs)
        beta = float(zs @ zv / (zs @ zs))
        # z-scale of the surrogate at rows where v is missing
        s_sorted, s_grid = _quantile_map(s_obs)
        zs_miss = np.interp(data.values[~obs, best], s_sorted, s_grid)
        v_sorted, v_grid = _quantile_map(data.values[obs, v])
        values[~obs, v] = np.interp(beta * zs_miss, v_grid, v_sorted)
        report.surrogates[name] = (data.variable_names[best], best_corr, beta)

    out = DataMatrix(values, data.variable_names, data.sample_ids)
    return out, report


def reorient(z: ZMatrix, flip) -> ZMatrix:
    flip = sorted(set(int(j) for j in flip))
    d = z.shape[1]
    if any(j < 0 or j >= d for j in flip):
        raise IndexError(f"flip indices must lie in [0, {d})")
    if not flip:
        return z
    values = np.array(z.values, copy=True)
    values[:, flip] *= -1.0
    orientation = list(z.orientation)
    for j in flip:
        orientation[j] = -orientation[j]
    base = z.base_names
    names = tuple(b + FLIP_MARKER if s == -1 else b for b, s in zip(base, orientation))
    return ZMatrix(values, tuple(orientation), names, z.sample_ids)
