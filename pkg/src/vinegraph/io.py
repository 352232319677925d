"""Delimited text I/O for data matrices, correlation matrices and partitions."""

from __future__ import annotations

import os

import numpy as np
import pandas as pd

from .transform import DataMatrix

NA_VALUES = ["", "NA"]


def _sep_for(path, sep=None):
    if sep is not None:
        return sep
    ext = os.path.splitext(str(path))[1].lower()
    return "\t" if ext in (".tsv", ".tab", ".txt") else ","


def read_table(path, sep=None) -> pd.DataFrame:
    return pd.read_csv(path, sep=_sep_for(path, sep), index_col=0, na_values=NA_VALUES,
                       keep_default_na=False, dtype={0: str})


def read_data(path, sep=None) -> DataMatrix:
    """Header row of variable names, first column of sample ids; empty or NA cells are missing."""
    df = read_table(path, sep)
    try:
        values = df.to_numpy(dtype=float)
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric cell ({exc})") from None
    return DataMatrix(values, tuple(map(str, df.columns)), tuple(map(str, df.index)))


def write_matrix(path, values, row_names, col_names, sep=None, index_label=""):
    df = pd.DataFrame(np.asarray(values), index=list(row_names), columns=list(col_names))
    df.to_csv(path, sep=_sep_for(path, sep), index_label=index_label, float_format="%.10g",
              lineterminator="\n")


def write_data(path, data: DataMatrix, sep=None):
    write_matrix(path, data.values, data.sample_ids, data.variable_names, sep, index_label="sample")


def read_corr(path, sep=None):
    from .correlation import CorrelationMatrix

    df = read_table(path, sep)
    return CorrelationMatrix(df.to_numpy(dtype=float), tuple(map(str, df.columns)))


def write_corr(path, R, sep=None):
    write_matrix(path, R.values, R.variable_names, R.variable_names, sep)


def write_partition(path, partition, names, sep=None):
    """Two columns: variable_name, group_label ('isolated' reserved)."""
    sep = _sep_for(path, sep)
    labels = partition.labels(names)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"variable_name{sep}group_label\n")
        for name in names:
            fh.write(f"{name}{sep}{labels[name]}\n")


def read_partition(path, names, sep=None):
    from .grouping import GroupPartition

    df = pd.read_csv(path, sep=_sep_for(path, sep), dtype=str, keep_default_na=False)
    index = {n: j for j, n in enumerate(names)}
    groups, isolated = {}, []
    for name, label in zip(df.iloc[:, 0], df.iloc[:, 1]):
        if name not in index:
            raise ValueError(f"{path}: unknown variable {name!r}")
        if label == "isolated":
            isolated.append(index[name])
        else:
            groups.setdefault(label, []).append(index[name])
    ordered = [groups[k] for k in sorted(groups, key=lambda k: min(groups[k]))]
    return GroupPartition.build(ordered, isolated, len(names))
