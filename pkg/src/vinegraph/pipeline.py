"""End-to-end orchestration: data -> z-scale -> groups -> proxies -> graphs -> exports."""

from __future__ import annotations

import contextlib
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import io as vio
from .correlation import CorrelationMatrix, empirical_corr, ridge_repair
from .errors import ConfigError, VinegraphError
from .factor import DEFAULT_T_MAX, default_t_rowsum, fit_one_factor, make_proxy, residual_report
from .graphs import (
    OBSERVED,
    PROXY,
    build_truncated_vine,
    export_graph,
    graph_cdg,
    graph_foci,
    graph_tc,
    vine_to_graph,
)
from .graphs.export import WRITERS
from .grouping import DEFAULT_TAU_WEAK, choose_m, clv_partition, separate_weak
from .transform import impute_missing, rank_to_normal, reorient

logger = logging.getLogger(__name__)

BASE_METHODS = ("tc", "cdg", "foci", "vine")
ALL_METHODS = BASE_METHODS + tuple(m + "+proxy" for m in BASE_METHODS)
SELECTORS = ALL_METHODS + ("all",)

PRESETS = {
    "table1": {
        "tau_tc": 0.2, "tau_cdg": 0.2, "tau_foci": 0.2,
        "draw_thresholds": (0.2, 0.2, 0.2), "max_level": 2,
    },
    "yeast": {
        "draw_thresholds": (0.25, 0.15, 0.30), "label_thresholds": (0.5, 0.3, 0.4), "m": 4,
    },
    "prostate": {
        "draw_thresholds": (0.30, 0.15, 0.30), "label_thresholds": (0.5, 0.3, 0.4), "m": 6,
        "tau_cdg": 0.1,
    },
}


class PipelineError(VinegraphError):
    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}", stage)


@contextlib.contextmanager
def stage(name):
    try:
        yield
    except PipelineError:
        raise
    except VinegraphError as exc:
        raise PipelineError(name, str(exc)) from exc
    except (ValueError, ArithmeticError, OSError, np.linalg.LinAlgError) as exc:
        raise PipelineError(name, f"{type(exc).__name__}: {exc}") from exc


def _floats(v):
    if isinstance(v, str):
        v = [x for x in v.replace(";", ",").split(",") if x.strip()]
    return tuple(float(x) for x in v)


def _opt_int(v):
    return None if v in (None, "", "auto") else int(v)


def _opt_float(v):
    return None if v in (None, "", "auto") else float(v)


def _opt_str(v):
    return None if v in (None, "") else str(v)


def _labels(v):
    if v in (None, "", "all"):
        return None
    if isinstance(v, str):
        v = v.split(",")
    return tuple(str(x).strip() for x in v)


def _formats(v):
    if isinstance(v, str):
        v = v.split(",")
    return tuple(str(x).strip() for x in v)


_PARSERS = {
    "input": _opt_str, "sep": _opt_str, "method": str,
    "tau_tc": float, "tau_cdg": float, "tau_foci": float, "tau_weak": float,
    "t_max": float, "t_rowsum": _opt_float,
    "draw_thresholds": _floats, "label_thresholds": _floats, "tree1_label_threshold": float,
    "stop_threshold": float, "max_level": int, "m": _opt_int, "seed": int,
    "output_dir": _opt_str, "formats": _formats, "groups": _labels,
}


@dataclass(frozen=True)
class PipelineConfig:
    input: str = None
    sep: str = None
    method: str = "vine+proxy"
    tau_tc: float = 0.2
    tau_cdg: float = 0.2
    tau_foci: float = 0.2
    tau_weak: float = DEFAULT_TAU_WEAK
    t_max: float = DEFAULT_T_MAX
    t_rowsum: float = None  # None: 0.25 * (d_g - 1) * 0.5 per group
    draw_thresholds: tuple = (0.2, 0.2, 0.2)
    label_thresholds: tuple = (0.5, 0.3, 0.4)
    tree1_label_threshold: float = 0.0
    stop_threshold: float = 0.1
    max_level: int = 3
    m: int = None  # None: scan for the number of groups
    seed: int = 0
    output_dir: str = None
    formats: tuple = ("dot", "graphml", "json")
    groups: tuple = None
    sources: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("tau_tc", "tau_cdg", "tau_foci", "tau_weak", "t_max", "stop_threshold",
                     "tree1_label_threshold"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ConfigError(f"{name} must lie in [0, 1)")
        for name in ("draw_thresholds", "label_thresholds"):
            vals = getattr(self, name)
            if len(vals) != 3 or not all(0.0 <= t < 1.0 for t in vals):
                raise ConfigError(f"{name} needs three values in [0, 1) for orders 1, 2, 3+")
        if self.t_rowsum is not None and self.t_rowsum < 0:
            raise ConfigError("t_rowsum must be non-negative")
        if self.method not in SELECTORS:
            raise ConfigError(f"method must be one of {SELECTORS}")
        if self.max_level < 1:
            raise ConfigError("max_level must be at least 1")
        if self.m is not None and self.m < 1:
            raise ConfigError("m must be positive")
        if self.seed is None:
            raise ConfigError("a seed is required")
        bad = [f for f in self.formats if f not in WRITERS]
        if bad:
            raise ConfigError(f"unknown export formats {bad}")

    @classmethod
    def build(cls, preset=None, config_file=None, overrides=None):
        """Defaults < preset < config file < explicit overrides; ``sources`` records which."""
        values, sources = {}, {}
        if preset:
            if preset not in PRESETS:
                raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
            for k, v in PRESETS[preset].items():
                values[k], sources[k] = v, f"preset:{preset}"
        if config_file:
            for k, v in read_config_file(config_file).items():
                values[k], sources[k] = v, "config"
        for k, v in (overrides or {}).items():
            if v is not None:
                values[k], sources[k] = v, "cli"
        parsed = {}
        for k, v in values.items():
            if k not in _PARSERS:
                raise ConfigError(f"unknown config key {k!r}")
            try:
                parsed[k] = _PARSERS[k](v)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {k}: {v!r} ({exc})") from None
        return cls(**parsed, sources=sources)

    def source(self, name):
        return self.sources.get(name, "default")

    def effective(self):
        """Every parameter with its value and whether it came from a default."""
        out = {}
        for f in fields(self):
            if f.name == "sources":
                continue
            v = getattr(self, f.name)
            out[f.name] = {"value": list(v) if isinstance(v, tuple) else v,
                           "defaulted": self.source(f.name) == "default",
                           "source": self.source(f.name)}
        return out

    def selected(self):
        return ALL_METHODS if self.method == "all" else (self.method,)


def read_config_file(path):
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key] = value
    return out


@dataclass
class RunReport:
    parameters: dict = field(default_factory=dict)
    m: int = None
    m_defaulted: bool = None
    m_scan: dict = field(default_factory=dict)
    group_sizes: list = field(default_factory=list)
    groups: dict = field(default_factory=dict)
    isolated: list = field(default_factory=list)
    flipped: list = field(default_factory=list)
    proxies: dict = field(default_factory=dict)
    flagged: dict = field(default_factory=dict)
    residual_thresholds: dict = field(default_factory=dict)
    imputation: dict = field(default_factory=dict)
    pd_repair: dict = field(default_factory=dict)
    edge_counts: dict = field(default_factory=dict)
    edges: dict = field(default_factory=dict)
    degrees: dict = field(default_factory=dict)
    degree_distribution: dict = field(default_factory=dict)
    truncation_levels: dict = field(default_factory=dict)
    attachment: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(_jsonable(self.to_dict()), indent=2, sort_keys=True) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


@dataclass
class PipelineResult:
    graphs: dict
    report: RunReport
    z: object = None
    corr: CorrelationMatrix = None
    partition: object = None
    heatmap: CorrelationMatrix = None
    data: object = None


def _record_graph(report, key, g):
    report.edge_counts[key] = len(g)
    names = g.names
    report.edges[key] = [[names[e.a], names[e.b]] for e in g.edges]
    deg = g.degrees()
    report.degrees[key] = deg
    dist = {}
    for v in deg.values():
        dist[v] = dist.get(v, 0) + 1
    report.degree_distribution[key] = dict(sorted(dist.items()))


def _run_methods(R, kinds, methods, config, report, suffix=""):
    graphs = {}
    needs_pd = any(m in ("cdg", "vine") for m in methods)
    if needs_pd:
        with stage("correlation"):
            R_pd, repaired = ridge_repair(R)
        report.pd_repair[suffix.strip("+") or "observed"] = repaired
    for m in methods:
        key = m + suffix
        with stage(key):
            if m == "tc":
                g = graph_tc(R, config.tau_tc, kinds)
            elif m == "cdg":
                g = graph_cdg(R_pd, config.tau_cdg, kinds)
            elif m == "foci":
                g = graph_foci(R, config.tau_foci, kinds)
            else:
                level = min(config.max_level, R.d - 1)
                v = build_truncated_vine(R_pd, level, config.stop_threshold)
                g = vine_to_graph(v, config.draw_thresholds, config.label_thresholds,
                                  config.tree1_label_threshold, kinds, method=key)
                report.truncation_levels[key] = v.truncation_level
                g.metadata["tree1"] = [[int(x) for x in e.conditioned] for e in v.trees[0]]
        graphs[key] = g
        _record_graph(report, key, g)
    return graphs


def compare_methods(R, config=None, kinds=None):
    """All four constructions at shared thresholds on a given matrix."""
    config = config or PipelineConfig()
    if not isinstance(R, CorrelationMatrix):
        R = CorrelationMatrix(R)
    report = RunReport(parameters=config.effective())
    graphs = _run_methods(R, kinds, BASE_METHODS, config, report)
    return graphs, report


def _group_filter(config, clv, part):
    """Observed variables of the selected groups, including members later separated out."""
    if config.groups is None:
        return None
    wanted = set(config.groups)
    known = {str(k + 1) for k in range(part.m)}
    if wanted - known:
        raise ConfigError(f"unknown group labels {sorted(wanted - known)}")
    clv_of = clv.assignment()
    final = part.assignment()
    # each surviving group sits inside exactly one clustering group
    origin = {int(clv_of[g[0]]): str(k + 1) for k, g in enumerate(part.groups)}
    keep = []
    for j in range(part.d):
        label = str(final[j] + 1) if final[j] >= 0 else origin.get(int(clv_of[j]))
        if label in wanted:
            keep.append(j)
    return keep


def run_pipeline(config: PipelineConfig, data=None) -> PipelineResult:
    """Run every stage in memory; outputs are written only after all stages succeed."""
    report = RunReport(parameters=config.effective())
    with stage("input"):
        if data is None:
            if not config.input:
                raise ConfigError("no input given")
            data = vio.read_data(config.input, config.sep)

    with stage("impute"):
        data_full, imp = impute_missing(data)
        report.imputation = imp.to_dict()
    with stage("transform"):
        z = rank_to_normal(data_full)
        R0 = empirical_corr(z)
    names = list(z.base_names)

    with stage("cluster"):
        if config.m is None:
            m, scan = choose_m(R0.values, config.seed)
            report.m_scan = scan
            report.m_defaulted = True
        else:
            m = config.m
            report.m_defaulted = False
        clv = clv_partition(R0.values, m, config.seed)
        part = separate_weak(clv, R0.values, config.tau_weak)
        report.m = m

    flip, fits = [], {}
    with stage("fit"):
        for k, g in enumerate(part.groups):
            fit = fit_one_factor(R0.values[np.ix_(g, g)])
            fits[k] = fit
            flip += [j for j, a in zip(g, fit.loadings) if a < 0]
        z = reorient(z, flip)
        R = empirical_corr(z)
    report.flipped = [names[j] for j in sorted(flip)]

    proxies = []
    with stage("proxy"):
        for k, g in enumerate(part.groups):
            label = str(k + 1)
            sub = R.values[np.ix_(g, g)]
            oriented = fits[k].loadings * np.array([-1.0 if j in flip else 1.0 for j in g])
            fit = type(fits[k])(oriented, fits[k].objective, fits[k].n_iter, fits[k].trace)
            t_rowsum = config.t_rowsum if config.t_rowsum is not None else default_t_rowsum(len(g))
            rep = residual_report(sub, fit, config.t_max, t_rowsum)
            flagged = [g[i] for i in rep.flagged()]
            members = [j for j in g if j not in flagged]
            report.groups[label] = [z.variable_names[j] for j in g]
            report.group_sizes.append(len(g))
            report.flagged[label] = [z.variable_names[j] for j in flagged]
            report.residual_thresholds[label] = {
                "t_max": config.t_max, "t_rowsum": t_rowsum,
                "t_max_defaulted": config.source("t_max") == "default",
                "t_rowsum_defaulted": config.t_rowsum is None,
            }
            if not members:
                report.notes.append(f"group {label}: every member flagged; no proxy built")
                continue
            proxies.append(make_proxy(z, members, label))
            report.proxies[f"proxy{label}"] = [z.variable_names[j] for j in members]
        report.isolated = [z.variable_names[j] for j in part.isolated]
    if proxies:
        report.notes.append("proxy = rank-to-normal re-standardization of the mean member z-score")
    report.notes.append("foci keeps (i, j) when |r_ij| >= tau and min_k modified statistic >= tau")

    obs_names = list(z.variable_names)
    aug_values = np.column_stack([z.values] + [p.values for p in proxies]) if proxies else z.values
    aug_names = obs_names + [f"proxy{p.group_id}" for p in proxies]
    kinds = [OBSERVED] * len(obs_names) + [PROXY] * len(proxies)
    with stage("correlation"):
        R_aug = empirical_corr(aug_values, aug_names)

    with stage("cluster"):
        keep = _group_filter(config, clv, part)
    obs_idx = list(range(len(obs_names))) if keep is None else keep
    if keep is None:
        prox_idx = list(range(len(obs_names), len(aug_names)))
    else:
        chosen = set(config.groups)
        prox_idx = [len(obs_names) + k for k, p in enumerate(proxies) if p.group_id in chosen]

    selected = config.selected()
    base = [m for m in BASE_METHODS if m in selected]
    with_proxy = [m[: -len("+proxy")] for m in selected if m.endswith("+proxy")]
    graphs = {}
    if base:
        R_obs = R_aug.submatrix(obs_idx)
        graphs.update(_run_methods(R_obs, None, base, config, report))
    if with_proxy:
        idx = obs_idx + prox_idx
        graphs.update(_run_methods(R_aug.submatrix(idx), [kinds[i] for i in idx], with_proxy,
                                   config, report, "+proxy"))
        if "vine+proxy" in graphs:
            report.attachment = _attachment(graphs["vine+proxy"], report.groups, report.proxies)

    heat_order = part.order()
    result = PipelineResult(graphs, report, z, R_aug, part, R.submatrix(heat_order), data_full)
    if config.output_dir:
        with stage("export"):
            write_outputs(result, config)
    return result


def _attachment(g, groups, proxies):
    """Per group, share of members adjacent to the group's proxy in tree 1."""
    names = g.names
    tree1 = {frozenset((names[a], names[b])) for a, b in g.metadata.get("tree1", [])}
    out = {}
    for label, members in groups.items():
        proxy = f"proxy{label}"
        if proxy not in proxies or proxy not in names:
            continue
        present = [n for n in members if n in names]
        if present:
            hits = sum(frozenset((n, proxy)) in tree1 for n in present)
            out[label] = hits / len(present)
    return out


def write_outputs(result: PipelineResult, config: PipelineConfig):
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    for key, g in sorted(result.graphs.items()):
        stem = key.replace("+", "_")
        for fmt in config.formats:
            export_graph(g, fmt, os.path.join(out, f"{stem}.{fmt}"))
    with open(os.path.join(out, "report.json"), "w", newline="\n") as fh:
        fh.write(result.report.to_json())
    write_degree_table(os.path.join(out, "degrees.tsv"), result.report)
    write_edge_table(os.path.join(out, "edges.tsv"), result.report)
    if result.partition is not None:
        vio.write_partition(os.path.join(out, "partition.tsv"), result.partition,
                            list(result.z.variable_names))
    if result.heatmap is not None:
        vio.write_corr(os.path.join(out, "heatmap_corr.tsv"), result.heatmap)


def write_degree_table(path, report: RunReport):
    methods = sorted(report.degrees)
    nodes = []
    for m in methods:
        nodes += [n for n in report.degrees[m] if n not in nodes]
    with open(path, "w", newline="\n") as fh:
        fh.write("\t".join(["node"] + methods) + "\n")
        for n in nodes:
            row = [str(report.degrees[m].get(n, "")) for m in methods]
            fh.write("\t".join([n] + row) + "\n")


def write_edge_table(path, report: RunReport):
    with open(path, "w", newline="\n") as fh:
        fh.write("method\tn_edges\tedges\n")
        for m in sorted(report.edges):
            edges = ", ".join(f"{a}--{b}" for a, b in report.edges[m])
            fh.write(f"{m}\t{report.edge_counts[m]}\t{edges}\n")
