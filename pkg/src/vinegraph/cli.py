"""Command-line interface: ``vinegraph <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import io as vio
from .correlation import empirical_corr
from .errors import VinegraphError
from .factor import (
    default_t_rowsum,
    fit_one_factor,
    make_proxy,
    residual_report,
    sample_bifactor,
    sample_bifactor_parameters,
    sample_one_factor,
    simulate_bifactor,
    simulate_one_factor,
)
from .graphs import build_truncated_vine, export_graph, vine_to_graph
from .grouping import choose_m, clv_partition, separate_weak
from .pipeline import (
    PRESETS,
    SELECTORS,
    PipelineConfig,
    compare_methods,
    run_pipeline,
    stage,
    write_degree_table,
    write_edge_table,
)
from .transform import DataMatrix, impute_missing, rank_to_normal, reorient

log = logging.getLogger("vinegraph")

# flag name -> PipelineConfig field
CONFIG_FLAGS = {
    "method": ("--method", dict(choices=SELECTORS)),
    "tau_tc": ("--tau-tc", dict(type=float)),
    "tau_cdg": ("--tau-cdg", dict(type=float)),
    "tau_foci": ("--tau-foci", dict(type=float)),
    "tau_weak": ("--tau-weak", dict(type=float)),
    "t_max": ("--t-max", dict(type=float)),
    "t_rowsum": ("--t-rowsum", dict(type=float)),
    "draw_thresholds": ("--draw", dict(help="comma-separated thresholds for orders 1,2,3+")),
    "label_thresholds": ("--label", dict(help="comma-separated thresholds for orders 1,2,3+")),
    "tree1_label_threshold": ("--tree1-label", dict(type=float)),
    "stop_threshold": ("--stop-threshold", dict(type=float)),
    "max_level": ("--max-level", dict(type=int)),
    "m": ("--m", dict(help="number of groups, or 'auto'")),
    "seed": ("--seed", dict(type=int)),
    "formats": ("--formats", dict(help="comma-separated: dot,graphml,json")),
    "groups": ("--groups", dict(help="comma-separated group labels to keep")),
    "sep": ("--sep", dict(help="field separator (default: by file extension)")),
}


def _add_config_flags(p, only=None):
    for name, (flag, kw) in CONFIG_FLAGS.items():
        if only is None or name in only:
            p.add_argument(flag, dest=name, default=None, **kw)
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--config", help="flat key = value config file")


def _config(args, **extra):
    overrides = {k: getattr(args, k, None) for k in CONFIG_FLAGS}
    overrides.update({k: v for k, v in extra.items() if v is not None})
    return PipelineConfig.build(getattr(args, "preset", None), getattr(args, "config", None),
                                overrides)


def _load_z(path, sep=None):
    data = vio.read_data(path, sep)
    with stage("impute"):
        data, _ = impute_missing(data)
    with stage("transform"):
        return rank_to_normal(data)


def cmd_impute(args):
    data = vio.read_data(args.input, args.sep)
    with stage("impute"):
        out, report = impute_missing(data)
    vio.write_data(args.output, out)
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def cmd_transform(args):
    data = vio.read_data(args.input, args.sep)
    with stage("transform"):
        z = rank_to_normal(data)
        if args.flip:
            index = {n: j for j, n in enumerate(z.variable_names)}
            z = reorient(z, [index[n] for n in args.flip.split(",")])
    vio.write_matrix(args.output, z.values, z.sample_ids, z.variable_names, index_label="sample")


def cmd_cluster(args):
    cfg = _config(args)
    z = _load_z(args.input, cfg.sep)
    R = empirical_corr(z)
    with stage("cluster"):
        m = cfg.m if cfg.m is not None else choose_m(R.values, cfg.seed)[0]
        part = separate_weak(clv_partition(R.values, m, cfg.seed), R.values, cfg.tau_weak)
    vio.write_partition(args.output, part, list(z.variable_names))
    if args.heatmap:
        vio.write_corr(args.heatmap, R.submatrix(part.order()))
    print(f"m={m} groups={[len(g) for g in part.groups]} isolated={len(part.isolated)}")


def _fits(z, part, cfg):
    R = empirical_corr(z).values
    rows = []
    for k, g in enumerate(part.groups):
        with stage("fit"):
            fit = fit_one_factor(R[np.ix_(g, g)])
        t_rowsum = cfg.t_rowsum if cfg.t_rowsum is not None else default_t_rowsum(len(g))
        rep = residual_report(R[np.ix_(g, g)], fit, cfg.t_max, t_rowsum)
        for j, a, flag in zip(g, fit.loadings, rep.strong_residual_flags):
            rows.append((z.variable_names[j], str(k + 1), float(a), bool(flag)))
    return rows


def cmd_fit(args):
    cfg = _config(args)
    z = _load_z(args.input, cfg.sep)
    part = vio.read_partition(args.partition, list(z.variable_names))
    with open(args.output, "w", newline="\n") as fh:
        fh.write("variable_name\tgroup_label\tloading\tstrong_residual\n")
        for name, label, a, flag in _fits(z, part, cfg):
            fh.write(f"{name}\t{label}\t{a:.6f}\t{str(flag).lower()}\n")


def cmd_proxy(args):
    cfg = _config(args)
    z = _load_z(args.input, cfg.sep)
    part = vio.read_partition(args.partition, list(z.variable_names))
    rows = _fits(z, part, cfg)
    index = {n: j for j, n in enumerate(z.variable_names)}
    z = reorient(z, [index[n] for n, _, a, _ in rows if a < 0])
    cols, names = [], []
    for k in range(part.m):
        label = str(k + 1)
        members = [index[n] for n, g, _, flag in rows if g == label and not flag]
        if members:
            with stage("proxy"):
                cols.append(make_proxy(z, members, label).values)
            names.append(f"proxy{label}")
    vio.write_matrix(args.output, np.column_stack(cols), z.sample_ids, names,
                     index_label="sample")


def cmd_vine(args):
    cfg = _config(args)
    if args.corr:
        R = vio.read_corr(args.input, cfg.sep)
    else:
        R = empirical_corr(_load_z(args.input, cfg.sep))
    with stage("vine"):
        v = build_truncated_vine(R, min(cfg.max_level, R.d - 1), cfg.stop_threshold)
        g = vine_to_graph(v, cfg.draw_thresholds, cfg.label_thresholds, cfg.tree1_label_threshold)
    fmt = args.format or os.path.splitext(args.output)[1].lstrip(".") or "dot"
    export_graph(g, fmt, args.output)
    print(f"truncation_level={v.truncation_level} edges={len(g)}")


def cmd_compare(args):
    cfg = _config(args)
    R = vio.read_corr(args.input, cfg.sep)
    kinds = ["proxy" if n == "W" or n.startswith("proxy") else "observed"
             for n in R.variable_names]
    graphs, report = compare_methods(R, cfg, kinds)
    os.makedirs(args.output_dir, exist_ok=True)
    with stage("export"):
        for key, g in graphs.items():
            for fmt in cfg.formats:
                export_graph(g, fmt, os.path.join(args.output_dir, f"{key}.{fmt}"))
        write_edge_table(os.path.join(args.output_dir, "edges.tsv"), report)
        write_degree_table(os.path.join(args.output_dir, "degrees.tsv"), report)
        with open(os.path.join(args.output_dir, "report.json"), "w", newline="\n") as fh:
            fh.write(report.to_json())
    for key in graphs:
        print(f"{key}\t{report.edge_counts[key]}")


def cmd_pipeline(args):
    cfg = _config(args, input=args.input, output_dir=args.output_dir)
    if cfg.output_dir is None:
        raise SystemExit("pipeline: an output directory is required (--output-dir)")
    result = run_pipeline(cfg)
    r = result.report
    print(f"m={r.m} groups={r.group_sizes} isolated={len(r.isolated)} "
          f"edges={json.dumps(r.edge_counts, sort_keys=True)}")


def _float_pair(s):
    lo, hi = (float(x) for x in s.split(","))
    return lo, hi


def cmd_simulate(args):
    rng_seed = args.seed
    if args.model == "one-factor":
        if args.loadings:
            a = np.array([float(x) for x in args.loadings.split(",")])
        else:
            a = np.random.default_rng(rng_seed).uniform(*_float_pair(args.range), size=args.d)
        if args.samples:
            Z, W = sample_one_factor(a, args.samples, rng_seed)
            names = [str(j + 1) for j in range(a.size)]
            if args.latent:
                Z, names = np.column_stack([Z, W]), names + ["W"]
            data = DataMatrix.from_array(Z, names)
            vio.write_data(args.output, data)
        else:
            vio.write_corr(args.output, simulate_one_factor(a, args.latent))
    else:
        sizes = [int(x) for x in args.group_sizes.split(",")]
        gamma, delta, groups = sample_bifactor_parameters(
            sizes, _float_pair(args.global_range), _float_pair(args.local_range), rng_seed)
        if args.samples:
            Z, _ = sample_bifactor(gamma, delta, groups, args.samples, rng_seed + 1)
            vio.write_data(args.output, DataMatrix.from_array(Z))
        else:
            R = simulate_bifactor(gamma, delta, groups, [f"V{j + 1}" for j in range(sum(sizes))])
            vio.write_corr(args.output, R)


def build_parser():
    p = argparse.ArgumentParser(prog="vinegraph", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("impute", help="fill missing cells via a surrogate variable")
    s.add_argument("input")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--report")
    s.add_argument("--sep")
    s.set_defaults(func=cmd_impute)

    s = sub.add_parser("transform", help="rank-transform complete data to the z-scale")
    s.add_argument("input")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--flip", help="comma-separated variable names to negate")
    s.add_argument("--sep")
    s.set_defaults(func=cmd_transform)

    s = sub.add_parser("cluster", help="group variables and separate weak members")
    s.add_argument("input")
    s.add_argument("-o", "--output", required=True, help="partition table")
    s.add_argument("--heatmap", help="write the group-sorted correlation matrix here")
    _add_config_flags(s, {"m", "seed", "tau_weak", "sep"})
    s.set_defaults(func=cmd_cluster)

    s = sub.add_parser("fit", help="1-factor fits and strong-residual flags per group")
    s.add_argument("input")
    s.add_argument("--partition", required=True)
    s.add_argument("-o", "--output", required=True)
    _add_config_flags(s, {"t_max", "t_rowsum", "sep"})
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("proxy", help="proxy variable per group")
    s.add_argument("input")
    s.add_argument("--partition", required=True)
    s.add_argument("-o", "--output", required=True)
    _add_config_flags(s, {"t_max", "t_rowsum", "sep"})
    s.set_defaults(func=cmd_proxy)

    s = sub.add_parser("vine", help="truncated vine graph from data or a correlation matrix")
    s.add_argument("input")
    s.add_argument("--corr", action="store_true", help="input is a correlation matrix")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--format", choices=["dot", "graphml", "json"])
    _add_config_flags(s, {"max_level", "stop_threshold", "draw_thresholds", "label_thresholds",
                          "tree1_label_threshold", "sep"})
    s.set_defaults(func=cmd_vine)

    s = sub.add_parser("compare", help="all four graph methods on a correlation matrix")
    s.add_argument("input")
    s.add_argument("-o", "--output-dir", required=True)
    _add_config_flags(s)
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("pipeline", help="full run from raw data to graphs and report")
    s.add_argument("--input")
    s.add_argument("-o", "--output-dir")
    _add_config_flags(s)
    s.set_defaults(func=cmd_pipeline)

    s = sub.add_parser("simulate", help="factor-model correlation matrices or samples")
    s.add_argument("model", choices=["one-factor", "bifactor"])
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--samples", type=int, help="emit n samples instead of the matrix")
    s.add_argument("--loadings", help="one-factor: explicit comma-separated loadings")
    s.add_argument("--d", type=int, default=10, help="one-factor: number of variables")
    s.add_argument("--range", default="0.5,0.9", help="one-factor: loading interval")
    s.add_argument("--latent", action="store_true", help="one-factor: append W")
    s.add_argument("--group-sizes", default="20,20,20")
    s.add_argument("--global-range", default="0.3,0.8")
    s.add_argument("--local-range", default="0.4,0.7")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except VinegraphError as exc:
        msg = str(exc)
        if not msg.startswith("["):
            msg = f"[{exc.stage or args.command}] {msg}"
        print(f"vinegraph: {msg}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(f"vinegraph: [{args.command}] {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
