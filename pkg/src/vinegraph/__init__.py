"""Dependence graphs from low-order partial correlations, truncated vines and
group latent proxies."""

from .correlation import (
    CorrelationMatrix,
    empirical_corr,
    log_det,
    partial_corr_given_rest,
    partial_corr_recursive,
    ridge_repair,
)
from .factor import (
    fit_one_factor,
    make_proxy,
    residual_report,
    simulate_bifactor,
    simulate_one_factor,
)
from .graphs import (
    DependenceGraph,
    VineStructure,
    build_truncated_vine,
    export_graph,
    graph_cdg,
    graph_foci,
    graph_tc,
    validate_vine,
    vine_to_graph,
)
from .grouping import GroupPartition, clv_partition, separate_weak
from .pipeline import PipelineConfig, RunReport, compare_methods, run_pipeline
from .transform import DataMatrix, ZMatrix, impute_missing, rank_to_normal, reorient

__version__ = "0.1.0"
