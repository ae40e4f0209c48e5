"""Graph-based kernel measures of association and independence tests."""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import DegenerateDataError, InvalidConfigError, KmacError  # noqa: E402
from .estimators import (  # noqa: E402
    AssociationEstimate,
    CltScaling,
    clt_scaling_linear,
    clt_scaling_standard,
    eta_hat,
    eta_hat_lin,
    numerator_stat,
    t_n_energy,
)
from .geograph import (  # noqa: E402
    GeoGraph,
    GraphSpec,
    assumption_report,
    build_knn,
    build_mst,
    common_neighbors,
    graph_stats,
    parse_graph,
)
from .inference import (  # noqa: E402
    TestReport,
    asymptotic_test,
    dcor2,
    dcov_test,
    hsic_test,
    permutation_test,
)
from .kernels import KernelSpec, kernel_eval, kernel_self_diag, parse_kernel  # noqa: E402
from .oracles import (  # noqa: E402
    GaussianPairSpec,
    SettingSpec,
    eta_population_mc,
    sample_setting,
    t1_gaussian,
    t2_gaussian,
    t_alpha_gaussian,
)
from .ranks import (  # noqa: E402
    TargetGrid,
    chatterjee_xi,
    eta_hat_rank,
    halton,
    lattice1d,
    make_grid,
    rank_clt_scaling,
    solve_assignment,
)

__all__ = [
    "AssociationEstimate", "CltScaling", "DegenerateDataError", "GaussianPairSpec",
    "GeoGraph", "GraphSpec", "InvalidConfigError", "KernelSpec", "KmacError",
    "SettingSpec", "TargetGrid", "TestReport", "assumption_report", "asymptotic_test",
    "build_knn", "build_mst", "chatterjee_xi", "clt_scaling_linear",
    "clt_scaling_standard", "common_neighbors", "dcor2", "dcov_test", "eta_hat",
    "eta_hat_lin", "eta_hat_rank", "eta_population_mc", "graph_stats", "halton",
    "hsic_test", "kernel_eval", "kernel_self_diag", "lattice1d", "make_grid",
    "numerator_stat", "parse_graph", "parse_kernel", "permutation_test",
    "rank_clt_scaling", "sample_setting", "solve_assignment", "t1_gaussian",
    "t2_gaussian", "t_alpha_gaussian", "t_n_energy",
]  # fmt: skip
