"""Simulation protocols: coefficient curves, null QQ checks, log-log rate
slopes and power curves.  Each returns an :class:`ExperimentTable` whose
metadata records every argument and seed needed to rerun it bit-exactly.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import __version__
from ._rng import derive_seed, stream
from .errors import DegenerateDataError, InvalidConfigError
from .estimators import eta_hat, eta_hat_lin
from .geograph import GraphSpec, parse_graph
from .inference import (
    asymptotic_test,
    dcor2,
    dcov_test,
    hsic_test,
    permutation_test,
)
from .io import ExperimentTable
from .kernels import KernelSpec, parse_kernel
from .oracles import NULL_SETTINGS, POWER_SETTINGS, SettingSpec, sample_setting
from .ranks import eta_hat_rank

FULL_SCALE = {"n": 2000, "reps": 1000}


@dataclass(frozen=True)
class EstimatorConfig:
    """An (estimator kind, kernel, graph) triple, e.g. ``standard+distance+knn:k=1``."""

    kind: str
    kernel: KernelSpec
    graph: GraphSpec

    def __post_init__(self):
        if self.kind not in ("standard", "linear", "rank"):
            raise InvalidConfigError(f"unknown estimator kind {self.kind!r}")

    @property
    def label(self) -> str:
        k = self.kernel
        kern = k.family
        if k.family in ("gaussian", "laplace") and k.sigma != 1.0:
            kern += f"_s{k.sigma:g}"
        if k.family == "distance" and k.alpha != 1.0:
            kern += f"_a{k.alpha:g}"
        graph = "mst" if self.graph.kind == "mst" else f"{self.graph.k}nn"
        return f"{self.kind}_{kern}_{graph}"

    def __str__(self) -> str:
        return f"{self.kind}+{self.kernel}+{self.graph}"

    def estimate(self, x, y):
        if self.kind == "rank":
            return eta_hat_rank(x, y, self.kernel, self.graph)
        g = self.graph.build(x)
        fn = eta_hat_lin if self.kind == "linear" else eta_hat
        return fn(x, y, self.kernel, g)


def parse_config(text: str) -> EstimatorConfig:
    """Parse ``"kind+kernel+graph"``, e.g. ``"linear+distance:alpha=1+knn:k=20"``."""
    parts = text.split("+")
    if len(parts) != 3:
        raise InvalidConfigError(f"expected kind+kernel+graph, got {text!r}")
    return EstimatorConfig(parts[0].strip().lower(), parse_kernel(parts[1]), parse_graph(parts[2]))


def _configs(items) -> list[EstimatorConfig]:
    return [parse_config(c) if isinstance(c, str) else c for c in items]


COEFF_CONFIGS = (
    "standard+distance+knn:k=1",
    "linear+distance+knn:k=1",
    "standard+gaussian+knn:k=1",
    "linear+distance+knn:k=20",
)
QQ_CONFIGS = {
    "null1": ("standard+gaussian+mst", "standard+gaussian+knn:k=1"),
    "null2": ("linear+distance+knn:k=1", "linear+distance+knn:k=20"),
}
POWER_CONFIGS = (
    "standard+distance+knn:k=1",
    "standard+distance+knn:k=20",
    "linear+distance+knn:k=1",
    "linear+distance+knn:k=20",
)
DEFAULT_LAMBDAS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


def _meta(protocol: str, seed: int, **kw) -> dict:
    out = {"protocol": protocol, "seed": seed, "version": __version__}
    for k, v in kw.items():
        if isinstance(v, (list, tuple)):
            v = [str(c) if isinstance(c, EstimatorConfig) else c for c in v]
        elif isinstance(v, np.ndarray):
            v = v.tolist()
        out[k] = v
    return out


def run_coeff_curve(
    setting: str = "sinusoidal",
    grid=None,
    configs=COEFF_CONFIGS,
    n: int = 2000,
    reps: int = 10,
    seed: int = 0,
    include_dcor: bool = True,
    full_scale: bool = False,
) -> ExperimentTable:
    """Mean coefficient values along a noise (sinusoidal) or correlation (linear) grid."""
    if setting == "sinusoidal":
        name, axis = "coef-sinusoidal", "lambda"
        grid = np.linspace(0, 2.5, 11) if grid is None else np.asarray(grid, dtype=float)
    elif setting == "linear":
        name, axis = "coef-gaussian", "rho"
        grid = np.linspace(0, 1, 11) if grid is None else np.asarray(grid, dtype=float)
    else:
        raise InvalidConfigError("coefficient curves support 'sinusoidal' and 'linear'")
    if full_scale:
        n, reps = FULL_SCALE["n"], max(reps, 100)
    if grid.ndim != 1 or len(grid) == 0:
        raise InvalidConfigError("grid must be a nonempty 1-D list")
    cfgs = _configs(configs)
    cols = {axis: grid}
    means = np.zeros((len(cfgs), len(grid)))
    dc = np.zeros(len(grid))
    for gi, lam in enumerate(grid):
        for r in range(reps):
            x, y = sample_setting(SettingSpec(name, float(lam), n, derive_seed(seed, gi, r)))
            for ci, cfg in enumerate(cfgs):
                means[ci, gi] += cfg.estimate(x, y).value / reps
            if include_dcor:
                dc[gi] += dcor2(x, y) / reps
    for ci, cfg in enumerate(cfgs):
        cols[f"mean_{cfg.label}"] = means[ci]
    if include_dcor:
        cols["dcor2"] = dc
    meta = _meta("coeff-curve", seed, setting=setting, grid=grid, configs=cfgs, n=n, reps=reps)
    return ExperimentTable(cols, meta)


def run_qq_null(
    setting: str = "null2",
    config="linear+distance+knn:k=1",
    n: int = 500,
    reps: int = 500,
    seed: int = 0,
    full_scale: bool = False,
) -> ExperimentTable:
    """Sorted null z-values against normal quantiles with a KS summary."""
    if setting not in NULL_SETTINGS:
        raise InvalidConfigError(f"QQ runs need a null setting {NULL_SETTINGS}")
    if full_scale:
        n, reps = FULL_SCALE["n"], FULL_SCALE["reps"]
    if reps < 200:
        raise InvalidConfigError("QQ runs need reps >= 200")
    cfg = _configs([config])[0]
    if cfg.kind == "rank":
        raise InvalidConfigError("QQ runs cover the standard and linear kinds")
    z, degenerate = [], 0
    for r in range(reps):
        x, y = sample_setting(SettingSpec(setting, 0.0, n, derive_seed(seed, r)))
        try:
            z.append(asymptotic_test(cfg.kind, x, y, cfg.kernel, cfg.graph).z)
        except DegenerateDataError:
            degenerate += 1
    if degenerate > 0.01 * reps:
        raise DegenerateDataError(f"null variance degenerate in {degenerate}/{reps} replicates")
    z = np.sort(np.asarray(z))
    m = len(z)
    ks = stats.kstest(z, "norm")
    meta = _meta(
        "qq-null", seed, setting=setting, config=str(cfg), n=n, reps=reps,
        degenerate=degenerate, ks_distance=float(ks.statistic), ks_pvalue=float(ks.pvalue),
        mean_z=float(np.mean(z)), sd_z=float(np.std(z, ddof=1)),
    )
    quantiles = stats.norm.ppf((np.arange(1, m + 1) - 0.5) / m)
    return ExperimentTable({"z": z, "normal_quantile": quantiles}, meta)


def loglog_slope(log_n: np.ndarray, log_sd: np.ndarray) -> float:
    return float(np.polyfit(log_n, log_sd, 1)[0])


def run_loglog_rate(
    setting: str = "null1",
    configs=QQ_CONFIGS["null1"],
    n_grid=(256, 512, 1024, 2048),
    reps: int = 100,
    seed: int = 0,
    n_boot: int = 2000,
    full_scale: bool = False,
) -> ExperimentTable:
    """SD of the estimator numerator per n and the slope of log SD on log n.

    The 95% interval for each slope is a percentile bootstrap that resamples
    replicates within every n.
    """
    if setting not in NULL_SETTINGS:
        raise InvalidConfigError(f"rate runs need a null setting {NULL_SETTINGS}")
    if full_scale:
        reps = FULL_SCALE["reps"]
    if reps < 2:
        raise InvalidConfigError("need reps >= 2")
    cfgs = _configs(configs)
    n_grid = np.asarray(n_grid, dtype=int)
    nums = np.zeros((len(cfgs), len(n_grid), reps))
    for ni, n in enumerate(n_grid):
        for r in range(reps):
            x, y = sample_setting(SettingSpec(setting, 0.0, int(n), derive_seed(seed, ni, r)))
            for ci, cfg in enumerate(cfgs):
                nums[ci, ni, r] = cfg.estimate(x, y).numerator
    log_n = np.log(n_grid)
    cols = {"n": n_grid}
    slopes = {}
    rng = stream(seed, 0xB0)
    for ci, cfg in enumerate(cfgs):
        sd = np.std(nums[ci], axis=1, ddof=1)
        cols[f"sd_{cfg.label}"] = sd
        slope = loglog_slope(log_n, np.log(sd))
        idx = rng.integers(0, reps, size=(n_boot, len(n_grid), reps))
        boot_sd = np.std(np.take_along_axis(nums[ci][None], idx, axis=2), axis=2, ddof=1)
        boot = np.polyfit(log_n, np.log(boot_sd).T, 1)[0]
        lo, hi = np.percentile(boot, [2.5, 97.5])
        slopes[cfg.label] = {"slope": slope, "ci_low": float(lo), "ci_high": float(hi)}
    meta = _meta(
        "loglog", seed, setting=setting, configs=cfgs, n_grid=n_grid, reps=reps,
        n_boot=n_boot, slopes=slopes,
    )
    return ExperimentTable(cols, meta)


def run_power_curve(
    setting: str = "sinusoidal",
    lambdas=DEFAULT_LAMBDAS,
    configs=POWER_CONFIGS,
    n: int = 300,
    reps: int = 200,
    B: int = 1000,
    seed: int = 0,
    alpha: float = 0.05,
    baselines=("dcor", "hsic"),
    workers: int = 1,
    full_scale: bool = False,
) -> ExperimentTable:
    """Permutation-calibrated rejection rates along a noise grid.

    Within one replicate every test sees the same data and the same
    permutation seed.
    """
    if setting not in POWER_SETTINGS:
        raise InvalidConfigError(f"power runs need one of {POWER_SETTINGS}")
    if full_scale:
        reps = FULL_SCALE["reps"]
    unknown = set(baselines) - {"dcor", "hsic"}
    if unknown:
        raise InvalidConfigError(f"unknown baselines {sorted(unknown)}")
    if not 0 < alpha < 1:
        raise InvalidConfigError("alpha must lie in (0, 1)")
    cfgs = _configs(configs)
    lambdas = np.asarray(lambdas, dtype=float)
    names = [f"power_{c.label}" for c in cfgs] + [f"power_{b}" for b in baselines]
    rej = np.zeros((len(names), len(lambdas)))
    for li, lam in enumerate(lambdas):
        for r in range(reps):
            x, y = sample_setting(SettingSpec(setting, float(lam), n, derive_seed(seed, li, r)))
            pseed = derive_seed(seed, li, r, 1)
            pvals = [
                permutation_test(c.kind, x, y, c.kernel, c.graph, B, pseed, workers).p_value
                for c in cfgs
            ]
            for b in baselines:
                test = dcov_test if b == "dcor" else hsic_test
                pvals.append(test(x, y, B=B, seed=pseed, workers=workers).p_value)
            rej[:, li] += np.asarray(pvals) <= alpha
    cols = {"lambda": lambdas}
    for i, name in enumerate(names):
        cols[name] = rej[i] / reps
    meta = _meta(
        "power", seed, setting=setting, lambdas=lambdas, configs=cfgs, n=n, reps=reps,
        B=B, alpha=alpha, baselines=list(baselines),
    )
    return ExperimentTable(cols, meta)


def runtime_probe(n_values=(25_000, 50_000, 100_000), seed: int = 0, d: int = 2) -> ExperimentTable:
    """Wall time of the linear-time estimator with a 1-NN graph and Gaussian kernel."""
    times = []
    kernel = KernelSpec("gaussian")
    for i, n in enumerate(n_values):
        rng = stream(seed, 0x71, i)
        x = rng.standard_normal((n, d))
        y = x + rng.standard_normal((n, d))
        t0 = time.perf_counter()
        g = GraphSpec("knn", k=1).build(x)
        eta_hat_lin(x, y, kernel, g)
        times.append(time.perf_counter() - t0)
    n_arr = np.asarray(n_values, dtype=float)
    return ExperimentTable(
        {"n": n_arr, "seconds": np.asarray(times)},
        _meta("runtime", seed, n_values=list(n_values), d=d),
    )


__all__ = [
    "EstimatorConfig",
    "parse_config",
    "run_coeff_curve",
    "run_qq_null",
    "run_loglog_rate",
    "run_power_curve",
    "runtime_probe",
    "loglog_slope",
]
