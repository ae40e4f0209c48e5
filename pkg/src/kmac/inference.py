"""Independence tests built on the graph-kernel numerators.

The asymptotic tests standardize ``N_n`` by its null scale and reject for
large values (one-sided, upper tail).  Permutation tests shuffle the rows of
Y while the graph on X stays fixed, so only the graph term (and, for the
linear kind, the cyclic term) is recomputed per replicate.  Distance
covariance and HSIC are provided as permutation-calibrated baselines.
"""

from __future__ import annotations

import functools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial.distance import cdist

from ._rng import stream
from .errors import DegenerateDataError, InvalidConfigError
from .estimators import (
    _prepare,
    clt_scaling_linear,
    clt_scaling_standard,
    eta_hat,
    eta_hat_lin,
    gram_summary,
)
from .geograph import GeoGraph, GraphSpec
from .kernels import KernelSpec
from .ranks import TargetGrid, rank_clt_scaling, rank_data

KINDS = ("standard", "linear", "rank")
S2_FLOOR = 1e-12
MIN_PERMUTATIONS = 19
GATHER_MAX_N = 3000  # above this, permuted graph terms use pairwise kernel calls
PERM_CHUNK = 64


@dataclass(frozen=True)
class TestReport:
    __test__ = False  # keep pytest from collecting this class

    statistic: float
    z: float
    p_value: float
    method: str
    estimator_value: float
    seed: int | None
    runtime_ms: float

    def to_dict(self) -> dict:
        return asdict(self)


def normal_sf(z: float) -> float:
    """Upper tail 1 - Phi(z) via erfc, accurate in both tails."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def permutation_p_value(observed: float, replicates) -> float:
    """(1 + #{replicate >= observed}) / (B + 1)."""
    r = np.asarray(replicates, dtype=float)
    return float((1 + np.count_nonzero(r >= observed)) / (len(r) + 1))


# -- asymptotic tests -------------------------------------------------------


def _resolve(kind, x, y, graph_spec, grid_x, grid_y):
    """Data and graph each kind's statistic is computed on."""
    if kind not in KINDS:
        raise InvalidConfigError(f"unknown estimator kind {kind!r}")
    if kind == "rank":
        x, y = rank_data(x, y, grid_x, grid_y)
    else:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
    return x, y, graph_spec.build(x)


def asymptotic_test(
    kind: str,
    x,
    y,
    kernel: KernelSpec,
    graph_spec: GraphSpec,
    grid_x: TargetGrid | None = None,
    grid_y: TargetGrid | None = None,
    mc_nodes: int = 100_000,
) -> TestReport:
    """Reject independence when ``N_n / S_n`` exceeds the normal quantile.

    ``kind`` selects the numerator and its null variance: ``standard`` (plug-in
    U-statistic moments), ``linear`` (cyclic moments) or ``rank`` (uniform-law
    moments on the rank scale).
    """
    t0 = time.perf_counter()
    xs, ys, g = _resolve(kind, x, y, graph_spec, grid_x, grid_y)
    if kind == "linear":
        est = eta_hat_lin(xs, ys, kernel, g)
        scale = clt_scaling_linear(ys, kernel, g)
    else:
        est = eta_hat(xs, ys, kernel, g)
        if kind == "rank":
            scale = rank_clt_scaling(kernel, np.shape(ys)[1], g, mc_nodes)
        else:
            scale = clt_scaling_standard(ys, kernel, g)
    if not (math.isfinite(scale.s2) and scale.s2 > S2_FLOOR):
        raise DegenerateDataError(
            f"null variance estimate {scale.s2:.3g} is ~0; use permutation calibration"
        )
    stat = math.sqrt(est.n) * est.numerator
    z = stat / math.sqrt(scale.s2)
    return TestReport(
        statistic=stat,
        z=z,
        p_value=normal_sf(z),
        method=f"asymptotic-{kind}",
        estimator_value=est.value,
        seed=None,
        runtime_ms=1e3 * (time.perf_counter() - t0),
    )


# -- permutation machinery -----------------------------------------------------


@functools.lru_cache(maxsize=64)
def _replicate_perms(seed: int, lo: int, hi: int, n: int) -> np.ndarray:
    # cached: power runs apply several tests to one permutation seed
    perms = np.stack([stream(seed, b).permutation(n) for b in range(lo, hi)])
    perms.flags.writeable = False
    return perms


def _run_chunks(fn, seed: int, n: int, B: int, workers: int) -> np.ndarray:
    """Evaluate ``fn(perms)`` over replicates 0..B-1 in fixed chunks.

    Replicate ``b`` always uses ``stream(seed, b)``, so the output does not
    depend on ``workers``.
    """
    bounds = [(lo, min(B, lo + PERM_CHUNK)) for lo in range(0, B, PERM_CHUNK)]

    def task(span):
        return fn(_replicate_perms(seed, span[0], span[1], n))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(task, bounds))
    else:
        parts = [task(s) for s in bounds]
    return np.concatenate(parts)


class _PermutedNumerator:
    """sqrt(n) (graph_term - cross_term) for batches of row permutations of y."""

    def __init__(self, kind: str, y: np.ndarray, kernel: KernelSpec, g: GeoGraph):
        self.kind = kind
        self.kernel = kernel
        self.y = y
        self.n = len(y)
        self.src, self.dst = g.directed_edges()
        self.w = (1.0 / g.degrees)[self.src]
        self.gram = kernel.gram(y, y) if self.n <= GATHER_MAX_N else None
        if kind != "linear":
            if self.gram is not None:
                off = self.gram.sum() - np.trace(self.gram)
            else:
                off = gram_summary(kernel, y).offdiag_sum
            self.cross = float(off) / (self.n * (self.n - 1))

    def _pair_values(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self.gram is not None:
            return self.gram[a, b]
        return self.kernel.pairs(self.y[a.ravel()], self.y[b.ravel()]).reshape(a.shape)

    def __call__(self, perms: np.ndarray) -> np.ndarray:
        gt = np.sum(self._pair_values(perms[:, self.src], perms[:, self.dst]) * self.w, axis=1)
        gt = gt / self.n
        if self.kind == "linear":
            cross = np.mean(self._pair_values(perms, np.roll(perms, -1, axis=1)), axis=1)
        else:
            cross = self.cross
        return math.sqrt(self.n) * (gt - cross)


def _perm_report(observed, reps, est_value, method, seed, t0) -> TestReport:
    sd = float(np.std(reps))
    z = (observed - float(np.mean(reps))) / sd if sd > 0 else math.nan
    return TestReport(
        statistic=float(observed),
        z=z,
        p_value=permutation_p_value(observed, reps),
        method=method,
        estimator_value=float(est_value),
        seed=seed,
        runtime_ms=1e3 * (time.perf_counter() - t0),
    )


def canonical_order(x, y) -> np.ndarray:
    """Row order sorting the joined rows of (x, y) lexicographically.

    Permutation replicates are drawn relative to this order, which makes
    p-values of order-free statistics independent of the input row order.
    """
    joined = np.hstack([_as_matrix(x), _as_matrix(y)])
    return np.lexsort(joined.T[::-1])


def _check_perm_args(B: int, seed) -> None:
    if B < MIN_PERMUTATIONS:
        raise InvalidConfigError(f"need B >= {MIN_PERMUTATIONS} permutations, got {B}")
    if seed is None:
        raise InvalidConfigError("permutation tests need a seed")


def permutation_test(
    kind: str,
    x,
    y,
    kernel: KernelSpec,
    graph_spec: GraphSpec,
    B: int = 1000,
    seed: int | None = None,
    workers: int = 1,
    grid_x: TargetGrid | None = None,
    grid_y: TargetGrid | None = None,
) -> TestReport:
    """Calibrate ``N_n`` against ``B`` uniform row permutations of y.

    The observed value goes through the same code path as the replicates
    (as the identity permutation), so ``>=`` comparisons are exact.
    """
    t0 = time.perf_counter()
    _check_perm_args(B, seed)
    if kind != "linear":
        x, y = _paired_rows(x, y)
        order = canonical_order(x, y)
        x, y = x[order], y[order]
    xs, ys, g = _resolve(kind, x, y, graph_spec, grid_x, grid_y)
    ys = _prepare(xs, ys, kernel, g)
    est = (eta_hat_lin if kind == "linear" else eta_hat)(xs, ys, kernel, g)
    stat = _PermutedNumerator(kind, ys, kernel, g)
    observed = float(stat(np.arange(len(ys))[None, :])[0])
    reps = _run_chunks(stat, seed, len(ys), B, workers)
    return _perm_report(observed, reps, est.value, f"permutation-{kind}(B={B})", seed, t0)


# -- baselines -------------------------------------------------------------------


def _double_center(m: np.ndarray) -> np.ndarray:
    return m - m.mean(axis=0)[None, :] - m.mean(axis=1)[:, None] + m.mean()


def _as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if not np.all(np.isfinite(a)):
        raise InvalidConfigError("inputs must be finite")
    return a


def _paired_rows(x, y) -> tuple[np.ndarray, np.ndarray]:
    x, y = _as_matrix(x), _as_matrix(y)
    if len(x) != len(y):
        raise InvalidConfigError(f"x has {len(x)} rows but y has {len(y)}")
    return x, y


def _paired(x, y) -> tuple[np.ndarray, np.ndarray]:
    x, y = _paired_rows(x, y)
    if len(x) < 4:
        raise InvalidConfigError("need n >= 4")
    return x, y


def dcov2(x, y) -> float:
    """V-statistic squared distance covariance."""
    x, y = _paired(x, y)
    return float(np.mean(_double_center(cdist(x, x)) * _double_center(cdist(y, y))))


def dcor2(x, y) -> float:
    """Squared distance correlation (V-statistic); 0 when either side is constant."""
    x, y = _paired(x, y)
    a = _double_center(cdist(x, x))
    b = _double_center(cdist(y, y))
    vx, vy = np.mean(a * a), np.mean(b * b)
    if vx <= 0 or vy <= 0:
        return 0.0
    return float(np.mean(a * b) / math.sqrt(vx * vy))


def _centered_product_test(a, b, B, seed, workers, method, t0) -> TestReport:
    """Permutation test of mean(a * b[p][:, p]) for double-centered a, b."""
    n = len(a)
    if np.allclose(a, 0) or np.allclose(b, 0):
        raise DegenerateDataError("degenerate input: a sample is constant")

    def fn(perms):
        return np.array([np.mean(a * b[np.ix_(p, p)]) for p in perms])

    observed = float(fn(np.arange(n)[None, :])[0])
    reps = _run_chunks(fn, seed, n, B, workers)
    return _perm_report(observed, reps, observed, method, seed, t0)


def dcov_test(x, y, B: int = 1000, seed: int | None = None, workers: int = 1) -> TestReport:
    """Distance covariance test, permutation-calibrated."""
    t0 = time.perf_counter()
    _check_perm_args(B, seed)
    x, y = _paired(x, y)
    order = canonical_order(x, y)
    x, y = x[order], y[order]
    a = _double_center(cdist(x, x))
    b = _double_center(cdist(y, y))
    return _centered_product_test(a, b, B, seed, workers, f"dcov-permutation(B={B})", t0)


def hsic_test(
    x, y, kernel: KernelSpec | None = None, B: int = 1000, seed: int | None = None,
    workers: int = 1,
) -> TestReport:
    """HSIC (trace of centered Gram product over n^2), permutation-calibrated.

    The same kernel is used on both samples; default Gaussian with sigma = 1.
    """
    t0 = time.perf_counter()
    _check_perm_args(B, seed)
    kernel = kernel or KernelSpec("gaussian")
    x, y = _paired(x, y)
    order = canonical_order(x, y)
    x, y = x[order], y[order]
    a = _double_center(kernel.gram(kernel.check(x), kernel.check(x)))
    b = _double_center(kernel.gram(kernel.check(y), kernel.check(y)))
    return _centered_product_test(a, b, B, seed, workers, f"hsic-permutation(B={B})", t0)
