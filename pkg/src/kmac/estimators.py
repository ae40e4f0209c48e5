"""Graph-based kernel measures of association and their null scalings.

For a graph on the X sample with degrees ``d_i`` and a kernel ``K`` on Y::

    graph_term = n^-1 sum_i d_i^-1 sum_{j ~ i} K(Y_i, Y_j)
    cross_term = (n(n-1))^-1 sum_{i != j} K(Y_i, Y_j)        (standard)
               = n^-1 sum_i K(Y_i, Y_{i+1}),  Y_{n+1} = Y_1   (linear)
    self_term  = n^-1 sum_i K(Y_i, Y_i)

    value = (graph_term - cross_term) / (self_term - cross_term)

The value is reported raw.  At finite n it can leave [0, 1] slightly; only
its limit is confined there.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DegenerateDataError, InvalidConfigError
from .geograph import GeoGraph, graph_stats
from .kernels import KernelSpec

GRAM_BLOCK = 1024


@dataclass(frozen=True)
class AssociationEstimate:
    value: float
    numerator: float
    denominator: float
    graph_term: float
    cross_term: float
    self_term: float
    n: int
    kind: str
    diagnostics: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        out = asdict(self)
        if not out["diagnostics"]:
            del out["diagnostics"]
        return out


@dataclass(frozen=True)
class CltScaling:
    a_hat: float
    b_hat: float
    c_hat: float
    g1: float
    g2: float
    g3: float
    s2: float


@dataclass(frozen=True)
class GramSummary:
    """Off-diagonal reductions of the Gram matrix of one sample."""

    diag: np.ndarray
    row_sums: np.ndarray  # sum_{j != i} K(Y_i, Y_j)
    sumsq: float  # sum_{i != j} K(Y_i, Y_j)^2

    @property
    def n(self) -> int:
        return len(self.diag)

    @property
    def offdiag_sum(self) -> float:
        return float(np.sum(self.row_sums))


def gram_summary(kernel: KernelSpec, y: np.ndarray, block: int = GRAM_BLOCK) -> GramSummary:
    """Row sums and squared sum of the off-diagonal Gram entries, in row blocks.

    Every row is reduced whole with numpy's pairwise summation, so the result
    does not depend on the block size.
    """
    n = len(y)
    diag = kernel.diag(y)
    row_sums = np.empty(n)
    sq_rows = np.empty(n)
    for lo in range(0, n, block):
        hi = min(n, lo + block)
        g = kernel.gram(y[lo:hi], y)
        idx = np.arange(hi - lo)
        g[idx, idx + lo] = 0.0
        row_sums[lo:hi] = np.sum(g, axis=1)
        sq_rows[lo:hi] = np.sum(g * g, axis=1)
    return GramSummary(diag=diag, row_sums=row_sums, sumsq=float(np.sum(sq_rows)))


def _prepare(x, y, kernel: KernelSpec, graph: GeoGraph, min_n: int = 4) -> np.ndarray:
    y = kernel.check(y)
    n = len(y)
    if x is not None:
        nx = len(np.asarray(x))
        if nx != n:
            raise InvalidConfigError(f"x has {nx} rows but y has {n}")
    if graph.n != n:
        raise InvalidConfigError(f"graph has {graph.n} vertices but y has {n} rows")
    if n < min_n:
        raise InvalidConfigError(f"need n >= {min_n}, got {n}")
    return y


def _check_denominator(den: float, self_term: float) -> None:
    if not math.isfinite(den) or den <= 1e-12 * max(1.0, abs(self_term)):
        raise DegenerateDataError("degenerate Y marginal: denominator is ~0")


def graph_term(kernel: KernelSpec, y: np.ndarray, graph: GeoGraph) -> float:
    src, dst = graph.directed_edges()
    inv = 1.0 / graph.degrees
    return float(np.sum(kernel.pairs(y[src], y[dst]) * inv[src]) / graph.n)


def cyclic_term(kernel: KernelSpec, y: np.ndarray) -> float:
    return float(np.mean(kernel.pairs(y, np.roll(y, -1, axis=0))))


def _canonical(x, y: np.ndarray, graph: GeoGraph) -> tuple[np.ndarray, GeoGraph]:
    """Rows of ``y`` and the graph in lexicographic order of the joined ``(x, y)`` rows.

    Reductions then run in an order fixed by the data, so any relabeling of the
    sample gives a bitwise identical result.
    """
    joined = y if x is None else np.hstack([np.asarray(x, dtype=float).reshape(len(y), -1), y])
    order = np.lexsort(joined.T[::-1])
    return y[order], graph.relabel(np.argsort(order))


def eta_hat(x, y, kernel: KernelSpec, graph: GeoGraph) -> AssociationEstimate:
    """Kernel measure of association with the U-statistic cross term.

    Invariant to relabeling the sample (rows of ``x``, ``y`` and graph vertices
    permuted together), exactly in floating point.
    """
    y, graph = _canonical(x, _prepare(x, y, kernel, graph), graph)
    n = len(y)
    gs = gram_summary(kernel, y)
    self_term = float(np.mean(gs.diag))
    cross = gs.offdiag_sum / (n * (n - 1))
    gt = graph_term(kernel, y, graph)
    den = self_term - cross
    _check_denominator(den, self_term)
    num = gt - cross
    return AssociationEstimate(num / den, num, den, gt, cross, self_term, n, "standard")


def eta_hat_lin(x, y, kernel: KernelSpec, graph: GeoGraph) -> AssociationEstimate:
    """Near-linear-time variant; the cross term is the cyclic average.

    Depends on the row order of ``y``.
    """
    y = _prepare(x, y, kernel, graph)
    n = len(y)
    self_term = float(np.mean(kernel.diag(y)))
    cross = cyclic_term(kernel, y)
    gt = graph_term(kernel, y, graph)
    den = self_term - cross
    _check_denominator(den, self_term)
    num = gt - cross
    return AssociationEstimate(num / den, num, den, gt, cross, self_term, n, "linear")


def t_n_energy(x, y, graph: GeoGraph) -> AssociationEstimate:
    """1 - (graph-average of ||Y_i - Y_j||) / (average pairwise ||Y_i - Y_j||).

    ``graph_term`` and ``cross_term`` hold those two distance averages and
    ``value = numerator / denominator`` with ``numerator = cross - graph``.
    Its population limit agrees with :func:`eta_hat` under the ``distance:alpha=1``
    kernel; at finite n the two coincide only when
    ``sum_{i ~ j} 1/d_i = 1`` for every ``j`` (regular graphs) or when all
    ``||Y_i||`` are equal, because the kernel's norm terms do not cancel in
    the graph average otherwise.
    """
    k1 = KernelSpec("distance", alpha=1.0)
    y = _prepare(x, y, k1, graph)
    n = len(y)
    src, dst = graph.directed_edges()
    inv = 1.0 / graph.degrees
    dist = np.sqrt(np.sum((y[src] - y[dst]) ** 2, axis=1))
    gt = float(np.sum(dist * inv[src]) / n)
    # feature distance of the alpha = 1 kernel is exactly ||Y_i - Y_j||
    total = 0.0
    for lo in range(0, n, GRAM_BLOCK):
        total += float(np.sum(np.sum(cdist(y[lo : lo + GRAM_BLOCK], y), axis=1)))
    mean_dist = total / (n * (n - 1))
    if not mean_dist > 0:
        raise DegenerateDataError("degenerate Y marginal: all rows identical")
    num = mean_dist - gt
    return AssociationEstimate(num / mean_dist, num, mean_dist, gt, mean_dist, 0.0, n, "energy")


def numerator_stat(kind: str, x, y, kernel: KernelSpec, graph: GeoGraph) -> float:
    """sqrt(n) * (graph_term - cross_term) for ``kind`` in {standard, linear}."""
    y = _prepare(x, y, kernel, graph)
    n = len(y)
    gt = graph_term(kernel, y, graph)
    if kind == "standard":
        cross = gram_summary(kernel, y).offdiag_sum / (n * (n - 1))
    elif kind == "linear":
        cross = cyclic_term(kernel, y)
    else:
        raise InvalidConfigError(f"unknown numerator kind {kind!r}")
    return math.sqrt(n) * (gt - cross)


# -- null variance ----------------------------------------------------------


def u_moments(gs: GramSummary) -> tuple[float, float, float]:
    """Distinct-index U-statistics (a, b, c) from Gram row reductions.

    With r_i = sum_{j != i} K_ij, Q = sum_{i != j} K_ij^2, S = sum_i r_i:
      sum over distinct (i,j,l)   K_ij K_il = sum_i r_i^2 - Q
      sum over distinct (i,j,l,m) K_ij K_lm = S^2 - 2Q - 4(sum_i r_i^2 - Q)
    """
    n = gs.n
    if n < 4:
        raise InvalidConfigError("moments need n >= 4")
    r = gs.row_sums
    q = gs.sumsq
    s = float(np.sum(r))
    p = float(np.sum(r * r)) - q
    a = q / (n * (n - 1))
    b = p / (n * (n - 1) * (n - 2))
    c = (s * s - 2 * q - 4 * p) / (n * (n - 1) * (n - 2) * (n - 3))
    return a, b, c


def gram_moments(gram: np.ndarray) -> tuple[float, float, float]:
    """:func:`u_moments` for an explicit symmetric Gram matrix."""
    g = np.array(gram, dtype=float)
    n = len(g)
    diag = g.diagonal().copy()
    np.fill_diagonal(g, 0.0)
    return u_moments(GramSummary(diag, g.sum(axis=1), float(np.sum(g * g))))


def s2_standard(a, b, c, g1, g2, g3, n) -> float:
    return (
        a * (g1 + g3 - 2 / (n - 1))
        + b * (g2 - 2 * g1 - 2 * g3 - 1 + 4 / (n - 1))
        + c * (g1 + g3 - g2 + (n - 3) / (n - 1))
    )


def s2_linear(a, b, c, g1, g2, g3) -> float:
    return a * (g1 + g3 + 1) + b * (g2 - 2 * g1 - 2 * g3 - 3) + c * (2 + g1 + g3 - g2)


def clt_scaling_standard(y, kernel: KernelSpec, graph: GeoGraph) -> CltScaling:
    """Plug-in null variance of the standard numerator ``N_n``."""
    y = _prepare(None, y, kernel, graph, min_n=5)
    a, b, c = u_moments(gram_summary(kernel, y))
    g1, g2, g3 = graph_stats(graph)
    return CltScaling(a, b, c, g1, g2, g3, s2_standard(a, b, c, g1, g2, g3, len(y)))


def clt_scaling_linear(y, kernel: KernelSpec, graph: GeoGraph) -> CltScaling:
    """Cyclic-moment null variance of the linear numerator; O(n) past the graph."""
    y = _prepare(None, y, kernel, graph, min_n=4)
    k1 = kernel.pairs(y, np.roll(y, -1, axis=0))
    a = float(np.mean(k1 * k1))
    b = float(np.mean(k1 * np.roll(k1, -1)))
    c = float(np.mean(k1 * np.roll(k1, -2)))
    g1, g2, g3 = graph_stats(graph)
    return CltScaling(a, b, c, g1, g2, g3, s2_linear(a, b, c, g1, g2, g3))


def permutation_variance(a, b, c, g1, g2, g3, n) -> float:
    """Variance of ``N_n`` over uniform relabelings of a fixed Y multiset.

    ``a, b, c`` are the multiset's distinct-tuple moments.  Algebraically the
    same polynomial as :func:`s2_standard`, written in centered form.
    """
    e = a - 2 * b + c
    return (g1 + g3) * e + (g2 - 1) * (b - c) - 2 * e / (n - 1)
