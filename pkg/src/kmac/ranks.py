"""Multivariate ranks by optimal assignment to a uniform-like grid.

Each sample point is matched to one grid point in [0, 1]^d so that the total
squared Euclidean transport cost is minimal; the matched grid point is the
point's rank.  In one dimension with the lattice {i/n} this is the classical
rank divided by n.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist
from scipy.stats import rankdata

from ._rng import stream
from .errors import InvalidConfigError
from .estimators import AssociationEstimate, CltScaling, eta_hat, s2_standard
from .geograph import GeoGraph, GraphSpec, assumption_report, graph_stats
from .kernels import KernelSpec

PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
          73, 79, 83, 89, 97)  # fmt: skip
ASSIGNMENT_MAX_N = 8000
MIN_MC_NODES = 10_000


@dataclass(frozen=True, eq=False)
class TargetGrid:
    points: np.ndarray
    source: str

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True, eq=False)
class RankAssignment:
    perm: np.ndarray  # perm[i] = grid index matched to row i
    cost: float


def radical_inverse(idx: np.ndarray, base: int) -> np.ndarray:
    idx = np.array(idx, dtype=np.int64)
    out = np.zeros(idx.shape)
    f = 1.0 / base
    while np.any(idx > 0):
        out += f * (idx % base)
        idx //= base
        f /= base
    return out


@functools.lru_cache(maxsize=32)
def _halton_cached(n: int, d: int) -> np.ndarray:
    idx = np.arange(1, n + 1)
    pts = np.column_stack([radical_inverse(idx, PRIMES[j]) for j in range(d)])
    pts.flags.writeable = False
    return pts


def halton(n: int, d: int) -> TargetGrid:
    """First ``n`` Halton points in [0,1]^d (bases = first d primes, index from 1)."""
    if n < 1 or d < 1:
        raise InvalidConfigError("halton needs n >= 1 and d >= 1")
    if d > len(PRIMES):
        raise InvalidConfigError(f"halton supports d <= {len(PRIMES)}")
    return TargetGrid(_halton_cached(int(n), int(d)), "halton")


def lattice1d(n: int) -> TargetGrid:
    """The grid {1/n, 2/n, ..., 1}."""
    if n < 1:
        raise InvalidConfigError("lattice needs n >= 1")
    return TargetGrid((np.arange(1, n + 1) / n)[:, None], "lattice1d")


def uniform_grid(n: int, d: int, seed: int) -> TargetGrid:
    return TargetGrid(stream(seed, 0x6D).random((n, d)), f"uniform:seed={seed}")


def make_grid(spec: str | None, n: int, d: int) -> TargetGrid:
    """Build a grid from ``"halton"``, ``"uniform:seed=7"``, ``"lattice1d"``.

    ``None`` picks the default: the lattice for d = 1, Halton otherwise.
    """
    if spec is None:
        return lattice1d(n) if d == 1 else halton(n, d)
    name, _, rest = spec.strip().partition(":")
    name = name.lower()
    if name == "halton":
        return halton(n, d)
    if name == "lattice1d":
        if d != 1:
            raise InvalidConfigError("lattice1d grid needs d = 1")
        return lattice1d(n)
    if name == "uniform":
        key, _, val = rest.partition("=")
        if key.strip() != "seed":
            raise InvalidConfigError("uniform grid needs seed=...")
        return uniform_grid(n, d, int(val))
    raise InvalidConfigError(f"unknown grid {spec!r}")


# -- assignment ----------------------------------------------------------------


def hungarian(cost: np.ndarray) -> np.ndarray:
    """Exact square assignment by shortest augmenting paths with potentials.

    O(n^3); returns ``col`` with row ``i`` assigned to column ``col[i]``.
    """
    c = np.asarray(cost, dtype=float)
    n = c.shape[0]
    if c.shape != (n, n):
        raise InvalidConfigError("cost matrix must be square")
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.int64)  # p[j]: row matched to column j (1-based, 0 = free)
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used
            free[0] = False
            cur = c[i0 - 1] - u[i0] - v[1:]
            upd = free[1:] & (cur < minv[1:])
            minv[1:][upd] = cur[upd]
            way[1:][upd] = j0
            cand = np.where(free, minv, np.inf)
            j1 = int(np.argmin(cand))
            delta = cand[j1]
            u[p[used]] += delta
            v[used] -= delta
            minv[free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    col = np.empty(n, dtype=np.int64)
    col[p[1:] - 1] = np.arange(n)
    return col


def brute_force_assignment(cost: np.ndarray) -> tuple[tuple[int, ...], float]:
    """Minimum over all n! permutations (reference path for tiny n)."""
    c = np.asarray(cost, dtype=float)
    n = len(c)
    best, arg = np.inf, None
    rows = np.arange(n)
    for perm in itertools.permutations(range(n)):
        val = c[rows, perm].sum()
        if val < best:
            best, arg = val, perm
    return arg, float(best)


def solve_assignment(
    x, grid: TargetGrid, method: str = "auto", allow_large: bool = False
) -> RankAssignment:
    """Match rows of ``x`` to grid points minimizing total squared distance.

    ``method``: ``"auto"`` (sorting when d = 1, else ``"scipy"``),
    ``"sort"`` (d = 1 only), ``"scipy"`` or ``"hungarian"`` (in-package).
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = len(x)
    if grid.n != n or grid.d != x.shape[1]:
        raise InvalidConfigError(
            f"grid is {grid.n}x{grid.d} but data is {n}x{x.shape[1]}"
        )
    if n < 1:
        raise InvalidConfigError("need n >= 1")
    if not np.all(np.isfinite(x)):
        raise InvalidConfigError("non-finite coordinates make the cost matrix non-finite")
    h = grid.points
    if method == "auto":
        method = "sort" if x.shape[1] == 1 else "scipy"
    if method == "sort":
        if x.shape[1] != 1:
            raise InvalidConfigError("sort assignment needs d = 1")
        # monotone matching is optimal for convex costs on the line
        perm = np.empty(n, dtype=np.int64)
        perm[np.argsort(x[:, 0], kind="stable")] = np.argsort(h[:, 0], kind="stable")
    else:
        if n > ASSIGNMENT_MAX_N and not allow_large:
            raise InvalidConfigError(
                f"assignment on n={n} > {ASSIGNMENT_MAX_N} needs allow_large=True"
            )
        cost = cdist(x, h, "sqeuclidean")
        if method == "scipy":
            rows, perm = linear_sum_assignment(cost)
            perm = perm[np.argsort(rows)]
        elif method == "hungarian":
            perm = hungarian(cost)
        else:
            raise InvalidConfigError(f"unknown assignment method {method!r}")
    total = float(np.sum((x - h[perm]) ** 2))
    return RankAssignment(np.asarray(perm, dtype=np.int64), total)


def empirical_ranks(x, grid: TargetGrid | None = None, **kw) -> np.ndarray:
    """Rank vectors ``h_{sigma(i)}`` for every row of ``x``."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if grid is None:
        grid = make_grid(None, len(x), x.shape[1])
    return grid.points[solve_assignment(x, grid, **kw).perm]


# -- rank estimator ----------------------------------------------------------------


def rank_data(x, y, grid_x: TargetGrid | None = None, grid_y: TargetGrid | None = None):
    return empirical_ranks(x, grid_x), empirical_ranks(y, grid_y)


def eta_hat_rank(
    x,
    y,
    kernel: KernelSpec,
    graph_spec: GraphSpec,
    grid_x: TargetGrid | None = None,
    grid_y: TargetGrid | None = None,
) -> AssociationEstimate:
    """The standard estimator computed on the ranks of X and Y.

    The graph is built on the X ranks.  Under independence its law does not
    depend on the marginals of X and Y.
    """
    rx, ry = rank_data(x, y, grid_x, grid_y)
    g = graph_spec.build(rx)
    est = eta_hat(rx, ry, kernel, g)
    rep = assumption_report(g)
    return replace(
        est,
        kind="rank",
        diagnostics={
            "min_degree": rep.min_degree,
            "max_degree": rep.max_degree,
            "mean_edge_length": rep.mean_edge_length,
        },
    )


def uniform_moments(kernel: KernelSpec, d2: int, mc_nodes: int = 100_000,
                    allow_small: bool = False) -> tuple[float, float, float]:
    """(E K^2(U1,U2), E K(U1,U2) K(U1,U3), (E K(U1,U2))^2) for U_i ~ U[0,1]^d2.

    Closed form for ``mincdf``; Halton quasi-Monte Carlo over 3*d2 dimensions
    otherwise.
    """
    if kernel.family == "mincdf":
        if d2 != 1:
            raise InvalidConfigError("mincdf needs d2 = 1")
        return 1 / 6, 2 / 15, 1 / 9
    if mc_nodes < MIN_MC_NODES and not allow_small:
        raise InvalidConfigError(f"mc_nodes={mc_nodes} < {MIN_MC_NODES}; pass allow_small")
    if 3 * d2 > len(PRIMES):
        raise InvalidConfigError(f"QMC supports d2 <= {len(PRIMES) // 3}")
    h = halton(mc_nodes, 3 * d2).points
    u1, u2, u3 = h[:, :d2], h[:, d2 : 2 * d2], h[:, 2 * d2 :]
    k12 = kernel.pairs(u1, u2)
    k13 = kernel.pairs(u1, u3)
    return float(np.mean(k12 * k12)), float(np.mean(k12 * k13)), float(np.mean(k12)) ** 2


def rank_clt_scaling(kernel: KernelSpec, d2: int, graph: GeoGraph,
                     mc_nodes: int = 100_000, allow_small: bool = False) -> CltScaling:
    """Null variance of the rank numerator with uniform-law moments."""
    a, b, c = uniform_moments(kernel, d2, mc_nodes, allow_small)
    g1, g2, g3 = graph_stats(graph)
    return CltScaling(a, b, c, g1, g2, g3, s2_standard(a, b, c, g1, g2, g3, graph.n))


def chatterjee_xi(x, y) -> float:
    """Rank coefficient 1 - 3 sum |r_{i+1} - r_i| / (n^2 - 1).

    ``r_i`` is the rank of the y paired with the i-th smallest x (x ties go
    by row index).
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    n = len(x)
    if n < 2 or len(y) != n:
        raise InvalidConfigError("need two equally long samples with n >= 2")
    r = rankdata(y, method="max")[np.argsort(x, kind="stable")]
    return float(1 - 3 * np.sum(np.abs(np.diff(r))) / (n * n - 1))
