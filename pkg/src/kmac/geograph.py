"""Geometric graphs on the X sample: k-nearest-neighbour graphs and the
Euclidean minimum spanning tree.

Edges are stored as the symmetric closure of the raw (possibly directed)
edge set, so ``j`` is a neighbour of ``i`` iff either point picked the other.
Degrees count neighbours in that closure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from .errors import DegenerateDataError, InvalidConfigError

KDTREE_MAX_DIM = 16
MST_MAX_N = 20_000


@dataclass(frozen=True, eq=False)
class GeoGraph:
    """Simple undirected graph in CSR form.

    ``indices[indptr[i]:indptr[i + 1]]`` are the sorted neighbours of ``i``.
    ``out_neighbors`` keeps the raw directed k-NN choices (``None`` for MSTs).
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    kind: str
    k: int | None = None
    tie: str = "index"
    points: np.ndarray | None = field(default=None, repr=False)
    out_neighbors: np.ndarray | None = field(default=None, repr=False)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    @property
    def adjacency(self) -> list[np.ndarray]:
        return [self.neighbors(i) for i in range(self.n)]

    def directed_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """All ordered pairs ``(i, j)`` with ``j`` adjacent to ``i``."""
        src = np.repeat(np.arange(self.n), self.degrees)
        return src, self.indices

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Undirected edges as ``(i, j)`` with ``i < j``."""
        src, dst = self.directed_edges()
        keep = src < dst
        return src[keep], dst[keep]

    @property
    def n_edges(self) -> int:
        return len(self.indices) // 2

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=bool)
        src, dst = self.directed_edges()
        a[src, dst] = True
        return a

    def relabel(self, perm) -> "GeoGraph":
        """Graph whose vertex ``perm[i]`` plays the role of old vertex ``i``."""
        perm = np.asarray(perm)
        src, dst = self.directed_edges()
        pts = None
        if self.points is not None:
            pts = np.empty_like(self.points)
            pts[perm] = self.points
        return _from_directed(
            self.n, perm[src], perm[dst], self.kind, k=self.k, tie=self.tie, points=pts
        )


@dataclass(frozen=True)
class GraphDiagnostics:
    min_degree: int
    max_degree: int
    mean_edge_length: float
    common_neighbor_total: float


def _as_points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise InvalidConfigError("X must be an n x d matrix")
    if len(x) < 2:
        raise InvalidConfigError("need at least 2 rows to build a graph")
    if not np.all(np.isfinite(x)):
        raise InvalidConfigError("X has non-finite coordinates")
    return x


def _from_directed(n, src, dst, kind, **kw) -> GeoGraph:
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    if np.any(src == dst):
        raise InvalidConfigError("self-loops are not allowed")
    ones = np.ones(2 * len(src), dtype=np.int8)
    a = sparse.csr_matrix(
        (ones, (np.concatenate([src, dst]), np.concatenate([dst, src]))), shape=(n, n)
    )
    a.sum_duplicates()
    a.sort_indices()
    return GeoGraph(
        n=n,
        indptr=a.indptr.astype(np.int64),
        indices=a.indices.astype(np.int64),
        kind=kind,
        **kw,
    )


def graph_from_edges(n: int, edges) -> GeoGraph:
    """Graph on ``n`` vertices from an iterable of ``(i, j)`` pairs (either direction)."""
    e = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
    if e.size and (e.min() < 0 or e.max() >= n):
        raise InvalidConfigError("edge endpoint out of range")
    g = _from_directed(n, e[:, 0], e[:, 1], "custom")
    if np.any(g.degrees == 0):
        raise InvalidConfigError("graph has isolated vertices")
    return g


def _tie_keys(rows, cols, tie_rule: str, seed) -> np.ndarray:
    """Secondary sort keys: the column index, or a seeded hash of (row, col)."""
    if tie_rule == "index":
        return np.asarray(cols, dtype=np.uint64)
    # splitmix64 finalizer over (seed, row, col)
    with np.errstate(over="ignore"):
        z = (
            np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
            ^ (np.asarray(rows, dtype=np.uint64) * np.uint64(0x9E3779B97F4A7C15))
            ^ (np.asarray(cols, dtype=np.uint64) * np.uint64(0xC2B2AE3D27D4EB4F))
        )
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def _select_rows(x, rows, cand, k, tie_rule, seed):
    """Pick k neighbours per row from candidate columns (self excluded).

    Returns the chosen columns and a flag telling whether the k-th distance
    is attained by the farthest candidate (so ties may continue beyond it).
    """
    # one distance formula on every path so equal distances compare equal
    d = np.sqrt(np.sum((x[cand] - x[rows][:, None, :]) ** 2, axis=2))
    d[cand == rows[:, None]] = np.inf
    keys = _tie_keys(rows[:, None], cand, tie_rule, seed)
    o1 = np.argsort(keys, axis=1, kind="stable")
    d1 = np.take_along_axis(d, o1, axis=1)
    o2 = np.argsort(d1, axis=1, kind="stable")
    order = np.take_along_axis(o1, o2, axis=1)
    chosen = np.take_along_axis(cand, order[:, :k], axis=1)
    kth = np.take_along_axis(d, order[:, k - 1 : k], axis=1)[:, 0]
    finite = np.where(np.isfinite(d), d, -np.inf)
    open_end = np.max(finite, axis=1) <= kth * (1 + 1e-12)
    return chosen, open_end


def build_knn(x, k: int, tie_rule: str = "index", seed: int | None = None) -> GeoGraph:
    """Symmetrized k-nearest-neighbour graph under Euclidean distance.

    Ties at the k-th distance go to the lower vertex index (``"index"``) or
    to a seeded pseudo-random choice (``"random"``).  Exact search uses a
    k-d tree for dimension <= 16 and a brute-force scan otherwise; both
    apply the same tie rule, so they return identical graphs.
    """
    x = _as_points(x)
    n, dim = x.shape
    k = int(k)
    if not 1 <= k <= n - 1:
        raise InvalidConfigError(f"k must lie in [1, n-1] = [1, {n - 1}], got {k}")
    if tie_rule not in ("index", "random"):
        raise InvalidConfigError(f"unknown tie rule {tie_rule!r}")
    if tie_rule == "random" and seed is None:
        raise InvalidConfigError("tie=random needs a seed")
    out = np.empty((n, k), dtype=np.int64)
    all_rows = np.arange(n)

    def brute(rows):
        for lo in range(0, len(rows), max(1, 2_000_000 // n)):
            r = rows[lo : lo + max(1, 2_000_000 // n)]
            cand = np.broadcast_to(all_rows, (len(r), n))
            out[r] = _select_rows(x, r, cand, k, tie_rule, seed)[0]

    if dim <= KDTREE_MAX_DIM and n > 2 * k + 2:
        kq = 2 * k + 2
        tree = cKDTree(x)
        # querying in the tree's leaf order keeps node accesses cache-local
        leaf = tree.indices
        cand = np.empty((n, kq), dtype=np.int64)
        cand[leaf] = tree.query(x[leaf], k=kq)[1]
        chunk = max(1, 4_000_000 // (kq * dim))
        redo = []
        for lo in range(0, n, chunk):
            r = all_rows[lo : lo + chunk]
            chosen, open_end = _select_rows(x, r, cand[r], k, tie_rule, seed)
            out[r] = chosen
            redo.append(r[open_end])
        redo = np.concatenate(redo)
        if len(redo):
            brute(redo)
    else:
        brute(all_rows)

    g = _from_directed(
        n, np.repeat(all_rows, k), out.ravel(), "knn", k=k, tie=tie_rule, points=x
    )
    object.__setattr__(g, "out_neighbors", out)
    return g


def brute_force_knn(x, k: int, tie_rule: str = "index", seed: int | None = None) -> np.ndarray:
    """Directed k-NN choices by a full distance scan (reference path)."""
    x = _as_points(x)
    n = len(x)
    rows = np.arange(n)
    return _select_rows(x, rows, np.broadcast_to(rows, (n, n)), int(k), tie_rule, seed)[0]


def build_mst(x, allow_large: bool = False) -> GeoGraph:
    """Euclidean minimum spanning tree by dense O(n^2) Prim."""
    x = _as_points(x)
    n = len(x)
    if n > MST_MAX_N and not allow_large:
        raise InvalidConfigError(f"MST is O(n^2); n={n} exceeds {MST_MAX_N} (pass allow_large)")
    if np.all(x == x[0]):
        raise DegenerateDataError("degenerate X sample: all points identical")
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=np.int64)
    src = np.empty(n - 1, dtype=np.int64)
    dst = np.empty(n - 1, dtype=np.int64)
    v = 0
    in_tree[0] = True
    for step in range(n - 1):
        d = np.sqrt(np.sum((x - x[v]) ** 2, axis=1))
        better = (d < best) & ~in_tree
        best[better] = d[better]
        parent[better] = v
        cand = np.where(in_tree, np.inf, best)
        v = int(np.argmin(cand))
        in_tree[v] = True
        src[step], dst[step] = parent[v], v
    return _from_directed(n, src, dst, "mst", points=x)


def common_neighbors(g: GeoGraph, i: int, j: int) -> int:
    """Number of vertices adjacent to both ``i`` and ``j`` (``d_i`` when i == j)."""
    for v in (i, j):
        if not 0 <= v < g.n:
            raise IndexError(f"vertex {v} out of range for n={g.n}")
    return int(np.intersect1d(g.neighbors(i), g.neighbors(j), assume_unique=True).size)


def graph_stats(g: GeoGraph) -> tuple[float, float, float]:
    """Return ``(g1, g2, g3)``.

    g1 = mean of 1/d_i, g2 = n^-1 sum_{i,j} T(i,j) / (d_i d_j) with T the
    common-neighbour count (diagonal included), g3 = n^-1 sum over ordered
    edges of 1 / (d_i d_j).
    """
    d = g.degrees.astype(float)
    inv = 1.0 / d
    src, dst = g.directed_edges()
    g1 = float(np.mean(inv))
    g3 = float(np.sum(inv[src] * inv[dst]) / g.n)
    # sum_{i,j} T(i,j)/(d_i d_j) = sum_k (sum_{i ~ k} 1/d_i)^2
    s = np.bincount(src, weights=inv[dst], minlength=g.n)
    g2 = float(np.sum(s * s) / g.n)
    return g1, g2, g3


def assumption_report(g: GeoGraph, x=None) -> GraphDiagnostics:
    """Degree range of a graph plus edge-length and common-neighbour summaries."""
    pts = g.points if x is None else _as_points(x)
    d = g.degrees
    src, dst = g.edges()
    if pts is None:
        length = float("nan")
    else:
        length = float(np.mean(np.sqrt(np.sum((pts[src] - pts[dst]) ** 2, axis=1))))
    return GraphDiagnostics(
        min_degree=int(d.min()),
        max_degree=int(d.max()),
        mean_edge_length=length,
        common_neighbor_total=graph_stats(g)[1],
    )


def edge_churn(spec: "GraphSpec", x, index: int, replacement) -> int:
    """Edges gained or lost when row ``index`` of ``x`` is replaced.

    Returns ``max(|E \\ E'|, |E' \\ E|)``, an on-demand probe of how local the
    graph functional is at one point.
    """
    x = _as_points(x)
    x2 = x.copy()
    x2[index] = np.asarray(replacement, dtype=float)
    e1 = set(zip(*map(np.ndarray.tolist, spec.build(x).edges())))
    e2 = set(zip(*map(np.ndarray.tolist, spec.build(x2).edges())))
    return max(len(e1 - e2), len(e2 - e1))


@dataclass(frozen=True)
class GraphSpec:
    """Parsed graph spec string: ``knn:k=5``, ``knn:k=1,tie=random,seed=7``, ``mst``."""

    kind: str
    k: int = 1
    tie: str = "index"
    seed: int | None = None

    def build(self, x) -> GeoGraph:
        if self.kind == "mst":
            return build_mst(x)
        return build_knn(x, self.k, self.tie, self.seed)

    def __str__(self) -> str:
        if self.kind == "mst":
            return "mst"
        s = f"knn:k={self.k}"
        if self.tie != "index":
            s += f",tie={self.tie},seed={self.seed}"
        return s


def parse_graph(text: str) -> GraphSpec:
    name, _, rest = text.strip().partition(":")
    name = name.strip().lower()
    params = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise InvalidConfigError(f"expected key=value in graph spec, got {item!r}")
        params[key.strip().lower()] = val.strip()
    if name == "mst":
        if params:
            raise InvalidConfigError("mst takes no parameters")
        return GraphSpec("mst")
    if name != "knn":
        raise InvalidConfigError(f"unknown graph {name!r}")
    try:
        k = int(params.pop("k", "1"))
        tie = params.pop("tie", "index")
        seed = params.pop("seed", None)
        seed = None if seed is None else int(seed)
    except ValueError as exc:
        raise InvalidConfigError(f"bad graph spec {text!r}: {exc}") from None
    if params:
        raise InvalidConfigError(f"unknown graph parameters {sorted(params)}")
    if tie not in ("index", "random"):
        raise InvalidConfigError(f"unknown tie rule {tie!r}")
    if tie == "random" and seed is None:
        raise InvalidConfigError("tie=random needs seed=...")
    return GraphSpec("knn", k=k, tie=tie, seed=seed)


def write_edge_list(g: GeoGraph, path) -> None:
    """Dump undirected edges as CSV rows ``i,j,length``."""
    src, dst = g.edges()
    if g.points is None:
        length = np.full(len(src), np.nan)
    else:
        length = np.sqrt(np.sum((g.points[src] - g.points[dst]) ** 2, axis=1))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("i,j,length\n")
        for i, j, w in zip(src, dst, length):
            fh.write(f"{i},{j},{w:.17g}\n")
