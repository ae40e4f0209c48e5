"""Positive-definite kernels on R^d used by every estimator.

Kernels are described by a small immutable :class:`KernelSpec` and evaluated
pointwise (:func:`kernel_eval`), row-wise on paired arrays
(:meth:`KernelSpec.pairs`) or as Gram blocks (:meth:`KernelSpec.gram`).

Families
--------
``gaussian``   exp(-||y - y'||_2^2 / sigma^2)
``laplace``    exp(-||y - y'||_1 / sigma)
``distance``   (||y||^alpha + ||y'||^alpha - ||y - y'||^alpha) / 2, 0 < alpha <= 2
``linear``     <y, y'>
``mincdf``     min(y, y') for scalar inputs in [0, 1]

With ``sigma = 1`` the Gaussian and Laplace kernels are exactly
exp(-||y - y'||^2) and exp(-||y - y'||_1).  ``linear`` and ``distance`` with
``alpha = 2`` are not characteristic; they exist to reproduce the squared
correlation limit and are flagged by :attr:`KernelSpec.characteristic`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .errors import InvalidConfigError

FAMILIES = ("gaussian", "laplace", "distance", "linear", "mincdf")


@dataclass(frozen=True)
class KernelSpec:
    family: str
    sigma: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidConfigError(f"unknown kernel family {self.family!r}")
        if self.family in ("gaussian", "laplace"):
            if not (math.isfinite(self.sigma) and self.sigma > 0):
                raise InvalidConfigError("kernel bandwidth sigma must be > 0")
        if self.family == "distance":
            if not (0 < self.alpha <= 2):
                raise InvalidConfigError("distance kernel needs 0 < alpha <= 2")

    # -- metadata ---------------------------------------------------------

    @property
    def characteristic(self) -> bool:
        if self.family == "linear":
            return False
        if self.family == "distance":
            return self.alpha < 2
        return True

    @property
    def bound(self) -> float:
        """sup K over the kernel's domain (``inf`` when unbounded)."""
        if self.family in ("gaussian", "laplace", "mincdf"):
            return 1.0
        return math.inf

    def __str__(self) -> str:
        if self.family in ("gaussian", "laplace"):
            return f"{self.family}:sigma={self.sigma!r}"
        if self.family == "distance":
            return f"distance:alpha={self.alpha!r}"
        return self.family

    # -- evaluation -------------------------------------------------------

    def check(self, a) -> np.ndarray:
        """Coerce ``a`` to a finite 2-D float array valid for this kernel."""
        a = np.asarray(a, dtype=float)
        if a.ndim == 1:
            a = a[:, None]
        if a.ndim != 2:
            raise InvalidConfigError("kernel inputs must be 1-D or 2-D arrays")
        if not np.all(np.isfinite(a)):
            raise InvalidConfigError("kernel inputs must be finite")
        if self.family == "mincdf":
            if a.shape[1] != 1:
                raise InvalidConfigError("mincdf kernel is defined for d2 = 1 only")
            if a.size and (a.min() < 0 or a.max() > 1):
                raise InvalidConfigError("mincdf kernel needs inputs in [0, 1]")
        return a

    def gram(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Matrix ``K(a_i, b_j)``; inputs are assumed already checked."""
        f = self.family
        if f == "gaussian":
            return np.exp(-cdist(a, b, "sqeuclidean") / self.sigma**2)
        if f == "laplace":
            return np.exp(-cdist(a, b, "cityblock") / self.sigma)
        if f == "distance":
            al = self.alpha
            na = _norm_pow(a, al)
            nb = _norm_pow(b, al)
            return 0.5 * (na[:, None] + nb[None, :] - cdist(a, b) ** al)
        if f == "linear":
            return a @ b.T
        return np.minimum(a[:, 0][:, None], b[:, 0][None, :])

    def pairs(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Row-wise ``K(a_i, b_i)`` for equally long arrays."""
        f = self.family
        if f == "gaussian":
            return np.exp(-np.sum((a - b) ** 2, axis=1) / self.sigma**2)
        if f == "laplace":
            return np.exp(-np.sum(np.abs(a - b), axis=1) / self.sigma)
        if f == "distance":
            al = self.alpha
            diff = np.sqrt(np.sum((a - b) ** 2, axis=1)) ** al
            return 0.5 * (_norm_pow(a, al) + _norm_pow(b, al) - diff)
        if f == "linear":
            return np.sum(a * b, axis=1)
        return np.minimum(a[:, 0], b[:, 0])

    def diag(self, a: np.ndarray) -> np.ndarray:
        f = self.family
        if f in ("gaussian", "laplace"):
            return np.ones(len(a))
        if f == "distance":
            return _norm_pow(a, self.alpha)
        if f == "linear":
            return np.sum(a * a, axis=1)
        return a[:, 0].copy()


def _norm_pow(a: np.ndarray, alpha: float) -> np.ndarray:
    r = np.sqrt(np.sum(a * a, axis=1))
    return r if alpha == 1 else r**alpha


def kernel_eval(spec: KernelSpec, y1, y2) -> float:
    """K(y1, y2) for two single points."""
    a = spec.check(np.atleast_1d(np.asarray(y1, dtype=float))[None, :])
    b = spec.check(np.atleast_1d(np.asarray(y2, dtype=float))[None, :])
    if a.shape[1] != b.shape[1]:
        raise InvalidConfigError("kernel arguments have different dimensions")
    return float(spec.pairs(a, b)[0])


def kernel_self_diag(spec: KernelSpec, data) -> np.ndarray:
    """The vector ``[K(Y_i, Y_i)]`` over the rows of ``data``."""
    a = spec.check(data)
    if len(a) == 0:
        raise InvalidConfigError("data must be nonempty")
    return spec.diag(a)


def median_bandwidth(data, max_rows: int = 1024) -> float:
    """Median pairwise Euclidean distance over an evenly spaced row subsample.

    Offered as an opt-in bandwidth; defaults never use it.
    """
    a = np.asarray(data, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if len(a) > max_rows:
        a = a[np.linspace(0, len(a) - 1, max_rows).astype(int)]
    med = float(np.median(pdist(a)))
    if not med > 0:
        raise InvalidConfigError("median heuristic gave a zero bandwidth")
    return med


def parse_kernel(text: str, data=None) -> KernelSpec:
    """Parse ``"gaussian:sigma=1.0"``, ``"distance:alpha=1"``, ``"linear"``, ...

    ``sigma=median`` resolves the bandwidth from ``data`` via
    :func:`median_bandwidth`.
    """
    name, _, rest = text.strip().partition(":")
    name = name.strip().lower()
    if name == "laplacian":
        name = "laplace"
    params = _parse_params(rest)
    try:
        if name in ("gaussian", "laplace"):
            s = params.pop("sigma", "1.0")
            if s == "median":
                if data is None:
                    raise InvalidConfigError("sigma=median needs data")
                sigma = median_bandwidth(data)
            else:
                sigma = float(s)
            spec = KernelSpec(name, sigma=sigma)
        elif name == "distance":
            spec = KernelSpec(name, alpha=float(params.pop("alpha", "1.0")))
        else:
            spec = KernelSpec(name)
    except ValueError as exc:
        if isinstance(exc, InvalidConfigError):
            raise
        raise InvalidConfigError(f"bad kernel spec {text!r}: {exc}") from None
    if params:
        raise InvalidConfigError(f"unknown kernel parameters {sorted(params)} in {text!r}")
    return spec


def _parse_params(rest: str) -> dict[str, str]:
    out = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise InvalidConfigError(f"expected key=value, got {item!r}")
        out[key.strip().lower()] = val.strip()
    return out
