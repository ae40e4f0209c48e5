"""Population ground truth and data generators.

* Closed forms for the distance-kernel coefficient of Gaussian pairs.
* A Monte Carlo evaluator of the population coefficient, computed in two
  independent ways (conditional-kernel form and averaged-MMD form).
* Samplers for every simulation setting used by the experiment harness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._rng import stream
from .errors import InvalidConfigError
from .kernels import KernelSpec

MIN_MC_REPS = 10_000


# -- Gaussian closed forms --------------------------------------------------------


def _check_rho(rho: float) -> float:
    rho = float(rho)
    if not -1.0 <= rho <= 1.0:
        raise InvalidConfigError(f"correlation must lie in [-1, 1], got {rho}")
    return rho


def t_alpha_gaussian(rho: float, alpha: float) -> float:
    """Distance-kernel coefficient of a standard Gaussian pair: 1 - (1 - rho^2)^(alpha/2).

    Given X, the difference of two conditional draws of Y is N(0, 2(1 - rho^2))
    while two marginal draws differ by N(0, 2); the alpha-th absolute moments
    scale by (1 - rho^2)^(alpha/2).  The same holds blockwise for stacked
    independent pairs, since both differences are isotropic Gaussians.
    """
    rho = _check_rho(rho)
    if not 0 < alpha <= 2:
        raise InvalidConfigError("need 0 < alpha <= 2")
    return 1.0 - (1.0 - rho * rho) ** (alpha / 2)


def t1_gaussian(rho: float) -> float:
    rho = _check_rho(rho)
    return 1.0 - math.sqrt(1.0 - rho * rho)


def t2_gaussian(rho: float) -> float:
    rho = _check_rho(rho)
    return rho * rho


@dataclass(frozen=True)
class GaussianPairSpec:
    """``blocks`` independent copies of a bivariate Gaussian pair, stacked."""

    rho: float
    mean_x: float = 0.0
    mean_y: float = 0.0
    sd_x: float = 1.0
    sd_y: float = 1.0
    blocks: int = 2

    def __post_init__(self):
        _check_rho(self.rho)
        if not (self.sd_x > 0 and self.sd_y > 0):
            raise InvalidConfigError("standard deviations must be > 0")
        if self.blocks < 1:
            raise InvalidConfigError("blocks must be >= 1")


def _gaussian_y_given_x(spec: GaussianPairSpec, rng, x: np.ndarray) -> np.ndarray:
    zx = (x - spec.mean_x) / spec.sd_x
    eps = rng.standard_normal(x.shape)
    return spec.mean_y + spec.sd_y * (spec.rho * zx + math.sqrt(1 - spec.rho**2) * eps)


def sample_gaussian_pairs(spec: GaussianPairSpec, n: int, seed: int):
    rng = stream(seed, 0x47)
    x = spec.mean_x + spec.sd_x * rng.standard_normal((n, spec.blocks))
    return x, _gaussian_y_given_x(spec, rng, x)


# -- population coefficient by Monte Carlo ------------------------------------------


@dataclass(frozen=True)
class ConditionalModel:
    """A joint law given as a marginal for X and a conditional sampler for Y.

    ``sample_x(rng, m)`` returns an ``(m, d1)`` array; ``sample_y(rng, x)``
    returns one Y draw per row of ``x``, independently across calls.
    """

    sample_x: Callable
    sample_y: Callable
    name: str = "model"


def gaussian_model(spec: GaussianPairSpec) -> ConditionalModel:
    return ConditionalModel(
        lambda rng, m: spec.mean_x + spec.sd_x * rng.standard_normal((m, spec.blocks)),
        lambda rng, x: _gaussian_y_given_x(spec, rng, x),
        f"gaussian(rho={spec.rho})",
    )


def independent_model(d1: int = 1, d2: int = 1) -> ConditionalModel:
    return ConditionalModel(
        lambda rng, m: rng.uniform(-1, 1, (m, d1)),
        lambda rng, x: rng.standard_normal((len(x), d2)),
        "independent",
    )


def functional_model(fn: Callable, d1: int = 1) -> ConditionalModel:
    """Y = fn(X) without noise."""
    return ConditionalModel(
        lambda rng, m: rng.uniform(-1, 1, (m, d1)),
        lambda rng, x: np.asarray(fn(x), dtype=float).reshape(len(x), -1),
        "functional",
    )


@dataclass(frozen=True)
class PopulationEstimate:
    value: float  # conditional-kernel form
    se: float
    mmd_value: float  # averaged-MMD form, from independent draws
    mmd_se: float
    reps: int

    @property
    def agree(self) -> bool:
        """The two forms agree within three combined standard errors."""
        tol = 3 * math.hypot(self.se, self.mmd_se) + 1e-12
        return abs(self.value - self.mmd_value) <= tol


def _ratio(num: np.ndarray, den: np.ndarray) -> tuple[float, float]:
    """mean(num)/mean(den) with a delta-method standard error."""
    m = len(num)
    r = float(np.mean(num) / np.mean(den))
    resid = num - r * den
    return r, float(np.std(resid, ddof=1) / math.sqrt(m) / abs(np.mean(den)))


def eta_population_mc(
    model: ConditionalModel,
    kernel: KernelSpec,
    reps: int = 100_000,
    seed: int = 0,
    allow_small: bool = False,
) -> PopulationEstimate:
    """Monte Carlo value of the population coefficient.

    Conditional-kernel form, from ``(X', Y', Y~')`` with ``Y', Y~'``
    conditionally independent given ``X'`` and an independent pair
    ``(Y1, Y2)`` from the Y marginal::

        (E K(Y', Y~') - E K(Y1, Y2)) / (E K(Y, Y) - E K(Y1, Y2))

    Averaged-MMD form, from fresh independent draws: the numerator is the
    unbiased single-draw estimate of ``MMD^2(law(Y | X'), law(Y))``, the
    denominator that of ``E ||K(., Y) - E K(., Y)||^2``.
    """
    if reps < MIN_MC_REPS and not allow_small:
        raise InvalidConfigError(f"reps={reps} < {MIN_MC_REPS}; pass allow_small")

    def draw_marginal(rng):
        return model.sample_y(rng, model.sample_x(rng, reps))

    rng = stream(seed, 0xC1)
    xc = model.sample_x(rng, reps)
    y1 = model.sample_y(rng, xc)
    y2 = model.sample_y(rng, xc)
    ya, yb = draw_marginal(rng), draw_marginal(rng)
    k = kernel
    cross = k.pairs(ya, yb)
    value, se = _ratio(k.pairs(y1, y2) - cross, k.diag(y1) - cross)

    rng = stream(seed, 0xC2)
    xc = model.sample_x(rng, reps)
    y1 = model.sample_y(rng, xc)
    y2 = model.sample_y(rng, xc)
    ya, yb, yc, yd = (draw_marginal(rng) for _ in range(4))
    mmd_num = k.pairs(y1, y2) - k.pairs(y1, ya) - k.pairs(y2, yb) + k.pairs(ya, yb)
    mmd_den = 0.5 * (k.diag(yc) + k.diag(yd)) - k.pairs(yc, yd)
    mmd_value, mmd_se = _ratio(mmd_num, mmd_den)
    return PopulationEstimate(value, se, mmd_value, mmd_se, reps)


# -- simulation settings ------------------------------------------------------------

POWER_SETTINGS = ("linear", "sinusoidal", "wshaped", "step", "semicircular", "heterogeneous")
NULL_SETTINGS = ("null1", "null2")
CURVE_SETTINGS = ("coef-sinusoidal", "coef-gaussian")
SETTINGS = POWER_SETTINGS + NULL_SETTINGS + CURVE_SETTINGS
LAMBDA_RANGE = {name: (0.0, 1.0) for name in POWER_SETTINGS}
LAMBDA_RANGE.update({"coef-sinusoidal": (0.0, 2.5), "coef-gaussian": (-1.0, 1.0)})


@dataclass(frozen=True)
class SettingSpec:
    """One simulation setting.

    ``lam`` is the noise level; for ``coef-gaussian`` it is the correlation.
    The null settings ignore it.
    """

    name: str
    lam: float = 0.0
    n: int = 300
    seed: int = 0

    def __post_init__(self):
        if self.name not in SETTINGS:
            raise InvalidConfigError(f"unknown setting {self.name!r}; choose from {SETTINGS}")
        if self.n < 2:
            raise InvalidConfigError("n must be >= 2")
        lo, hi = LAMBDA_RANGE.get(self.name, (-math.inf, math.inf))
        if not lo <= self.lam <= hi:
            raise InvalidConfigError(f"lambda={self.lam} outside [{lo}, {hi}] for {self.name}")


def step_function(x: np.ndarray) -> np.ndarray:
    """-3, 2, 4, 3 on [-1, -.05), [-.05, 0), [0, .05), [.05, 1]."""
    return np.select([x < -0.05, x < 0.0, x < 0.05], [-3.0, 2.0, 4.0], 3.0)


def w_shape(x: np.ndarray) -> np.ndarray:
    return np.where(x <= 0, np.abs(x + 0.5), np.abs(x - 0.5))


def sample_setting(spec: SettingSpec) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``(x, y)`` for ``spec``; two stacked i.i.d. pairs unless null."""
    rng = stream(spec.seed, SETTINGS.index(spec.name))
    n, lam, name = spec.n, spec.lam, spec.name
    if name in NULL_SETTINGS:
        xt = rng.random((n, 4))
        y = rng.exponential(1.0, (n, 4))
        if name == "null1":
            return np.column_stack([xt, xt[:, 0] + xt[:, 1]]), y
        return xt, y
    if name == "coef-gaussian":
        return sample_gaussian_pairs(GaussianPairSpec(lam), n, spec.seed)
    shape = (n, 2)
    if name == "semicircular":
        x = rng.random(shape)
    else:
        x = rng.uniform(-1.0, 1.0, shape)
    eps = rng.standard_normal(shape)
    if name == "linear":
        y = 0.5 * x + 3 * lam * eps
    elif name == "sinusoidal":
        y = np.cos(8 * np.pi * x) + 3 * lam * eps
    elif name == "coef-sinusoidal":
        y = np.cos(8 * np.pi * x) + lam * eps
    elif name == "wshaped":
        y = w_shape(x) + 0.75 * lam * eps
    elif name == "step":
        y = step_function(x) + 10 * lam * eps
    elif name == "semicircular":
        sign = np.where(rng.random(shape) < 0.5, -1.0, 1.0)
        y = sign * np.sqrt(1 - x**2) + 0.9 * lam * eps
    else:  # heterogeneous
        sd = (np.abs(x) <= 0.5).astype(float)
        y = 3 * (sd * (1 - lam) + lam) * eps
    return x, y
