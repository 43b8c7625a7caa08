"""Goodness-of-fit test for parametric regression with spherical predictors.

The statistic integrates, over the sphere, the squared gap between the
local fit of the responses and the locally smoothed parametric fit, weighted
by a kernel density estimate of the design (and an optional weight
function).  Because both smoothers share the same effective weights, the
gap reduces to the smoothed parametric residuals, so the weight rows, the
density estimate and the quadrature are computed once per test invocation
and shared read-only across the wild bootstrap replicates.

Calibration follows a residual wild bootstrap with golden-section
multipliers: resampled responses are the parametric fit plus residuals
scaled by two-point multipliers (mean 0, variance 1), the parameter is
refitted under the composite hypothesis, and the p-value is the fraction
of replicate statistics at or above the observed one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import sqrt
from typing import Callable

import numpy as np

from . import locreg, parfit
from .kernels import kernel_constants, normalizing_constant
from .locreg import LocalFitConfig
from .sphere import SphereQuadrature, build_quadrature

GOLDEN_LOW = (1.0 - sqrt(5.0)) / 2.0
GOLDEN_HIGH = (1.0 + sqrt(5.0)) / 2.0
GOLDEN_PROB_LOW = (5.0 + sqrt(5.0)) / 10.0

DEFAULT_NODE_RESOLUTION = {1: 256, 2: 48}
DEFAULT_MC_NODES = 20_000
MAX_FAILED_REPLICATE_FRACTION = 0.05


def default_quadrature(q: int, resolution: int | None = None, seed: int = 0) -> SphereQuadrature:
    """Integration rule sized so quadrature error is far below bootstrap noise."""
    if resolution is None:
        resolution = DEFAULT_NODE_RESOLUTION.get(q, DEFAULT_MC_NODES)
    return build_quadrature(q, resolution=resolution, seed=seed)


def golden_section_draws(shape, rng: np.random.Generator) -> np.ndarray:
    """Two-point wild bootstrap multipliers with mean 0 and variance 1."""
    u = rng.uniform(size=shape)
    return np.where(u < GOLDEN_PROB_LOW, GOLDEN_LOW, GOLDEN_HIGH)


@dataclass(frozen=True, eq=False)
class GofConfig:
    """Everything the test needs besides the data and the null family."""

    fit: LocalFitConfig
    quadrature: SphereQuadrature
    bootstrap: int = 1000
    seed: int = 0
    hypothesis: str = "composite"
    theta0: np.ndarray | None = None
    weight_fn: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.bootstrap < 1:
            raise ValueError(f"bootstrap size must be >= 1, got {self.bootstrap}")
        if self.hypothesis not in ("composite", "simple"):
            raise ValueError(f"hypothesis must be composite or simple: {self.hypothesis!r}")
        if self.hypothesis == "simple" and self.theta0 is None:
            raise ValueError("the simple hypothesis needs theta0")


@dataclass
class NodeCache:
    """Per-node quantities shared across bootstrap replicates (read-only)."""

    rows: np.ndarray
    node_factor: np.ndarray
    regularized: np.ndarray

    @property
    def regularized_count(self) -> int:
        return int(self.regularized.sum())


def node_cache(predictors, cfg: GofConfig) -> NodeCache:
    """Weight rows and the density/weight/quadrature factor at every node."""
    predictors = np.asarray(predictors, dtype=float)
    n, dim = predictors.shape
    q = dim - 1
    nodes = cfg.quadrature.nodes
    raw = locreg.kernel_weight_matrix(nodes, predictors, cfg.fit)
    rows, flags = locreg.weight_rows(nodes, predictors, cfg.fit, raw=raw)
    fhat = normalizing_constant(cfg.fit.kernel, q, cfg.fit.bandwidth) * raw.mean(axis=1)
    wvals = np.ones(len(nodes)) if cfg.weight_fn is None else np.asarray(
        cfg.weight_fn(nodes), dtype=float
    )
    return NodeCache(
        rows=rows,
        node_factor=cfg.quadrature.weights * fhat * wvals,
        regularized=flags,
    )


def statistic_from_residuals(cache: NodeCache, residuals) -> np.ndarray | float:
    """Quadrature of the squared smoothed residuals; rows of a matrix batch."""
    residuals = np.asarray(residuals, dtype=float)
    smoothed = cache.rows @ residuals.T
    values = cache.node_factor @ smoothed**2
    if residuals.ndim == 1:
        return float(values)
    return values


def statistic(predictors, responses, family: parfit.ParametricFamily, theta, cfg: GofConfig) -> float:
    """Test statistic for a fixed parameter value (no bootstrap)."""
    residuals = np.asarray(responses, dtype=float) - parfit.predict_batch(
        family, theta, predictors
    )
    return statistic_from_residuals(node_cache(predictors, cfg), residuals)


@dataclass
class GofResult:
    """Observed statistic, its bootstrap distribution and the p-value."""

    statistic: float
    bootstrap_statistics: np.ndarray
    p_value: float
    theta_hat: np.ndarray
    regularized_nodes: int
    failed_replicates: int
    config: dict

    def to_dict(self) -> dict:
        qs = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99]
        return {
            "config": self.config,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "theta_hat": [float(v) for v in np.atleast_1d(self.theta_hat)],
            "bootstrap": {
                "replicates": int(self.bootstrap_statistics.size),
                "quantiles": {
                    str(level): float(v)
                    for level, v in zip(
                        qs, np.quantile(self.bootstrap_statistics, qs)
                    )
                },
            },
            "flags": {
                "regularized_nodes": self.regularized_nodes,
                "failed_replicates": self.failed_replicates,
            },
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)


def _config_echo(cfg: GofConfig, n: int, q: int, family_kind: str) -> dict:
    return {
        "n": n,
        "q": q,
        "degree": cfg.fit.degree,
        "bandwidth": cfg.fit.bandwidth,
        "kernel": cfg.fit.kernel.tag,
        "bootstrap": cfg.bootstrap,
        "seed": cfg.seed,
        "hypothesis": cfg.hypothesis,
        "family": family_kind,
        "weight": "uniform" if cfg.weight_fn is None else "custom",
        "quadrature": {
            "scheme": cfg.quadrature.scheme,
            "nodes": cfg.quadrature.node_count,
        },
    }


def bootstrap_test(
    predictors,
    responses,
    family: parfit.ParametricFamily,
    cfg: GofConfig,
    multipliers: np.ndarray | None = None,
    cache: NodeCache | None = None,
) -> GofResult:
    """Run the full calibrated test.

    ``multipliers`` may carry a precomputed (bootstrap, n) block of
    golden-section draws so several bandwidths can share one stream; the
    default draws them from the config seed.  Everything is deterministic
    given (data, config, multipliers).
    """
    predictors = np.asarray(predictors, dtype=float)
    responses = np.asarray(responses, dtype=float)
    n, dim = predictors.shape
    if cache is None:
        cache = node_cache(predictors, cfg)

    if cfg.hypothesis == "simple":
        theta_hat = np.asarray(cfg.theta0, dtype=float)
    else:
        theta_hat = parfit.fit(family, predictors, responses).theta
    fitted = parfit.predict_batch(family, theta_hat, predictors)
    residuals = responses - fitted
    observed = statistic_from_residuals(cache, residuals)

    if multipliers is None:
        rng = np.random.default_rng(cfg.seed)
        multipliers = golden_section_draws((cfg.bootstrap, n), rng)
    else:
        multipliers = np.asarray(multipliers, dtype=float)
        if multipliers.shape != (cfg.bootstrap, n):
            raise ValueError(
                f"multipliers must have shape {(cfg.bootstrap, n)}, got {multipliers.shape}"
            )

    star_responses = fitted[None, :] + residuals[None, :] * multipliers
    failed = 0
    if cfg.hypothesis == "simple":
        star_residuals = star_responses - fitted[None, :]
    else:
        _, star_residuals, converged = parfit.fit_batch(family, predictors, star_responses)
        failed = int((~converged).sum())
        if failed > MAX_FAILED_REPLICATE_FRACTION * cfg.bootstrap:
            raise RuntimeError(
                f"{failed} of {cfg.bootstrap} bootstrap refits failed to converge"
            )
    replicate_stats = statistic_from_residuals(cache, star_residuals)

    p_value = float(np.mean(observed <= replicate_stats))
    return GofResult(
        statistic=observed,
        bootstrap_statistics=replicate_stats,
        p_value=p_value,
        theta_hat=np.atleast_1d(theta_hat),
        regularized_nodes=cache.regularized_count,
        failed_replicates=failed,
        config=_config_echo(cfg, n, dim - 1, family.kind),
    )


def asymptotic_center_scale(
    fit_cfg: LocalFitConfig, q: int, n: int, sigma2_integral: float, asymptotic_variance: float
) -> tuple[float, float]:
    """Centering and scale of the limiting normal law of the statistic.

    The standardized value n h^(q/2) (T - center) / scale is asymptotically
    standard normal under the null; ``asymptotic_variance`` is the output of
    ``kernels.gof_asymptotic_variance`` and enters the scale as sqrt(2 v).
    """
    if sigma2_integral <= 0 or asymptotic_variance <= 0:
        raise ValueError("integrals entering center and scale must be positive")
    consts = kernel_constants(fit_cfg.kernel, q)
    center = consts.variance_factor * sigma2_integral / (n * fit_cfg.bandwidth**q)
    return center, sqrt(2.0 * asymptotic_variance)


def standardized_statistic(
    value: float, fit_cfg: LocalFitConfig, q: int, n: int, center: float, scale: float
) -> float:
    """Apply the limiting-law normalization to an observed statistic."""
    return n * fit_cfg.bandwidth ** (q / 2.0) * (value - center) / scale
