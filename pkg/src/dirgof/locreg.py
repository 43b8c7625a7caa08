"""Projected local constant/linear regression on the q-sphere.

The estimator solves a kernel-weighted least squares problem whose design,
for degree 1, contains the data differences projected on the tangent space
at the evaluation point.  The fitted value is a linear combination of the
responses; those effective weights are the central object here because the
goodness-of-fit statistic reuses them across quadrature nodes and bootstrap
replicates.

Solves go through an orthogonal factorization of the square-root-weighted
design (never an explicit inverse).  A rank-deficient node falls back to a
tiny ridge on the Gram matrix and is flagged ``regularized`` instead of
aborting, so long bootstrap loops survive rare degenerate resamples without
hiding the degradation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .kernels import VON_MISES, DirectionalKernel, kernel_constants
from .sphere import projection_basis

WEIGHT_FLOOR = 1e-300
RIDGE_FACTOR = 1e-10
_RANK_TOL = 1e-10


class SingularGramError(RuntimeError):
    """All kernel weights vanished; no local fit exists at this point."""


@dataclass(frozen=True)
class LocalFitConfig:
    """Degree (0 local constant, 1 local linear), bandwidth and kernel."""

    degree: int
    bandwidth: float
    kernel: DirectionalKernel = VON_MISES

    def __post_init__(self):
        if self.degree not in (0, 1):
            raise ValueError(f"degree must be 0 or 1, got {self.degree}")
        if self.bandwidth <= 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")


@dataclass
class LocalFit:
    """Fitted value, projected gradient and the effective response weights."""

    value: float
    gradient: np.ndarray
    weights: np.ndarray
    regularized: bool = False


def kernel_weights(x, predictors, cfg: LocalFitConfig) -> np.ndarray:
    """Raw kernel values L((1 - x.X_i)/h^2); denormals are clamped to zero."""
    x = np.asarray(x, dtype=float)
    predictors = np.asarray(predictors, dtype=float)
    w = cfg.kernel((1.0 - predictors @ x) / cfg.bandwidth**2)
    w[w < WEIGHT_FLOOR] = 0.0
    return w


def _check_size(n: int, q: int, cfg: LocalFitConfig) -> None:
    if cfg.degree == 1 and n < q + 2:
        raise ValueError(f"local linear fit needs n >= q+2 = {q + 2}, got {n}")
    if n < 1:
        raise ValueError("need at least one observation")


def _linear_factorization(x, predictors, w, basis_columns):
    """QR of the square-root-weighted design; ridge fallback when deficient.

    Returns (weights_row, solve) where solve(y) gives the full coefficient
    vector, plus the regularized flag.
    """
    centered = predictors - x
    design = np.column_stack([np.ones(len(predictors)), centered @ basis_columns])
    sw = np.sqrt(w)
    a = design * sw[:, None]
    q_mat, r_mat = np.linalg.qr(a)
    diag = np.abs(np.diag(r_mat))
    if np.all(np.isfinite(diag)) and diag.min() > _RANK_TOL * diag.max() > 0:
        e1 = np.zeros(r_mat.shape[0])
        e1[0] = 1.0
        z = sla.solve_triangular(r_mat.T, e1, lower=True)
        row = (q_mat @ z) * sw

        def solve(y):
            return sla.solve_triangular(r_mat, q_mat.T @ (sw * y), lower=False)

        return row, solve, False
    gram = a.T @ a
    gram[np.diag_indices_from(gram)] += RIDGE_FACTOR * np.trace(gram) / gram.shape[0]
    weighted = design.T * w[None, :]
    inv_rows = np.linalg.solve(gram, weighted)

    def solve_ridge(y):
        return inv_rows @ y

    return inv_rows[0], solve_ridge, True


def _weights_at(x, predictors, cfg: LocalFitConfig, basis_columns=None, raw=None):
    """Effective weights row at one point, with the regularized flag."""
    w = kernel_weights(x, predictors, cfg) if raw is None else raw
    if not np.any(w > 0):
        raise SingularGramError(
            "all kernel weights are numerically zero at the evaluation point"
        )
    if cfg.degree == 0:
        return w / w.sum(), False
    if basis_columns is None:
        basis_columns = projection_basis(x).columns
    row, _, regularized = _linear_factorization(
        np.asarray(x, dtype=float), np.asarray(predictors, dtype=float), w, basis_columns
    )
    return row, regularized


def local_weights(x, predictors, cfg: LocalFitConfig, basis_columns=None) -> np.ndarray:
    """Effective response weights of the fitted value at x; they sum to 1."""
    predictors = np.asarray(predictors, dtype=float)
    _check_size(len(predictors), predictors.shape[1] - 1, cfg)
    row, _ = _weights_at(x, predictors, cfg, basis_columns)
    return row


def kernel_weight_matrix(nodes, predictors, cfg: LocalFitConfig) -> np.ndarray:
    """Raw kernel values between evaluation points (rows) and the sample."""
    nodes = np.asarray(nodes, dtype=float)
    predictors = np.asarray(predictors, dtype=float)
    w = cfg.kernel((1.0 - nodes @ predictors.T) / cfg.bandwidth**2)
    w[w < WEIGHT_FLOOR] = 0.0
    return w


def weight_rows(nodes, predictors, cfg: LocalFitConfig, raw=None):
    """Effective weights at many evaluation points.

    Returns an (m, n) matrix of rows and an (m,) mask of nodes where the
    ridge fallback fired.  Degree 0 is fully vectorized; ``raw`` may carry a
    precomputed kernel matrix to share with a density estimate.
    """
    nodes = np.asarray(nodes, dtype=float)
    predictors = np.asarray(predictors, dtype=float)
    _check_size(len(predictors), predictors.shape[1] - 1, cfg)
    if raw is None:
        raw = kernel_weight_matrix(nodes, predictors, cfg)
    if cfg.degree == 0:
        sums = raw.sum(axis=1)
        if np.any(sums <= 0):
            raise SingularGramError(
                f"{int((sums <= 0).sum())} nodes have all-zero kernel weights"
            )
        return raw / sums[:, None], np.zeros(len(nodes), dtype=bool)
    rows = np.empty((len(nodes), len(predictors)))
    flags = np.zeros(len(nodes), dtype=bool)
    for j, x in enumerate(nodes):
        rows[j], flags[j] = _weights_at(x, predictors, cfg, raw=raw[j])
    return rows, flags


def estimate(x, predictors, responses, cfg: LocalFitConfig) -> LocalFit:
    """Fit the projected local model at x and return value, gradient, weights."""
    predictors = np.asarray(predictors, dtype=float)
    responses = np.asarray(responses, dtype=float)
    q = predictors.shape[1] - 1
    _check_size(len(predictors), q, cfg)
    w = kernel_weights(x, predictors, cfg)
    if not np.any(w > 0):
        raise SingularGramError(
            "all kernel weights are numerically zero at the evaluation point"
        )
    if cfg.degree == 0:
        row = w / w.sum()
        return LocalFit(
            value=float(row @ responses), gradient=np.empty(0), weights=row
        )
    basis = projection_basis(x)
    row, solve, regularized = _linear_factorization(
        np.asarray(x, dtype=float), predictors, w, basis.columns
    )
    beta = solve(responses)
    return LocalFit(
        value=float(row @ responses),
        gradient=np.asarray(beta[1:]),
        weights=row,
        regularized=regularized,
    )


def smooth_parametric(model_values, rows) -> np.ndarray:
    """Apply precomputed weight rows to known function values at the data."""
    model_values = np.asarray(model_values, dtype=float)
    rows = np.asarray(rows, dtype=float)
    if rows.shape[-1] != model_values.shape[0]:
        raise ValueError(
            f"length mismatch: rows act on {rows.shape[-1]} values, got {model_values.shape[0]}"
        )
    return rows @ model_values


def equivalent_kernel_estimate(
    x, predictors, responses, cfg: LocalFitConfig, density_at_x: float
) -> float:
    """Plain kernel average with the asymptotic equivalent-kernel weights.

    Diagnostic companion of ``estimate``: identical for degree 0 and 1 by
    construction, and asymptotically equivalent to the local fit.
    """
    if density_at_x <= 0:
        raise ValueError("density value at x must be positive")
    predictors = np.asarray(predictors, dtype=float)
    responses = np.asarray(responses, dtype=float)
    q = predictors.shape[1] - 1
    n = len(predictors)
    raw = kernel_weights(x, predictors, cfg)
    scale = kernel_constants(cfg.kernel, q).scale
    return float(
        (raw @ responses) / (n * cfg.bandwidth**q * scale * density_at_x)
    )


def asymptotic_bias_variance(
    q: int,
    density: float,
    grad_inner: float,
    hessian_trace: float,
    sigma2: float,
    cfg: LocalFitConfig,
    n: int,
) -> tuple[float, float]:
    """Leading conditional bias and variance of the local fit at a point.

    ``grad_inner`` is the inner product of the density and regression
    gradients (its extra bias term only enters the degree 0 fit);
    ``hessian_trace`` the trace of the regression Hessian under the radial
    extension.  Diagnostic values for validating simulations.
    """
    if density <= 0 or sigma2 <= 0:
        raise ValueError("density and conditional variance must be positive")
    consts = kernel_constants(cfg.kernel, q)
    curvature = hessian_trace
    if cfg.degree == 0:
        curvature = curvature + 2.0 * grad_inner / density
    bias = (consts.moment_ratio / q) * curvature * cfg.bandwidth**2
    variance = consts.variance_factor * sigma2 / (n * cfg.bandwidth**q * density)
    return bias, variance


def circular_local_linear(
    eval_angles, data_angles, responses, h: float, kernel: DirectionalKernel = VON_MISES
) -> np.ndarray:
    """Closed-form degree 1 fit on the circle from sine-moment sums."""
    eval_angles = np.atleast_1d(np.asarray(eval_angles, dtype=float))
    data_angles = np.asarray(data_angles, dtype=float)
    responses = np.asarray(responses, dtype=float)
    diff = data_angles[None, :] - eval_angles[:, None]
    lw = kernel((1.0 - np.cos(diff)) / h**2)
    sin_d = np.sin(diff)
    s0 = lw.sum(axis=1)
    s1 = (lw * sin_d).sum(axis=1)
    s2 = (lw * sin_d**2).sum(axis=1)
    t0 = lw @ responses
    t1 = (lw * sin_d) @ responses
    return (s2 * t0 - s1 * t1) / (s2 * s0 - s1**2)


def spherical_local_linear(
    eval_angles, data_angles, responses, h: float, kernel: DirectionalKernel = VON_MISES
) -> np.ndarray:
    """Closed-form degree 1 fit on the 2-sphere from angular moment sums.

    Angles are (azimuth, polar) pairs for the embedding
    (sin(polar) cos(azimuth), sin(polar) sin(azimuth), cos(polar)).
    """
    eval_angles = np.atleast_2d(np.asarray(eval_angles, dtype=float))
    data_angles = np.asarray(data_angles, dtype=float)
    responses = np.asarray(responses, dtype=float)
    theta, phi = eval_angles[:, 0][:, None], eval_angles[:, 1][:, None]
    big_theta, big_phi = data_angles[:, 0][None, :], data_angles[:, 1][None, :]
    cos_dt = np.cos(big_theta - theta)
    lw = kernel(
        (1.0 - np.sin(phi) * np.sin(big_phi) * cos_dt - np.cos(phi) * np.cos(big_phi))
        / h**2
    )
    u = np.sin(big_phi) * np.sin(big_theta - theta)
    v = -np.cos(phi) * np.sin(big_phi) * cos_dt + np.sin(phi) * np.cos(big_phi)

    def s(j, k):
        return (lw * u**j * v**k).sum(axis=1)

    def t(j, k):
        return (lw * u**j * v**k) @ responses

    c0 = s(2, 0) * s(0, 2) - s(1, 1) ** 2
    c1 = s(1, 0) * s(0, 2) - s(0, 1) * s(1, 1)
    c2 = s(1, 0) * s(1, 1) - s(0, 1) * s(2, 0)
    numer = c0 * t(0, 0) - c1 * t(1, 0) + c2 * t(0, 1)
    denom = c0 * s(0, 0) - c1 * s(1, 0) + c2 * s(0, 1)
    return numer / denom
