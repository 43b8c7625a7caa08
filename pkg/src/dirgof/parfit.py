"""Parametric regression families on the sphere and least squares fitting.

Families that are linear in the parameter (constant, linear, constrained
linear, the fixed-frequency trigonometric family) are solved in closed form
through a QR factorization; the damped-sine family goes through damped
Gauss-Newton (Levenberg-Marquardt) seeded by a coarse grid search.  All
built-in families are assembled from module-level functions and partials so
scenario objects can cross process boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import partial
from math import pi
from typing import Callable

import numpy as np
from scipy import linalg as sla


class RankDeficientError(RuntimeError):
    """The regression design of a linear-in-parameter family lost rank."""


@dataclass(frozen=True, eq=False)
class ParametricFamily:
    """Regression family m_theta with analytic parameter gradient.

    ``design`` is set for families linear in theta (prediction = design @
    theta) and enables the closed-form fit and batched refits.
    """

    kind: str
    dim_theta: int
    predict: Callable[[np.ndarray, np.ndarray], np.ndarray]
    grad_theta: Callable[[np.ndarray, np.ndarray], np.ndarray]
    design: Callable[[np.ndarray], np.ndarray] | None = None
    meta: dict = field(default_factory=dict)


@dataclass
class ThetaEstimate:
    """Fitted parameter with residuals and solver diagnostics."""

    theta: np.ndarray
    residuals: np.ndarray
    converged: bool
    iterations: int
    objective: float


def _linear_predict(design_fn, theta, points):
    return design_fn(np.atleast_2d(points)) @ np.asarray(theta, dtype=float)


def _linear_grad(design_fn, theta, points):
    return design_fn(np.atleast_2d(points))


def _from_design(kind, dim_theta, design_fn, meta=None) -> ParametricFamily:
    return ParametricFamily(
        kind=kind,
        dim_theta=dim_theta,
        predict=partial(_linear_predict, design_fn),
        grad_theta=partial(_linear_grad, design_fn),
        design=design_fn,
        meta=meta or {},
    )


def _constant_design(points):
    return np.ones((points.shape[0], 1))


def _linear_design(points):
    return np.column_stack([np.ones(points.shape[0]), points])


def _constrained_design(null_basis, points):
    return np.column_stack([np.ones(points.shape[0]), points @ null_basis])


def _trig_design(points):
    return np.column_stack(
        [
            np.ones(points.shape[0]),
            np.sin(2.0 * pi * points[:, 1]),
            np.cos(2.0 * pi * points[:, 0]),
        ]
    )


def _damped_sine_phase(points):
    return 1.0 / (2.0 + points[:, -1])


def _damped_sine_predict(theta, points):
    points = np.atleast_2d(points)
    c, a, b = theta
    return c + a * np.sin(2.0 * pi * b * _damped_sine_phase(points))


def _damped_sine_grad(theta, points):
    points = np.atleast_2d(points)
    _, a, b = theta
    u = _damped_sine_phase(points)
    phase = 2.0 * pi * b * u
    return np.column_stack(
        [np.ones(points.shape[0]), np.sin(phase), a * np.cos(phase) * 2.0 * pi * u]
    )


def constant_family() -> ParametricFamily:
    """m(x) = c."""
    return _from_design("constant", 1, _constant_design)


def linear_family(q: int) -> ParametricFamily:
    """m(x) = c + eta . x with theta = (c, eta)."""
    return _from_design("linear", q + 2, _linear_design)


def constrained_linear_family(constraint: np.ndarray, q: int) -> ParametricFamily:
    """Linear family with the slope confined to the null space of a matrix.

    The slope is reparameterized as eta = N beta where N spans the null
    space, so the constraint holds exactly for every fitted parameter.
    """
    constraint = np.atleast_2d(np.asarray(constraint, dtype=float))
    if constraint.shape[1] != q + 1:
        raise ValueError(
            f"constraint matrix must have q+1 = {q + 1} columns, got {constraint.shape[1]}"
        )
    null_basis = sla.null_space(constraint)
    if null_basis.shape[1] == 0:
        raise ValueError("constraint matrix leaves no free slope directions")
    return _from_design(
        "constrained-linear",
        1 + null_basis.shape[1],
        partial(_constrained_design, null_basis),
        meta={"constraint": constraint, "null_basis": null_basis},
    )


def constrained_slope(family: ParametricFamily, theta) -> np.ndarray:
    """Map a constrained-linear parameter back to the ambient slope vector."""
    return family.meta["null_basis"] @ np.asarray(theta, dtype=float)[1:]


def trig_family(q: int) -> ParametricFamily:
    """m(x) = c + a sin(2 pi x_2) + b cos(2 pi x_1); linear in (c, a, b)."""
    if q < 1:
        raise ValueError("the trigonometric family needs q >= 1")
    return _from_design("trig-s3", 3, _trig_design)


def damped_sine_family(q: int) -> ParametricFamily:
    """m(x) = c + a sin(2 pi b / (2 + x_last)); nonlinear in b."""
    return ParametricFamily(
        kind="damped-sine-s4",
        dim_theta=3,
        predict=_damped_sine_predict,
        grad_theta=_damped_sine_grad,
    )


def custom_family(predict, grad_theta, dim_theta, kind="custom") -> ParametricFamily:
    return ParametricFamily(
        kind=kind, dim_theta=dim_theta, predict=predict, grad_theta=grad_theta
    )


def predict_batch(family: ParametricFamily, theta, points) -> np.ndarray:
    """Model predictions at stacked points for a fixed parameter."""
    return np.asarray(family.predict(np.asarray(theta, dtype=float), points), dtype=float)


def _design_qr(family, points):
    design = family.design(np.atleast_2d(points))
    if np.linalg.matrix_rank(design) < family.dim_theta:
        raise RankDeficientError(
            f"design of family {family.kind!r} is rank deficient "
            f"({points.shape[0]} rows, {family.dim_theta} parameters)"
        )
    q_mat, r_mat = np.linalg.qr(design)
    return design, q_mat, r_mat


def _grid_init_damped_sine(family, points, responses):
    """Coarse (a, b) grid with the optimal intercept, seeding the solver."""
    best = None
    u = _damped_sine_phase(np.atleast_2d(points))
    for a in np.linspace(0.5, 5.0, 5):
        for b in np.linspace(0.5, 5.0, 5):
            s = a * np.sin(2.0 * pi * b * u)
            c = float(np.mean(responses - s))
            sse = float(np.sum((responses - c - s) ** 2))
            if best is None or sse < best[0]:
                best = (sse, np.array([c, a, b]))
    return best[1]


def _levenberg_marquardt(family, points, responses, theta0, max_iter=200, gtol=1e-8):
    theta = np.asarray(theta0, dtype=float).copy()
    resid = responses - predict_batch(family, theta, points)
    objective = float(resid @ resid)
    lam = 1e-3
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        jac = family.grad_theta(theta, points)
        grad = 2.0 * (jac.T @ resid)
        if np.linalg.norm(grad) <= gtol:
            converged = True
            break
        hess = jac.T @ jac
        scale = np.diag(hess).copy()
        scale[scale <= 0] = 1.0
        accepted = False
        while lam <= 1e12:
            try:
                step = np.linalg.solve(hess + lam * np.diag(scale), jac.T @ resid)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            cand = theta + step
            cand_resid = responses - predict_batch(family, cand, points)
            cand_obj = float(cand_resid @ cand_resid)
            if cand_obj < objective:
                theta, resid, objective = cand, cand_resid, cand_obj
                lam = max(lam / 10.0, 1e-12)
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            # no downhill step within float precision; stationary if the
            # gradient is negligible on the scale of the objective (a stuck
            # solver far from a minimum carries a gradient of order n)
            converged = np.linalg.norm(grad) <= 1e-3 * (1.0 + objective)
            break
    return ThetaEstimate(
        theta=theta,
        residuals=resid,
        converged=converged,
        iterations=iterations,
        objective=objective,
    )


def fit(family: ParametricFamily, points, responses, theta_init=None) -> ThetaEstimate:
    """Least squares fit of the family; closed form when linear in theta."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    responses = np.asarray(responses, dtype=float)
    if points.shape[0] < family.dim_theta:
        raise ValueError(
            f"need n >= {family.dim_theta} observations, got {points.shape[0]}"
        )
    if family.design is not None:
        design, q_mat, r_mat = _design_qr(family, points)
        theta = sla.solve_triangular(r_mat, q_mat.T @ responses, lower=False)
        resid = responses - design @ theta
        return ThetaEstimate(
            theta=theta,
            residuals=resid,
            converged=True,
            iterations=0,
            objective=float(resid @ resid),
        )
    seeds = []
    if theta_init is not None:
        theta_init = np.asarray(theta_init, dtype=float)
        if not np.all(np.isfinite(theta_init)):
            raise ValueError("theta_init must be finite")
        seeds.append(theta_init)
    if family.kind == "damped-sine-s4":
        # the sine frequency makes the objective multimodal; the grid seed
        # always participates so an unlucky init cannot trap the fit
        seeds.append(_grid_init_damped_sine(family, points, responses))
    if not seeds:
        seeds.append(np.zeros(family.dim_theta))
    fits = [_levenberg_marquardt(family, points, responses, seed) for seed in seeds]
    return min(fits, key=lambda est: est.objective)


def fit_batch(family: ParametricFamily, points, response_matrix):
    """Fit many response vectors over a common design.

    Returns (thetas, residuals, converged) with one row per response vector.
    Linear-in-theta families reuse one QR factorization; others iterate from
    the fit of the row mean as a warm start.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    ys = np.atleast_2d(np.asarray(response_matrix, dtype=float))
    if family.design is not None:
        design, q_mat, r_mat = _design_qr(family, points)
        thetas = sla.solve_triangular(r_mat, q_mat.T @ ys.T, lower=False).T
        residuals = ys - thetas @ design.T
        return thetas, residuals, np.ones(ys.shape[0], dtype=bool)
    warm = fit(family, points, ys.mean(axis=0)).theta
    thetas = np.empty((ys.shape[0], family.dim_theta))
    residuals = np.empty_like(ys)
    converged = np.empty(ys.shape[0], dtype=bool)
    for i, y in enumerate(ys):
        est = _levenberg_marquardt(family, points, y, warm)
        thetas[i], residuals[i], converged[i] = est.theta, est.residuals, est.converged
    return thetas, residuals, converged
