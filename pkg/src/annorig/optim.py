"""Damped least-squares refinement shared by the calibration solvers.

A small Levenberg-Marquardt loop with a multiplicative damping schedule
(x10 on reject, /10 on accept, lambda0 = 1e-3) and Marquardt scaling by the
diagonal of J^T J. The loop records every accepted cost so callers can assert
the accepted-step objective is monotone. States may live on a manifold: pass
`retract` to apply local-coordinate steps (used for rotations).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np


@dataclass
class LMResult:
    x: Any
    cost: float
    accepted_costs: list[float]
    gradient_inf_norm: float
    iterations: int
    converged: bool


def lm_minimize(x0: Any,
                residuals: Callable[[Any], np.ndarray],
                jacobian: Callable[[Any], np.ndarray],
                retract: Callable[[Any, np.ndarray], Any] | None = None,
                max_iterations: int = 200,
                lambda0: float = 1e-3,
                gradient_tol: float = 1e-10,
                ftol: float = 1e-12) -> LMResult:
    """Minimize sum(r^2). Each solve attempt counts as one iteration.

    Converged means one of:
      * the infinity norm of the gradient J^T r dropped below gradient_tol;
      * the relative cost improvement of an accepted step fell to machine
        precision; or
      * a rejected step's model-predicted decrease fell below the float
        noise floor of the cost evaluation, so no further decrease is
        representable (the numerical optimum) even though the analytic
        gradient has not reached the tolerance.
    The accepted-cost list starts with the initial cost and is
    non-increasing by construction.
    """
    if retract is None:
        retract = lambda x, step: x + step

    x = x0
    r = residuals(x)
    cost = float(r @ r)
    accepted = [cost]
    jac = jacobian(x)
    grad = jac.T @ r
    gnorm = float(np.abs(grad).max()) if grad.size else 0.0
    lam = lambda0
    iterations = 0
    converged = bool(gnorm < gradient_tol or cost == 0.0)

    while iterations < max_iterations and not converged:
        iterations += 1
        jtj = jac.T @ jac
        damping = np.diag(np.maximum(np.diag(jtj), 1e-12))
        try:
            step = np.linalg.solve(jtj + lam * damping, -grad)
        except np.linalg.LinAlgError:
            lam = min(lam * 10.0, 1e14)
            continue
        x_new = retract(x, step)
        r_new = residuals(x_new)
        cost_new = float(r_new @ r_new)
        if np.isfinite(cost_new) and cost_new < cost:
            improvement = cost - cost_new
            x, r, cost = x_new, r_new, cost_new
            accepted.append(cost)
            lam = max(lam / 10.0, 1e-13)
            jac = jacobian(x)
            grad = jac.T @ r
            gnorm = float(np.abs(grad).max())
            converged = bool(gnorm < gradient_tol or cost == 0.0
                             or improvement <= ftol * cost)
        else:
            # predicted decrease of the damped step; when even that is below
            # the summation noise of the cost, no step can ever be accepted
            predicted = float(-grad @ step + lam * (step @ (damping @ step)))
            noise_floor = 8.0 * np.finfo(float).eps * max(len(r), 1) * cost
            if predicted <= noise_floor:
                converged = True
                break
            lam = min(lam * 10.0, 1e14)
            if lam >= 1e14:
                break  # steps no longer representable; verdict from flags so far

    return LMResult(x=x, cost=cost, accepted_costs=accepted,
                    gradient_inf_norm=gnorm, iterations=iterations,
                    converged=converged)


def project_points(intrinsics: np.ndarray, rot: np.ndarray, t: np.ndarray,
                   points: np.ndarray) -> np.ndarray:
    """Project (N,3) points with intrinsics [fx fy cx cy k1 k2 p1 p2]."""
    fx, fy, cx, cy, k1, k2, p1, p2 = intrinsics
    p = points @ rot.T + t
    x = p[:, 0] / p[:, 2]
    y = p[:, 1] / p[:, 2]
    r2 = x * x + y * y
    radial = 1.0 + k1 * r2 + k2 * r2 * r2
    xd = x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x)
    yd = y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y
    return np.stack([fx * xd + cx, fy * yd + cy], axis=1)


def projection_jacobians(intrinsics: np.ndarray, rot: np.ndarray, t: np.ndarray,
                         points: np.ndarray):
    """Analytic partials of the projection for the LM solvers.

    Returns (uv, d_uv/d_intrinsics (N,2,8), d_uv/d_omega (N,2,3),
    d_uv/d_t (N,2,3)) where omega is a left rotation perturbation:
    R <- exp(hat(omega)) @ R, so dP/d_omega = -hat(R @ X).
    """
    fx, fy, cx, cy, k1, k2, p1, p2 = intrinsics
    n = len(points)
    p = points @ rot.T + t
    px, py, pz = p[:, 0], p[:, 1], p[:, 2]
    x = px / pz
    y = py / pz
    r2 = x * x + y * y
    radial = 1.0 + k1 * r2 + k2 * r2 * r2
    xd = x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x)
    yd = y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y
    uv = np.stack([fx * xd + cx, fy * yd + cy], axis=1)

    # distorted-coordinate partials w.r.t. the normalized coordinates
    dr = k1 + 2.0 * k2 * r2  # d(radial)/d(r2)
    dxd_dx = radial + 2.0 * x * x * dr + 2.0 * p1 * y + 6.0 * p2 * x
    dxd_dy = 2.0 * x * y * dr + 2.0 * p1 * x + 2.0 * p2 * y
    dyd_dx = 2.0 * x * y * dr + 2.0 * p1 * x + 2.0 * p2 * y
    dyd_dy = radial + 2.0 * y * y * dr + 6.0 * p1 * y + 2.0 * p2 * x

    # normalized coordinates w.r.t. the sensor-frame point
    inv_z = 1.0 / pz
    dx_dp = np.stack([inv_z, np.zeros(n), -px * inv_z * inv_z], axis=1)
    dy_dp = np.stack([np.zeros(n), inv_z, -py * inv_z * inv_z], axis=1)

    du_dp = fx * (dxd_dx[:, None] * dx_dp + dxd_dy[:, None] * dy_dp)
    dv_dp = fy * (dyd_dx[:, None] * dx_dp + dyd_dy[:, None] * dy_dp)
    duv_dp = np.stack([du_dp, dv_dp], axis=1)  # (N,2,3)

    duv_dt = duv_dp
    # dP/d_omega = -hat(v) with v = R @ X = P - t
    v = p - t
    hat = np.zeros((n, 3, 3))
    hat[:, 0, 1] = -v[:, 2]
    hat[:, 0, 2] = v[:, 1]
    hat[:, 1, 0] = v[:, 2]
    hat[:, 1, 2] = -v[:, 0]
    hat[:, 2, 0] = -v[:, 1]
    hat[:, 2, 1] = v[:, 0]
    duv_domega = -np.einsum("nij,njk->nik", duv_dp, hat)

    duv_dintr = np.zeros((n, 2, 8))
    duv_dintr[:, 0, 0] = xd
    duv_dintr[:, 1, 1] = yd
    duv_dintr[:, 0, 2] = 1.0
    duv_dintr[:, 1, 3] = 1.0
    duv_dintr[:, 0, 4] = fx * x * r2
    duv_dintr[:, 0, 5] = fx * x * r2 * r2
    duv_dintr[:, 0, 6] = fx * 2.0 * x * y
    duv_dintr[:, 0, 7] = fx * (r2 + 2.0 * x * x)
    duv_dintr[:, 1, 4] = fy * y * r2
    duv_dintr[:, 1, 5] = fy * y * r2 * r2
    duv_dintr[:, 1, 6] = fy * (r2 + 2.0 * y * y)
    duv_dintr[:, 1, 7] = fy * 2.0 * x * y

    return uv, duv_dintr, duv_domega, duv_dt


def reprojection_rms(residuals: np.ndarray) -> float:
    """RMS pixel distance from stacked (u,v) residuals: sqrt(mean ||duv||^2)."""
    r = residuals.reshape(-1, 2)
    return float(np.sqrt(np.mean(np.sum(r * r, axis=1)))) if len(r) else 0.0
