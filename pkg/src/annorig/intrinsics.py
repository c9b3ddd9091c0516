"""Camera intrinsic calibration from planar views.

Closed-form initialization from the image of the absolute conic constrained
by per-view plane homographies, followed by a joint Levenberg-Marquardt
refinement of intrinsics, Brown distortion and per-view poses against the
reprojection error. Distortion is pinned to zero during initialization and
released in the refinement. The model has no skew term; the closed form's
skew estimate is used only to seed the principal point and then dropped.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateOrientations, InsufficientViews
from .geometry import BOARD, CAMERA, CameraModel, RigidTransform
from .homography import estimate_homography
from .optim import lm_minimize, project_points, projection_jacobians, reprojection_rms
from .rotations import nearest_rotation, rodrigues

_CONIC_RANK_TOL = 1e-9


@dataclass
class PlanarView:
    """One observation of the planar target: board coords (mm) and pixels."""

    plane_points: np.ndarray  # (N,2) mm on the target plane
    image_points: np.ndarray  # (N,2) px

    def __post_init__(self):
        self.plane_points = np.atleast_2d(np.asarray(self.plane_points, dtype=float))
        self.image_points = np.atleast_2d(np.asarray(self.image_points, dtype=float))
        if self.plane_points.shape != self.image_points.shape:
            raise ValueError("plane/image point counts differ")


@dataclass
class IntrinsicsResult:
    camera: CameraModel
    poses: list[RigidTransform]  # plane (world) -> camera, one per view
    rms_px: float
    accepted_costs: list[float]  # monotone non-increasing refinement objective


def _conic_row(h: np.ndarray, i: int, j: int) -> np.ndarray:
    # v_ij of Zhang's method, from homography columns i and j (0-based)
    return np.array([
        h[0, i] * h[0, j],
        h[0, i] * h[1, j] + h[1, i] * h[0, j],
        h[1, i] * h[1, j],
        h[2, i] * h[0, j] + h[0, i] * h[2, j],
        h[2, i] * h[1, j] + h[1, i] * h[2, j],
        h[2, i] * h[2, j],
    ])


def _intrinsics_from_conic(b: np.ndarray) -> tuple[float, float, float, float]:
    b11, b12, b22, b13, b23, b33 = b
    denom = b11 * b22 - b12 * b12
    if abs(denom) < 1e-18 or abs(b11) < 1e-18:
        raise DegenerateOrientations("absolute-conic system did not determine K")
    v0 = (b12 * b13 - b11 * b23) / denom
    lam = b33 - (b13 * b13 + v0 * (b12 * b13 - b11 * b23)) / b11
    alpha_sq = lam / b11
    beta_sq = lam * b11 / denom
    if not (np.isfinite(alpha_sq) and np.isfinite(beta_sq)) or alpha_sq <= 0 or beta_sq <= 0:
        raise DegenerateOrientations("conic estimate is not positive definite")
    alpha = float(np.sqrt(alpha_sq))
    beta = float(np.sqrt(beta_sq))
    gamma = -b12 * alpha * alpha * beta / lam
    u0 = float(gamma * v0 / beta - b13 * alpha * alpha / lam)
    return alpha, beta, u0, float(v0)


def pose_from_homography(h: np.ndarray, k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Decompose a plane->image homography into (R, t) given intrinsics K.

    The plane is z=0 in its own coordinates. The sign is fixed so the target
    sits in front of the sensor (t_z > 0); R is snapped to the nearest
    rotation since h1, h2 are only approximately orthonormal.
    """
    k_inv = np.linalg.inv(k)
    a = k_inv @ h
    scale = 1.0 / np.linalg.norm(a[:, 0])
    if a[2, 2] * scale < 0:  # ensure positive depth of the plane origin
        scale = -scale
    r1 = a[:, 0] * scale
    r2 = a[:, 1] * scale
    t = a[:, 2] * scale
    r3 = np.cross(r1, r2)
    rot = nearest_rotation(np.column_stack([r1, r2, r3]))
    return rot, t


@dataclass
class _RefineState:
    intrinsics: np.ndarray            # [fx fy cx cy k1 k2 p1 p2]
    rotations: list[np.ndarray]
    translations: list[np.ndarray]


def _refine(views: list[PlanarView], state: _RefineState, max_iterations: int):
    points3 = [np.column_stack([v.plane_points, np.zeros(len(v.plane_points))])
               for v in views]
    observed = [v.image_points for v in views]
    counts = [len(p) for p in points3]
    n_views = len(views)

    def residuals(s: _RefineState) -> np.ndarray:
        parts = []
        for i in range(n_views):
            uv = project_points(s.intrinsics, s.rotations[i], s.translations[i], points3[i])
            parts.append((uv - observed[i]).ravel())
        return np.concatenate(parts)

    def jacobian(s: _RefineState) -> np.ndarray:
        total = 2 * sum(counts)
        jac = np.zeros((total, 8 + 6 * n_views))
        row = 0
        for i in range(n_views):
            _, d_intr, d_omega, d_t = projection_jacobians(
                s.intrinsics, s.rotations[i], s.translations[i], points3[i])
            rows = 2 * counts[i]
            jac[row:row + rows, :8] = d_intr.reshape(rows, 8)
            col = 8 + 6 * i
            jac[row:row + rows, col:col + 3] = d_omega.reshape(rows, 3)
            jac[row:row + rows, col + 3:col + 6] = d_t.reshape(rows, 3)
            row += rows
        return jac

    def retract(s: _RefineState, step: np.ndarray) -> _RefineState:
        rotations = []
        translations = []
        for i in range(n_views):
            seg = step[8 + 6 * i:8 + 6 * i + 6]
            rotations.append(rodrigues(seg[:3]) @ s.rotations[i])
            translations.append(s.translations[i] + seg[3:])
        return _RefineState(s.intrinsics + step[:8], rotations, translations)

    return lm_minimize(state, residuals, jacobian, retract,
                       max_iterations=max_iterations), residuals


def calibrate_intrinsics_zhang(views: list[PlanarView], width: int, height: int,
                               max_iterations: int = 200,
                               world_frame: str = BOARD,
                               sensor_frame: str = CAMERA) -> IntrinsicsResult:
    """Full planar-target intrinsic calibration.

    Needs >= 3 views with distinct target orientations; raises
    InsufficientViews otherwise and DegenerateOrientations when every view is
    parallel (the conic system loses rank). Reported rms is the final
    reprojection RMS in pixels.
    """
    if len(views) < 3:
        raise InsufficientViews(f"need >= 3 views, got {len(views)}")

    homographies = [estimate_homography(v.plane_points, v.image_points) for v in views]

    v_rows = []
    for h in homographies:
        v_rows.append(_conic_row(h, 0, 1))
        v_rows.append(_conic_row(h, 0, 0) - _conic_row(h, 1, 1))
    v_mat = np.array(v_rows)
    singular = np.linalg.svd(v_mat, compute_uv=False)
    # rank 5 needed to pin the conic up to scale; sigma_5 collapses when all
    # views share an orientation
    if singular[4] < _CONIC_RANK_TOL * singular[0]:
        raise DegenerateOrientations("calibration views are parallel")
    _, _, vt = np.linalg.svd(v_mat)
    fx0, fy0, cx0, cy0 = _intrinsics_from_conic(vt[-1])

    k0 = np.array([[fx0, 0.0, cx0], [0.0, fy0, cy0], [0.0, 0.0, 1.0]])
    rotations, translations = [], []
    for h in homographies:
        rot, t = pose_from_homography(h, k0)
        rotations.append(rot)
        translations.append(t)

    state0 = _RefineState(np.array([fx0, fy0, cx0, cy0, 0.0, 0.0, 0.0, 0.0]),
                          rotations, translations)
    result, residual_fn = _refine(views, state0, max_iterations)
    final = result.x
    rms = reprojection_rms(residual_fn(final))

    fx, fy, cx, cy, k1, k2, p1, p2 = final.intrinsics
    camera = CameraModel(fx=float(fx), fy=float(fy), cx=float(cx), cy=float(cy),
                         k1=float(k1), k2=float(k2), p1=float(p1), p2=float(p2),
                         width=width, height=height)
    poses = [RigidTransform(nearest_rotation(r), t, world_frame, sensor_frame)
             for r, t in zip(final.rotations, final.translations)]
    return IntrinsicsResult(camera=camera, poses=poses, rms_px=rms,
                            accepted_costs=result.accepted_costs)
