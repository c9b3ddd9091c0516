"""World-to-sensor pose estimation and workspace frame construction.

solve_pnp recovers a sensor pose from 3D-2D correspondences by minimizing the
reprojection error, initialized from a planar-homography decomposition (the
reference targets here are planar grids touched by the calibrated pointer).
build_world_frame anchors the global coordinate system on the workspace
surface from pointer touches of the notched circle grid.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (ConvergenceFailure, InsufficientCorrespondences,
                     NonPlanarTouches)
from .geometry import (CAMERA, TRACKER, WORLD, CameraModel, Pixel, Point3,
                       RigidTransform, undistort_normalized)
from .homography import estimate_homography
from .optim import lm_minimize, project_points, projection_jacobians, reprojection_rms
from .rotations import nearest_rotation, rodrigues


@dataclass(frozen=True)
class Correspondence3D2D:
    """A touched reference point and its detected image location."""

    world_point: Point3
    image_point: Pixel


@dataclass(frozen=True)
class CircleGridSpec:
    """Asymmetric circle target; circles carry a machined centering notch.

    diagonal_spacing is the distance between nearest (diagonally adjacent)
    circle centers. Odd rows are offset by half the horizontal pitch.
    """

    rows: int
    cols: int
    diagonal_spacing: float
    notch_diameter: float = 0.5
    asymmetric: bool = True

    def __post_init__(self):
        if self.rows < 4 or self.cols < 4:
            raise ValueError("grid needs at least 4 rows and 4 columns")
        if self.diagonal_spacing <= 0:
            raise ValueError("spacing must be positive")

    def points(self) -> np.ndarray:
        """(rows*cols, 2) circle centers in mm, row-major from the origin circle."""
        a = self.diagonal_spacing / np.sqrt(2.0)
        pts = []
        for i in range(self.rows):
            for j in range(self.cols):
                offset = a if (self.asymmetric and i % 2 == 1) else 0.0
                pts.append([2.0 * a * j + offset, a * i])
        return np.array(pts)


@dataclass
class PnpResult:
    pose: RigidTransform  # world -> sensor
    rms_px: float
    accepted_costs: list[float]


def _plane_basis(points: np.ndarray):
    """Best-fit plane of (N,3) points: (origin, e1, e2, normal, max |distance|)."""
    origin = points.mean(axis=0)
    centered = points - origin
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    e1, e2, normal = vt[0], vt[1], vt[2]
    residual = float(np.abs(centered @ normal).max()) if len(points) else 0.0
    return origin, e1, e2, normal, residual


def solve_pnp(correspondences: list[Correspondence3D2D], cam: CameraModel,
              max_iterations: int = 200,
              world_frame: str = WORLD, sensor_frame: str = CAMERA) -> PnpResult:
    """Pose from >= 6 3D-2D correspondences by reprojection minimization.

    Initialization: undistort the detections, express the (near-planar) world
    points in their best-fit plane basis, estimate the plane->normalized-image
    homography and decompose it. Refinement: Levenberg-Marquardt on the pixel
    reprojection error with analytic Jacobians. Raises ConvergenceFailure when
    the gradient has not dropped below 1e-10 within the iteration budget.
    """
    if len(correspondences) < 6:
        raise InsufficientCorrespondences(
            f"need >= 6 correspondences, got {len(correspondences)}")
    world = np.array([c.world_point.xyz for c in correspondences])
    pixels = np.array([c.image_point.uv for c in correspondences])

    # homography initialization in the plane basis of the world points
    origin, e1, e2, _, _ = _plane_basis(world)
    plane_coords = np.column_stack([(world - origin) @ e1, (world - origin) @ e2])
    xy_dist = np.column_stack([(pixels[:, 0] - cam.cx) / cam.fx,
                               (pixels[:, 1] - cam.cy) / cam.fy])
    normalized = undistort_normalized(cam, xy_dist)
    h = estimate_homography(plane_coords, normalized)

    a = h.copy()
    scale = 1.0 / np.linalg.norm(a[:, 0])
    if a[2, 2] * scale < 0:
        scale = -scale
    r1, r2 = a[:, 0] * scale, a[:, 1] * scale
    t_pb = a[:, 2] * scale
    rot_pb = nearest_rotation(np.column_stack([r1, r2, np.cross(r1, r2)]))
    basis = np.column_stack([e1, e2, np.cross(e1, e2)])
    rot0 = nearest_rotation(rot_pb @ basis.T)
    t0 = t_pb - rot0 @ origin

    intr = np.array([cam.fx, cam.fy, cam.cx, cam.cy, cam.k1, cam.k2, cam.p1, cam.p2])

    def residuals(state):
        rot, t = state
        return (project_points(intr, rot, t, world) - pixels).ravel()

    def jacobian(state):
        rot, t = state
        _, _, d_omega, d_t = projection_jacobians(intr, rot, t, world)
        n = len(world)
        jac = np.zeros((2 * n, 6))
        jac[:, :3] = d_omega.reshape(2 * n, 3)
        jac[:, 3:] = d_t.reshape(2 * n, 3)
        return jac

    def retract(state, step):
        rot, t = state
        return (rodrigues(step[:3]) @ rot, t + step[3:])

    result = lm_minimize((rot0, t0), residuals, jacobian, retract,
                         max_iterations=max_iterations)
    if not result.converged:
        raise ConvergenceFailure(
            f"PnP gradient stayed at {result.gradient_inf_norm:.3e} after "
            f"{result.iterations} iterations")
    rot, t = result.x
    pose = RigidTransform(nearest_rotation(rot), t, world_frame, sensor_frame)
    rms = reprojection_rms(residuals(result.x))
    return PnpResult(pose=pose, rms_px=rms, accepted_costs=result.accepted_costs)


def build_world_frame(grid: CircleGridSpec, touched_points: list[Point3],
                      plane_tol_mm: float = 1.0) -> RigidTransform:
    """Anchor the world frame on the touched grid: tracker -> world transform.

    World origin sits at the first touched circle, x runs along the first grid
    row (least-squares line through its touches), z is the fitted plane normal
    oriented toward the tracker, y completes the right-handed frame. Touches
    must arrive in grid order (row-major) and cover at least 6 circles.
    """
    if len(touched_points) < 6:
        raise InsufficientCorrespondences(
            f"need >= 6 touched circles, got {len(touched_points)}")
    pts = np.array([p.xyz for p in touched_points])
    _, _, _, normal, residual = _plane_basis(pts)
    if residual >= plane_tol_mm:
        raise NonPlanarTouches(
            f"plane residual {residual:.3f} mm >= {plane_tol_mm} mm")

    origin = pts[0]
    # normal toward the tracker origin (the tracker watches the table from above)
    if np.dot(normal, -origin) < 0:
        normal = -normal

    row_len = min(grid.cols, len(pts))
    row = pts[:row_len]
    centered = row - row.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    x_axis = vt[0]
    if np.dot(x_axis, row[-1] - row[0]) < 0:
        x_axis = -x_axis
    x_axis = x_axis - np.dot(x_axis, normal) * normal
    x_axis = x_axis / np.linalg.norm(x_axis)
    y_axis = np.cross(normal, x_axis)

    rot = np.vstack([x_axis, y_axis, normal])  # world coords = rot @ (p - origin)
    return RigidTransform(nearest_rotation(rot), -rot @ origin, TRACKER, WORLD)
