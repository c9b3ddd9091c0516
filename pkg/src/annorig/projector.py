"""Projector intrinsic/extrinsic calibration from decoded correspondences.

Each checkerboard corner detected in the camera image is transferred into
projector coordinates through a homography fitted over the decoded
correspondences in a small patch around the corner. The projector is then
calibrated exactly like a camera on those transferred corners, and its pose
relative to the camera is averaged over the shared views.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDecodablePixels, NoSharedViews
from .geometry import CAMERA, PROJECTOR, Pixel, RigidTransform, compose
from .graycode import CorrespondenceMap
from .homography import apply_homography, estimate_homography
from .intrinsics import IntrinsicsResult, PlanarView, calibrate_intrinsics_zhang
from .rotations import mean_rotation, rodrigues_inv

DEFAULT_PATCH_RADIUS = 15
MIN_PATCH_PIXELS = 20


def local_homography_corner(corner: Pixel, map_u: CorrespondenceMap,
                            map_v: CorrespondenceMap,
                            patch_radius: int = DEFAULT_PATCH_RADIUS,
                            min_pixels: int = MIN_PATCH_PIXELS) -> Pixel:
    """Transfer a sub-pixel camera corner into projector coordinates.

    Fits a camera->projector homography over every decodable pixel of the
    square patch centered on the corner and applies it to the corner itself.
    """
    h, w = map_u.coords.shape
    cx = int(round(corner.u))
    cy = int(round(corner.v))
    x0, x1 = max(0, cx - patch_radius), min(w, cx + patch_radius + 1)
    y0, y1 = max(0, cy - patch_radius), min(h, cy + patch_radius + 1)

    patch_valid = map_u.valid[y0:y1, x0:x1] & map_v.valid[y0:y1, x0:x1]
    ys, xs = np.nonzero(patch_valid)
    if len(xs) < min_pixels:
        raise InsufficientDecodablePixels(
            f"{len(xs)} decodable pixels in patch, need >= {min_pixels}")
    cam_pts = np.column_stack([xs + x0, ys + y0]).astype(float)
    proj_pts = np.column_stack([map_u.coords[y0:y1, x0:x1][ys, xs],
                                map_v.coords[y0:y1, x0:x1][ys, xs]])
    h_local = estimate_homography(cam_pts, proj_pts)
    u, v = apply_homography(h_local, corner.uv)[0]
    return Pixel(float(u), float(v))


@dataclass
class ProjectorView:
    """One calibration view: board geometry, camera corners, decoded maps."""

    board_points: np.ndarray          # (N,2) mm on the checkerboard plane
    camera_corners: np.ndarray        # (N,2) px, sub-pixel
    map_u: CorrespondenceMap
    map_v: CorrespondenceMap


def calibrate_projector(views: list[ProjectorView], width: int, height: int,
                        patch_radius: int = DEFAULT_PATCH_RADIUS) -> IntrinsicsResult:
    """Projector intrinsics + per-view poses via the virtual-camera pipeline.

    Corners are transferred per view with local homographies; the transferred
    corners then feed the same planar calibration used for the camera. Errors
    from the underlying stages (too few views, undecodable patches, parallel
    orientations) propagate unchanged.
    """
    planar_views = []
    for view in views:
        proj_corners = np.array([
            local_homography_corner(Pixel(float(u), float(v)), view.map_u,
                                    view.map_v, patch_radius=patch_radius).uv
            for u, v in np.atleast_2d(view.camera_corners)])
        planar_views.append(PlanarView(view.board_points, proj_corners))
    return calibrate_intrinsics_zhang(planar_views, width, height,
                                      sensor_frame=PROJECTOR)


@dataclass
class StereoResult:
    transform: RigidTransform  # camera -> projector
    max_rotation_disagreement_rad: float
    max_translation_disagreement_mm: float


def stereo_extrinsics(camera_poses: list[RigidTransform],
                      projector_poses: list[RigidTransform]) -> StereoResult:
    """Camera->projector transform averaged over shared calibration views.

    Per shared view the relative transform is projector_pose ∘ camera_pose⁻¹;
    rotations are averaged as sign-aligned quaternions, translations
    arithmetically. Disagreement is the per-view maximum deviation from the
    average (geodesic angle / Euclidean distance).
    """
    shared = min(len(camera_poses), len(projector_poses))
    if shared == 0:
        raise NoSharedViews("stereo averaging needs at least one shared view")

    relatives = []
    for cam_pose, proj_pose in zip(camera_poses, projector_poses):
        rel = compose(proj_pose, cam_pose.inverse())
        relatives.append(rel)

    rot_mean = mean_rotation([r.rotation for r in relatives])
    t_mean = np.mean([r.translation for r in relatives], axis=0)
    transform = RigidTransform(rot_mean, t_mean, CAMERA, PROJECTOR)

    # log-map angle resolves tiny deviations arccos(trace) cannot
    rot_dev = max(float(np.linalg.norm(rodrigues_inv(rot_mean.T @ r.rotation)))
                  for r in relatives)
    t_dev = max(float(np.linalg.norm(r.translation - t_mean)) for r in relatives)
    return StereoResult(transform=transform,
                        max_rotation_disagreement_rad=rot_dev,
                        max_translation_disagreement_mm=t_dev)
