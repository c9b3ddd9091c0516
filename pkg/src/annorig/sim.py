"""Synthetic desk rig: tracker streams, camera renders, projector patterns.

Replaces the physical hardware with a deterministic simulator built around
the nominal geometry: sensors one metre above a 500 x 400 mm work area, a
5 MP camera and an HD projector, both rigidly mounted and looking down at
the table plane (world z = 0, z up). The world is strictly planar so every
rendered observable has an analytically checkable ground truth; all helpers
expose that truth for use as test oracles. Every random quantity flows from
one scenario seed: equal configs render byte-identical outputs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import PathOutOfWorkArea
from .geometry import (BOARD, CAMERA, PROJECTOR, WORLD, CalibrationBundle,
                       CameraModel, RigidTransform, compose, project_array,
                       undistort_normalized)
from .graycode import COLUMN_AXIS, GrayCodeSequence
from .image import ImageFrame
from .pivot import TrackedSample
from .rotations import rodrigues

NOMINAL_CAMERA = CameraModel(fx=2000.0, fy=2000.0, cx=1224.0, cy=1024.0,
                             width=2448, height=2048)
NOMINAL_PROJECTOR = CameraModel(fx=1800.0, fy=1800.0, cx=960.0, cy=540.0,
                                width=1920, height=1080)
NOMINAL_STANDOFF_MM = 1000.0
NOMINAL_WORK_AREA_MM = (500.0, 400.0)
SAMPLE_RATE_HZ = 60.0


def look_at(position: np.ndarray, target: np.ndarray,
            to_frame: str = CAMERA) -> RigidTransform:
    """World->sensor transform for a sensor at `position` looking at `target`,
    with the sensor's y axis roughly along -world-y (image y runs toward
    -y on the table)."""
    position = np.asarray(position, dtype=float)
    z_axis = np.asarray(target, dtype=float) - position
    z_axis = z_axis / np.linalg.norm(z_axis)
    x_axis = np.array([1.0, 0.0, 0.0])
    x_axis = x_axis - np.dot(x_axis, z_axis) * z_axis
    x_axis = x_axis / np.linalg.norm(x_axis)
    y_axis = np.cross(z_axis, x_axis)
    rot = np.vstack([x_axis, y_axis, z_axis])
    return RigidTransform(rot, -rot @ position, WORLD, to_frame)


@dataclass(frozen=True)
class RigConfig:
    """True geometry plus noise parameters and the scenario seed."""

    camera: CameraModel = NOMINAL_CAMERA
    projector: CameraModel = NOMINAL_PROJECTOR
    t_world_camera: RigidTransform = field(
        default_factory=lambda: look_at([0.0, 0.0, NOMINAL_STANDOFF_MM], [0.0, 0.0, 0.0]))
    t_world_projector: RigidTransform = field(
        default_factory=lambda: look_at([200.0, 0.0, NOMINAL_STANDOFF_MM],
                                        [0.0, 0.0, 0.0], to_frame=PROJECTOR))
    work_area: tuple[float, float] = NOMINAL_WORK_AREA_MM
    pose_sigma_mm: float = 0.1      # placeholder tracker noise, not a hardware claim
    rot_sigma_rad: float = 0.0002
    pixel_sigma_px: float = 0.0
    intensity_sigma: float = 0.0
    seed: int = 0

    @property
    def t_camera_projector(self) -> RigidTransform:
        return compose(self.t_world_projector, self.t_world_camera.inverse())

    def bundle(self) -> CalibrationBundle:
        """Ground-truth calibration bundle (what calibration should recover)."""
        return CalibrationBundle(camera=self.camera,
                                 t_world_camera=self.t_world_camera,
                                 projector=self.projector,
                                 t_camera_projector=self.t_camera_projector,
                                 reprojection_rms_px=0.0)

    def scaled(self, factor: float) -> "RigConfig":
        """Same geometry with both sensors at a reduced resolution (for fast
        rendering paths in tests)."""
        def scale(cam: CameraModel) -> CameraModel:
            return CameraModel(fx=cam.fx * factor, fy=cam.fy * factor,
                               cx=cam.cx * factor, cy=cam.cy * factor,
                               k1=cam.k1, k2=cam.k2, p1=cam.p1, p2=cam.p2,
                               width=int(round(cam.width * factor)),
                               height=int(round(cam.height * factor)))
        return replace(self, camera=scale(self.camera))


@dataclass(frozen=True)
class PlanePose:
    """A planar patch in the world: origin plus orthonormal in-plane axes."""

    origin: np.ndarray
    ex: np.ndarray
    ey: np.ndarray

    @property
    def normal(self) -> np.ndarray:
        return np.cross(self.ex, self.ey)

    def to_world(self, coords: np.ndarray) -> np.ndarray:
        """(N,2) plane coords (mm) -> (N,3) world points."""
        coords = np.atleast_2d(coords)
        return (self.origin + coords[:, :1] * self.ex + coords[:, 1:2] * self.ey)


def table_plane() -> PlanePose:
    return PlanePose(np.zeros(3), np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]))


@dataclass
class Scene:
    """Textured planar object on the table plus its per-frame rigid motion.

    Motion entries are (x_mm, y_mm, theta_rad): the object-frame origin and
    in-plane rotation at each frame index. Frame 0 is the rest pose used
    during the annotation stage.
    """

    texture: np.ndarray
    texel_size_mm: float = 1.0
    motion: list[tuple[float, float, float]] = field(
        default_factory=lambda: [(0.0, 0.0, 0.0)])
    background: int = 110

    def pose(self, frame_index: int) -> tuple[float, float, float]:
        if not self.motion:
            return (0.0, 0.0, 0.0)
        return self.motion[min(frame_index, len(self.motion) - 1)]


def checkerboard_texture(size: tuple[int, int] = (256, 256), square: int = 16,
                         low: int = 70, high: int = 190, noise: float = 30.0,
                         smooth: float = 1.0, seed: int = 0) -> np.ndarray:
    """Checker pattern plus fine noise plus a coarse random blob field.

    The blobs break the checker's periodicity; without them a translation by
    one period is indistinguishable inside a tracking window and LK can lock
    onto the wrong square. The fine noise keeps the structure tensor well
    conditioned between edges."""
    h, w = size
    yy, xx = np.mgrid[0:h, 0:w]
    checker = (((yy // square) + (xx // square)) % 2).astype(float)
    img = low + checker * (high - low) * 0.7
    rng = np.random.default_rng(seed)
    img = img + rng.normal(0.0, noise, size=img.shape)
    img = ndimage.gaussian_filter(img, smooth, mode="nearest")
    blobs = ndimage.gaussian_filter(rng.normal(0.0, 1.0, size=img.shape),
                                    square / 2.0, mode="nearest")
    peak = np.abs(blobs).max()
    if peak > 0:
        img = img + blobs * (45.0 / peak)
    return np.clip(img, 0, 255).astype(np.uint8)


# --- geometry ground truth ------------------------------------------------------

def camera_center_world(config: RigConfig) -> np.ndarray:
    t = config.t_world_camera
    return -t.rotation.T @ t.translation


def pixels_to_plane_world(cam: CameraModel, t_world_sensor: RigidTransform,
                          u: np.ndarray, v: np.ndarray,
                          plane: PlanePose) -> tuple[np.ndarray, np.ndarray]:
    """Back-project pixel grids onto a world plane.

    Returns ((..., 3) world points, (...,) valid mask). Vectorized over any
    pixel array shape; handles distortion through undistort_normalized.
    """
    shape = np.shape(u)
    xd = (np.ravel(u) - cam.cx) / cam.fx
    yd = (np.ravel(v) - cam.cy) / cam.fy
    xy = undistort_normalized(cam, np.stack([xd, yd], axis=1))
    dirs_cam = np.column_stack([xy, np.ones(len(xy))])
    rot_inv = t_world_sensor.rotation.T
    center = -rot_inv @ t_world_sensor.translation
    dirs_world = dirs_cam @ t_world_sensor.rotation  # == (R^T @ d^T)^T
    normal = plane.normal
    denom = dirs_world @ normal
    valid = np.abs(denom) > 1e-12
    scale = np.where(valid, ((plane.origin - center) @ normal) / np.where(valid, denom, 1.0), np.nan)
    pts = center + dirs_world * scale[:, None]
    valid &= scale > 0
    return pts.reshape(*shape, 3), valid.reshape(shape)


def world_to_pixels(cam: CameraModel, t_world_sensor: RigidTransform,
                    points_world: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(N,3) world points -> ((N,2) pixels, in-front mask)."""
    pts = np.atleast_2d(points_world)
    cam_pts = t_world_sensor.apply(pts)
    in_front = cam_pts[:, 2] > 0
    uv = np.full((len(pts), 2), np.nan)
    if in_front.any():
        uv[in_front] = project_array(cam, cam_pts[in_front])
    return uv, in_front


def _object_from_world(scene: Scene, frame_index: int, world_xy: np.ndarray) -> np.ndarray:
    x0, y0, theta = scene.pose(frame_index)
    c, s = np.cos(theta), np.sin(theta)
    dx = world_xy[..., 0] - x0
    dy = world_xy[..., 1] - y0
    return np.stack([c * dx + s * dy, -s * dx + c * dy], axis=-1)


def _world_from_object(scene: Scene, frame_index: int, obj_xy: np.ndarray) -> np.ndarray:
    x0, y0, theta = scene.pose(frame_index)
    c, s = np.cos(theta), np.sin(theta)
    ox = obj_xy[..., 0]
    oy = obj_xy[..., 1]
    return np.stack([c * ox - s * oy + x0, s * ox + c * oy + y0], axis=-1)


def map_pixels_between_frames(scene: Scene, config: RigConfig,
                              pixels: np.ndarray, frame_from: int,
                              frame_to: int) -> np.ndarray:
    """Analytic oracle: where object-surface pixels of one frame land in
    another frame. Pure transform chain; shares no code with the tracker."""
    pixels = np.atleast_2d(pixels)
    world, _ = pixels_to_plane_world(config.camera, config.t_world_camera,
                                     pixels[:, 0], pixels[:, 1], table_plane())
    obj = _object_from_world(scene, frame_from, world[:, :2])
    world_to = _world_from_object(scene, frame_to, obj)
    world3 = np.column_stack([world_to, np.zeros(len(world_to))])
    uv, _ = world_to_pixels(config.camera, config.t_world_camera, world3)
    return uv


def render_frame(scene: Scene, config: RigConfig, frame_index: int,
                 pointer_tip_world: np.ndarray | None = None,
                 pointer_radius_px: float = 9.0) -> ImageFrame:
    """Render the camera view of the textured plane at one motion step.

    Bilinear texture sampling through the exact projection chain; seeded
    Gaussian intensity noise (config.intensity_sigma) derived from
    (seed, frame_index), so renders are byte-identical for equal configs.
    The pointer, when inside the frustum, occludes the scene as a dark blob.
    """
    cam = config.camera
    vv, uu = np.mgrid[0:cam.height, 0:cam.width]
    world, valid = pixels_to_plane_world(cam, config.t_world_camera,
                                         uu.astype(float), vv.astype(float),
                                         table_plane())
    obj = _object_from_world(scene, frame_index, world[..., :2])

    th, tw = scene.texture.shape
    col = obj[..., 0] / scene.texel_size_mm + (tw - 1) / 2.0
    row = obj[..., 1] / scene.texel_size_mm + (th - 1) / 2.0
    inside = valid & (col >= 0) & (col <= tw - 1) & (row >= 0) & (row <= th - 1)

    img = np.full((cam.height, cam.width), float(scene.background))
    if inside.any():
        c0 = np.floor(col[inside]).astype(int)
        r0 = np.floor(row[inside]).astype(int)
        c0 = np.minimum(c0, tw - 2)
        r0 = np.minimum(r0, th - 2)
        fc = col[inside] - c0
        fr = row[inside] - r0
        tex = scene.texture.astype(float)
        top = tex[r0, c0] * (1 - fc) + tex[r0, c0 + 1] * fc
        bot = tex[r0 + 1, c0] * (1 - fc) + tex[r0 + 1, c0 + 1] * fc
        img[inside] = top * (1 - fr) + bot * fr

    if pointer_tip_world is not None:
        uv, in_front = world_to_pixels(cam, config.t_world_camera,
                                       np.asarray(pointer_tip_world, dtype=float))
        if in_front[0] and cam.contains(uv)[0]:
            du = uu - uv[0, 0]
            dv = vv - uv[0, 1]
            blob = du * du + dv * dv <= pointer_radius_px ** 2
            img[blob] = 15.0

    if config.intensity_sigma > 0:
        rng = np.random.default_rng([config.seed, 7919, frame_index])
        img = img + rng.normal(0.0, config.intensity_sigma, size=img.shape)
    return ImageFrame(np.clip(np.rint(img), 0, 255).astype(np.uint8), frame_index)


def render_sequence(scene: Scene, config: RigConfig, n_frames: int) -> list[ImageFrame]:
    return [render_frame(scene, config, i) for i in range(n_frames)]


# --- tracker stream -------------------------------------------------------------

DEFAULT_TIP_OFFSET = np.array([0.0, 0.0, -120.0])  # pen tip 120 mm below its DRF


@dataclass
class PointerStream:
    samples: list[TrackedSample]
    tips_world: np.ndarray  # (N,3) noiseless ground truth
    pen_down: list[bool]


def generate_pointer_stream(waypoints: np.ndarray, config: RigConfig,
                            speed_mm_s: float = 150.0,
                            tip_offset: np.ndarray = DEFAULT_TIP_OFFSET,
                            start_time: float = 0.0) -> PointerStream:
    """Samples at 60 Hz along a polyline path on the table.

    Pose noise (config.pose_sigma_mm translation, config.rot_sigma_rad
    small-angle rotation) is seeded from config.seed. Raises
    PathOutOfWorkArea when any waypoint leaves the work area. Pen is down for
    the whole path.
    """
    pts = np.atleast_2d(np.asarray(waypoints, dtype=float))
    half_w, half_h = config.work_area[0] / 2.0, config.work_area[1] / 2.0
    if np.any(np.abs(pts[:, 0]) > half_w) or np.any(np.abs(pts[:, 1]) > half_h):
        raise PathOutOfWorkArea(
            f"path exceeds the {config.work_area[0]:.0f} x "
            f"{config.work_area[1]:.0f} mm work area")

    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    total = arc[-1]
    step = speed_mm_s / SAMPLE_RATE_HZ
    distances = np.arange(0.0, total + step / 2, step) if total > 0 else np.array([0.0])
    xs = np.interp(distances, arc, pts[:, 0])
    ys = np.interp(distances, arc, pts[:, 1])
    tips = np.column_stack([xs, ys, np.zeros(len(xs))])

    rng = np.random.default_rng([config.seed, 104729])
    base_rot = rodrigues(np.array([np.deg2rad(25.0), 0.0, 0.0]))  # pen held tilted
    tip = np.asarray(tip_offset, dtype=float)
    samples = []
    for i, tip_world in enumerate(tips):
        rot = base_rot
        if config.rot_sigma_rad > 0:
            rot = rodrigues(rng.normal(0.0, config.rot_sigma_rad, 3)) @ rot
        translation = tip_world - rot @ tip
        if config.pose_sigma_mm > 0:
            translation = translation + rng.normal(0.0, config.pose_sigma_mm, 3)
        samples.append(TrackedSample(timestamp=start_time + i / SAMPLE_RATE_HZ,
                                     rotation=rot, translation=translation))
    return PointerStream(samples=samples, tips_world=tips,
                         pen_down=[True] * len(samples))


# --- pivot-calibration streams ----------------------------------------------------

def make_pivot_samples(tip_offset: np.ndarray, pivot_point: np.ndarray,
                       count: int, seed: int = 0, pose_sigma_mm: float = 0.0,
                       rot_sigma_rad: float = 0.0) -> list[TrackedSample]:
    """Poses pivoting about a fixed tip: R_k c + t_k = c' exactly at zero noise.

    Orientations sweep >= 120 degrees of azimuth with varied tilt, so the
    rotational spread safely exceeds the 90 degrees the acceptance demands.
    """
    rng = np.random.default_rng(seed)
    c = np.asarray(tip_offset, dtype=float)
    c_prime = np.asarray(pivot_point, dtype=float)
    samples = []
    for k in range(count):
        azimuth = 2.0 * np.pi * (k / max(count, 1)) * (2.0 / 3.0)
        tilt = np.deg2rad(10.0 + 25.0 * rng.random())
        rot = rodrigues(np.array([0.0, 0.0, azimuth])) @ rodrigues(np.array([tilt, 0.0, 0.0]))
        if rot_sigma_rad > 0:
            rot = rodrigues(rng.normal(0.0, rot_sigma_rad, 3)) @ rot
        t = c_prime - rot @ c
        if pose_sigma_mm > 0:
            t = t + rng.normal(0.0, pose_sigma_mm, 3)
        samples.append(TrackedSample(timestamp=k / SAMPLE_RATE_HZ,
                                     rotation=rot, translation=t))
    return samples


# --- planar calibration views -------------------------------------------------

def board_grid_mm(rows: int, cols: int, pitch_mm: float) -> np.ndarray:
    """(rows*cols, 2) planar target coordinates, row-major."""
    jj, ii = np.meshgrid(np.arange(cols), np.arange(rows))
    return np.column_stack([jj.ravel() * pitch_mm, ii.ravel() * pitch_mm]).astype(float)


def make_view_poses(n_views: int, seed: int = 0, depth_mm: float = 750.0):
    """Board poses (R, t) in the camera frame with guaranteed orientation
    diversity: tilts of 12-35 degrees about azimuths swept around the clock."""
    rng = np.random.default_rng(seed)
    poses = []
    for i in range(n_views):
        azimuth = 2.0 * np.pi * i / max(n_views, 1) + rng.normal(0.0, 0.1)
        tilt = np.deg2rad(12.0 + 23.0 * ((i % 5) / 4.0 + 0.05 * rng.random()))
        axis = np.array([np.cos(azimuth), np.sin(azimuth), 0.0])
        rot = rodrigues(axis * tilt)
        depth = depth_mm + 120.0 * rng.standard_normal()
        t = np.array([rng.normal(0.0, 25.0), rng.normal(0.0, 25.0), depth])
        poses.append((rot, t))
    return poses


def make_planar_views(camera: CameraModel, n_views: int, rows: int = 7,
                      cols: int = 10, pitch_mm: float = 25.0, seed: int = 0,
                      pixel_sigma_px: float = 0.0, center_board: bool = True):
    """Synthetic Zhang views: ((PlanarView list), board poses, board points).

    Image points are exact projections of the board under each pose plus
    optional Gaussian pixel noise; CameraModel `camera` is the ground truth
    the calibration should recover.
    """
    from .intrinsics import PlanarView

    board = board_grid_mm(rows, cols, pitch_mm)
    if center_board:
        board = board - board.mean(axis=0)
    board3 = np.column_stack([board, np.zeros(len(board))])
    intr = np.array([camera.fx, camera.fy, camera.cx, camera.cy,
                     camera.k1, camera.k2, camera.p1, camera.p2])
    rng = np.random.default_rng([seed, 13])
    views = []
    poses = make_view_poses(n_views, seed=seed)
    from .optim import project_points
    for rot, t in poses:
        uv = project_points(intr, rot, t, board3)
        if pixel_sigma_px > 0:
            uv = uv + rng.normal(0.0, pixel_sigma_px, uv.shape)
        views.append(PlanarView(board.copy(), uv))
    return views, poses, board


def make_pnp_correspondences(config: RigConfig, grid_points_mm: np.ndarray,
                             pixel_sigma_px: float = 0.0, seed: int = 0):
    """Touched world grid points and their detected camera pixels.

    World points lie on the table (z=0); pixels are the true projections plus
    noise. The true pose is config.t_world_camera.
    """
    from .extrinsics import Correspondence3D2D
    from .geometry import Pixel, Point3

    world3 = np.column_stack([grid_points_mm, np.zeros(len(grid_points_mm))])
    uv, _ = world_to_pixels(config.camera, config.t_world_camera, world3)
    rng = np.random.default_rng([seed, 41])
    if pixel_sigma_px > 0:
        uv = uv + rng.normal(0.0, pixel_sigma_px, uv.shape)
    return [Correspondence3D2D(Point3.from_array(w, WORLD), Pixel(float(u), float(v)))
            for w, (u, v) in zip(world3, uv)]


# --- projector patterns -----------------------------------------------------------

@dataclass
class GraycodeTruth:
    """Per-camera-pixel ground truth for rendered pattern captures."""

    proj_u: np.ndarray        # float projector column per camera pixel
    proj_v: np.ndarray
    sampled_u: np.ndarray     # integer column actually sampled (nearest)
    sampled_v: np.ndarray
    lit: np.ndarray           # camera pixels the projector reaches


def projector_coords_on_plane(config: RigConfig, plane: PlanePose):
    """Float projector coordinates seen by every camera pixel via the plane."""
    cam = config.camera
    vv, uu = np.mgrid[0:cam.height, 0:cam.width]
    world, valid = pixels_to_plane_world(cam, config.t_world_camera,
                                         uu.astype(float), vv.astype(float), plane)
    flat = world.reshape(-1, 3)
    proj_uv, in_front = world_to_pixels(config.projector, config.t_world_projector, flat)
    proj_u = proj_uv[:, 0].reshape(cam.height, cam.width)
    proj_v = proj_uv[:, 1].reshape(cam.height, cam.width)
    lit = (valid & in_front.reshape(valid.shape)
           & (proj_u >= -0.5) & (proj_u < config.projector.width - 0.5)
           & (proj_v >= -0.5) & (proj_v < config.projector.height - 0.5))
    return proj_u, proj_v, lit


def render_graycode_captures(config: RigConfig, sequence: GrayCodeSequence,
                             plane: PlanePose | None = None, ambient: float = 20.0,
                             contrast: float = 200.0, noise_sigma: float = 0.0,
                             seed_salt: int = 0, plane_mapping=None):
    """Camera captures of the projected stripe sequence on a plane.

    Patterns are sampled at the nearest projector pixel, so at zero noise the
    decoded coordinate equals the retained `sampled_*` ground truth exactly.
    plane_mapping takes a precomputed projector_coords_on_plane result so one
    view can share it across both pattern axes. Returns (capture pairs,
    GraycodeTruth).
    """
    if plane_mapping is None:
        plane_mapping = projector_coords_on_plane(config, plane or table_plane())
    proj_u, proj_v, lit = plane_mapping
    ur = np.clip(np.rint(proj_u), 0, config.projector.width - 1).astype(int)
    vr = np.clip(np.rint(proj_v), 0, config.projector.height - 1).astype(int)

    on_value = np.uint8(np.clip(round(ambient + contrast), 0, 255))
    off_value = np.uint8(np.clip(round(ambient), 0, 255))
    rng = np.random.default_rng([config.seed, 271, seed_salt])
    captures = []
    for idx, (pattern, _) in enumerate(sequence.pairs()):
        # stripe patterns vary along one axis only: 1D lookup, inverse by negation
        if sequence.axis == COLUMN_AXIS:
            stripe_on = pattern.pixels[0] > 127
            on = lit & stripe_on[ur]
        else:
            stripe_on = pattern.pixels[:, 0] > 127
            on = lit & stripe_on[vr]
        pair = []
        for bright in (on, lit & ~on):
            if noise_sigma > 0:
                intensity = np.where(bright, ambient + contrast, ambient)
                intensity = intensity + rng.normal(0.0, noise_sigma, intensity.shape)
                img = np.clip(np.rint(intensity), 0, 255).astype(np.uint8)
            else:
                img = np.where(bright, on_value, off_value)
            pair.append(ImageFrame(img, frame_index=2 * idx + len(pair)))
        captures.append((pair[0], pair[1]))
    truth = GraycodeTruth(proj_u=proj_u, proj_v=proj_v,
                          sampled_u=ur, sampled_v=vr, lit=lit)
    return captures, truth


def make_projector_calib_views(config: RigConfig, n_views: int,
                               corner_sigma_px: float = 0.0, seed: int = 0,
                               rows: int = 6, cols: int = 8,
                               pitch_mm: float = 30.0, threshold: float = 5.0):
    """Full projector-calibration inputs rendered through the rig.

    Per view: a checkerboard plane posed in the shared frustum, exact camera
    corners (plus optional noise), and correspondence maps decoded from
    rendered Gray-code captures. Returns (views, true camera poses, true
    projector poses) with poses mapping board -> sensor.
    """
    from .graycode import COLUMN_AXIS, ROW_AXIS, build_sequence, decode_correspondences
    from .projector import ProjectorView

    rng = np.random.default_rng([seed, 5])
    board = board_grid_mm(rows, cols, pitch_mm)
    board = board - board.mean(axis=0)

    seq_u = build_sequence(config.projector.width, COLUMN_AXIS,
                           config.projector.width, config.projector.height)
    seq_v = build_sequence(config.projector.height, ROW_AXIS,
                           config.projector.width, config.projector.height)

    views, cam_poses, proj_poses = [], [], []
    for i in range(n_views):
        azimuth = 2.0 * np.pi * i / max(n_views, 1)
        tilt = np.deg2rad(8.0 + 18.0 * ((i % 4) / 3.0))
        axis = np.array([np.cos(azimuth), np.sin(azimuth), 0.0])
        rot_plane = rodrigues(axis * tilt)
        origin = np.array([rng.normal(0.0, 20.0), rng.normal(0.0, 20.0),
                           40.0 + 30.0 * rng.random()])
        plane = PlanePose(origin, rot_plane @ np.array([1.0, 0.0, 0.0]),
                          rot_plane @ np.array([0.0, 1.0, 0.0]))

        corners_world = plane.to_world(board)
        cam_uv, _ = world_to_pixels(config.camera, config.t_world_camera, corners_world)
        if corner_sigma_px > 0:
            cam_uv = cam_uv + rng.normal(0.0, corner_sigma_px, cam_uv.shape)

        mapping = projector_coords_on_plane(config, plane)
        caps_u, _ = render_graycode_captures(config, seq_u, seed_salt=2 * i,
                                             plane_mapping=mapping)
        caps_v, _ = render_graycode_captures(config, seq_v, seed_salt=2 * i + 1,
                                             plane_mapping=mapping)
        map_u = decode_correspondences(caps_u, COLUMN_AXIS, config.projector.width,
                                       threshold=threshold)
        map_v = decode_correspondences(caps_v, ROW_AXIS, config.projector.height,
                                       threshold=threshold)
        views.append(ProjectorView(board.copy(), cam_uv, map_u, map_v))

        basis = np.column_stack([plane.ex, plane.ey, plane.normal])
        for t_ws, store, frame in ((config.t_world_camera, cam_poses, CAMERA),
                                   (config.t_world_projector, proj_poses, PROJECTOR)):
            rot = t_ws.rotation @ basis
            t = t_ws.rotation @ plane.origin + t_ws.translation
            store.append(RigidTransform(rot, t, BOARD, frame))
    return views, cam_poses, proj_poses


# --- scenario files ---------------------------------------------------------------

def scene_from_dict(d: dict) -> Scene:
    tex_cfg = d.get("texture", {})
    texture = checkerboard_texture(
        size=tuple(tex_cfg.get("size", (256, 256))),
        square=tex_cfg.get("square", 16),
        noise=tex_cfg.get("noise", 30.0),
        seed=tex_cfg.get("seed", 0))
    motion_cfg = d.get("motion", [[0.0, 0.0, 0.0]])
    if isinstance(motion_cfg, dict):
        n = motion_cfg["frames"]
        step = motion_cfg.get("step", [0.0, 0.0, 0.0])
        start = motion_cfg.get("start", [0.0, 0.0, 0.0])
        motion = [(start[0] + step[0] * i, start[1] + step[1] * i,
                   start[2] + step[2] * i) for i in range(n)]
    else:
        motion = [tuple(m) for m in motion_cfg]
    return Scene(texture=texture, texel_size_mm=d.get("texel_size_mm", 1.0),
                 motion=motion, background=d.get("background", 110))


def config_from_dict(d: dict) -> RigConfig:
    kwargs = {}
    if "camera" in d:
        kwargs["camera"] = CameraModel(**d["camera"])
    if "projector" in d:
        kwargs["projector"] = CameraModel(**d["projector"])
    for key in ("pose_sigma_mm", "rot_sigma_rad", "pixel_sigma_px",
                "intensity_sigma", "seed"):
        if key in d:
            kwargs[key] = d[key]
    config = RigConfig(**kwargs)
    if "resolution_scale" in d:
        config = config.scaled(d["resolution_scale"])
    return config


def run_scenario(scenario: dict, out_dir: str | Path) -> dict:
    """Materialize a scenario: PGM frames, pose stream, ground-truth JSON.

    Scenario keys: rig (config overrides), scene (texture/motion), frames
    (count), path (pointer waypoints + speed, optional).
    """
    from .image import write_frame_sequence
    from .trajectory import write_sample_stream

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = config_from_dict(scenario.get("rig", {}))
    scene = scene_from_dict(scenario.get("scene", {}))
    n_frames = int(scenario.get("frames", len(scene.motion)))

    frames = render_sequence(scene, config, n_frames)
    write_frame_sequence(frames, out / "frames")

    truth: dict = {"motion": [list(m) for m in scene.motion[:n_frames]],
                   "frames": n_frames}
    if "path" in scenario:
        path_cfg = scenario["path"]
        stream = generate_pointer_stream(
            np.array(path_cfg["waypoints"], dtype=float), config,
            speed_mm_s=path_cfg.get("speed", 150.0))
        write_sample_stream(list(zip(stream.samples, stream.pen_down)),
                            out / "pointer_stream.jsonl")
        truth["tips_world"] = stream.tips_world.tolist()
    (out / "ground_truth.json").write_text(json.dumps(truth, indent=2) + "\n")
    return truth
