"""Frame-tagged rigid transforms, camera models, and projection chains.

Coordinate conventions:

  * Four canonical frames: "pointer" (on the tracked pen's reference body),
    "world" (on the workspace surface, z up toward the sensors), "camera" and
    "projector" (optical frames, z along the optical axis into the scene).
    Calibration additionally uses "tracker" (raw tracking-system frame).
  * 3D units are millimetres everywhere; image coordinates are pixels.
  * A RigidTransform maps points OF its from_frame INTO its to_frame:
    p_to = rotation @ p_from + translation.
  * Projection uses the pinhole model u = fx*X/Z + cx, v = fy*Y/Z + cy, with a
    four-coefficient Brown distortion (k1, k2 radial; p1, p2 tangential)
    applied in normalized coordinates before the focal/principal terms.

Frame ids are checked at run time; composing or applying mismatched frames
raises FrameMismatch rather than silently producing garbage coordinates.
All values are immutable after construction and all operations are pure.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BehindCamera, FrameMismatch, RayParallelToPlane, StaleCalibration
from .rotations import nearest_rotation

POINTER = "pointer"
WORLD = "world"
CAMERA = "camera"
PROJECTOR = "projector"
TRACKER = "tracker"
BOARD = "board"  # per-view frame of a movable calibration target

_ORTHONORMALITY_TOL = 1e-9
_REORTHONORMALIZE_DRIFT = 1e-12


def _as_rotation(rotation: np.ndarray) -> np.ndarray:
    rot = np.array(rotation, dtype=float)
    if rot.shape != (3, 3):
        raise ValueError(f"rotation must be 3x3, got {rot.shape}")
    err = np.abs(rot.T @ rot - np.eye(3)).max()
    if err > _ORTHONORMALITY_TOL:
        raise ValueError(f"rotation not orthonormal (max deviation {err:.3e})")
    det = np.linalg.det(rot)
    if abs(det - 1.0) > _ORTHONORMALITY_TOL:
        raise ValueError(f"rotation determinant {det:.12f} != +1")
    if err > _REORTHONORMALIZE_DRIFT:
        rot = nearest_rotation(rot)
    rot.setflags(write=False)
    return rot


@dataclass(frozen=True)
class RigidTransform:
    """Rigid map p_to = rotation @ p_from + translation (mm)."""

    rotation: np.ndarray
    translation: np.ndarray
    from_frame: str
    to_frame: str

    def __post_init__(self):
        object.__setattr__(self, "rotation", _as_rotation(self.rotation))
        t = np.array(self.translation, dtype=float).reshape(3)
        if not np.all(np.isfinite(t)):
            raise ValueError("translation has non-finite components")
        t.setflags(write=False)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls, frame: str) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3), frame, frame)

    def inverse(self) -> "RigidTransform":
        return RigidTransform(self.rotation.T, -self.rotation.T @ self.translation,
                              self.to_frame, self.from_frame)

    def matrix(self) -> np.ndarray:
        """4x4 homogeneous form."""
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform raw (N,3) or (3,) arrays; no frame checking (hot path)."""
        pts = np.asarray(points, dtype=float)
        return pts @ self.rotation.T + self.translation


@dataclass(frozen=True)
class Point3:
    """A 3D point tagged with the frame its coordinates live in (mm)."""

    x: float
    y: float
    z: float
    frame: str

    def __post_init__(self):
        if not all(np.isfinite([self.x, self.y, self.z])):
            raise ValueError("point has non-finite components")

    @classmethod
    def from_array(cls, xyz: np.ndarray, frame: str) -> "Point3":
        x, y, z = np.asarray(xyz, dtype=float).reshape(3)
        return cls(float(x), float(y), float(z), frame)

    @property
    def xyz(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class Pixel:
    """Image coordinates in pixels. May lie outside the sensor; callers that
    care about boundedness check it themselves."""

    u: float
    v: float

    def __post_init__(self):
        if not all(np.isfinite([self.u, self.v])):
            raise ValueError("pixel has non-finite components")

    @property
    def uv(self) -> np.ndarray:
        return np.array([self.u, self.v])


@dataclass(frozen=True)
class CameraModel:
    """Pinhole intrinsics with Brown distortion; shared by camera and projector."""

    fx: float
    fy: float
    cx: float
    cy: float
    k1: float = 0.0
    k2: float = 0.0
    p1: float = 0.0
    p2: float = 0.0
    width: int = 0
    height: int = 0

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point outside sensor bounds")

    @property
    def k_matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx],
                         [0.0, self.fy, self.cy],
                         [0.0, 0.0, 1.0]])

    @property
    def distortion(self) -> np.ndarray:
        return np.array([self.k1, self.k2, self.p1, self.p2])

    def contains(self, uv: np.ndarray) -> np.ndarray:
        """Boolean mask of pixels within [0,width) x [0,height)."""
        uv = np.atleast_2d(uv)
        return ((uv[:, 0] >= 0) & (uv[:, 0] < self.width)
                & (uv[:, 1] >= 0) & (uv[:, 1] < self.height))


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Chained transform a∘b: apply b first, then a.

    Requires a.from_frame == b.to_frame; the result maps b.from_frame into
    a.to_frame. The product rotation is re-orthonormalized if accumulated
    drift exceeds 1e-12.
    """
    if a.from_frame != b.to_frame:
        raise FrameMismatch(
            f"cannot compose {a.from_frame}->{a.to_frame} after {b.from_frame}->{b.to_frame}")
    rot = a.rotation @ b.rotation
    if np.abs(rot.T @ rot - np.eye(3)).max() > _REORTHONORMALIZE_DRIFT:
        rot = nearest_rotation(rot)
    return RigidTransform(rot, a.rotation @ b.translation + a.translation,
                          b.from_frame, a.to_frame)


def transform_point(t: RigidTransform, p: Point3) -> Point3:
    if p.frame != t.from_frame:
        raise FrameMismatch(f"point in frame '{p.frame}', transform expects '{t.from_frame}'")
    return Point3.from_array(t.rotation @ p.xyz + t.translation, t.to_frame)


def distort_normalized(cam: CameraModel, xy: np.ndarray) -> np.ndarray:
    """Apply the Brown model to normalized coordinates; (N,2) -> (N,2)."""
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    x, y = xy[:, 0], xy[:, 1]
    r2 = x * x + y * y
    radial = 1.0 + cam.k1 * r2 + cam.k2 * r2 * r2
    xd = x * radial + 2.0 * cam.p1 * x * y + cam.p2 * (r2 + 2.0 * x * x)
    yd = y * radial + cam.p1 * (r2 + 2.0 * y * y) + 2.0 * cam.p2 * x * y
    return np.stack([xd, yd], axis=1)


def undistort_normalized(cam: CameraModel, xy_dist: np.ndarray,
                         iterations: int = 50, tol: float = 1e-14) -> np.ndarray:
    """Invert distort_normalized by fixed-point iteration.

    Converges to well below 1e-12 for the mild distortions of real lenses;
    the projection round-trip tolerance downstream is 1e-6 px.
    """
    xy_dist = np.atleast_2d(np.asarray(xy_dist, dtype=float))
    xy = xy_dist.copy()
    for _ in range(iterations):
        x, y = xy[:, 0], xy[:, 1]
        r2 = x * x + y * y
        radial = 1.0 + cam.k1 * r2 + cam.k2 * r2 * r2
        dx = 2.0 * cam.p1 * x * y + cam.p2 * (r2 + 2.0 * x * x)
        dy = cam.p1 * (r2 + 2.0 * y * y) + 2.0 * cam.p2 * x * y
        new = (xy_dist - np.stack([dx, dy], axis=1)) / radial[:, None]
        if np.abs(new - xy).max() < tol:
            xy = new
            break
        xy = new
    return xy


def project_array(cam: CameraModel, points: np.ndarray) -> np.ndarray:
    """Project (N,3) sensor-frame points to (N,2) pixels; no depth checks."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    z = pts[:, 2]
    xy = pts[:, :2] / z[:, None]
    xyd = distort_normalized(cam, xy)
    return np.stack([cam.fx * xyd[:, 0] + cam.cx,
                     cam.fy * xyd[:, 1] + cam.cy], axis=1)


def project(cam: CameraModel, p: Point3) -> Pixel:
    """Project a point given in the sensor's own frame onto its image plane."""
    if p.z <= 0:
        raise BehindCamera(f"point depth {p.z:.3f} mm is not in front of the sensor")
    uv = project_array(cam, p.xyz)[0]
    return Pixel(float(uv[0]), float(uv[1]))


def pixel_to_ray(cam: CameraModel, px: Pixel) -> np.ndarray:
    """Unit-depth ray direction (x, y, 1) through a pixel, distortion removed."""
    xd = (px.u - cam.cx) / cam.fx
    yd = (px.v - cam.cy) / cam.fy
    x, y = undistort_normalized(cam, np.array([[xd, yd]]))[0]
    return np.array([x, y, 1.0])


def unproject_to_plane(cam: CameraModel, px: Pixel,
                       plane_point: Point3, plane_normal: np.ndarray) -> Point3:
    """Intersect the back-projected pixel ray with a plane in the sensor frame.

    plane_point and plane_normal are expressed in the sensor's frame. Raises
    RayParallelToPlane when the (normalized) ray and normal are orthogonal
    within 1e-9.
    """
    direction = pixel_to_ray(cam, px)
    normal = np.asarray(plane_normal, dtype=float).reshape(3)
    normal = normal / np.linalg.norm(normal)
    denom = float(np.dot(direction / np.linalg.norm(direction), normal))
    if abs(denom) <= 1e-9:
        raise RayParallelToPlane("pixel ray is parallel to the target plane")
    scale = float(np.dot(plane_point.xyz, normal) / np.dot(direction, normal))
    return Point3.from_array(scale * direction, plane_point.frame)


@dataclass(frozen=True)
class CalibrationBundle:
    """Everything the projection chains need, in one immutable record.

    camera/projector intrinsics plus the world->camera and camera->projector
    transforms. Projector parts may be None until projector calibration has
    run; operations needing them raise StaleCalibration.
    """

    camera: CameraModel
    t_world_camera: RigidTransform
    projector: CameraModel | None = None
    t_camera_projector: RigidTransform | None = None
    reprojection_rms_px: float = 0.0

    def __post_init__(self):
        if self.t_world_camera.from_frame != WORLD or self.t_world_camera.to_frame != CAMERA:
            raise FrameMismatch("t_world_camera must map world -> camera")
        if self.t_camera_projector is not None:
            t = self.t_camera_projector
            if t.from_frame != CAMERA or t.to_frame != PROJECTOR:
                raise FrameMismatch("t_camera_projector must map camera -> projector")
        if self.reprojection_rms_px < 0:
            raise ValueError("reprojection rms must be non-negative")

    @property
    def has_projector(self) -> bool:
        return self.projector is not None and self.t_camera_projector is not None

    def require_projector(self) -> None:
        if not self.has_projector:
            raise StaleCalibration("bundle has no projector calibration")


def tip_to_camera_pixel(bundle: CalibrationBundle, pose_wp: RigidTransform,
                        tip: Point3) -> Pixel:
    """Pointer-frame tip -> camera pixel through the calibrated chain."""
    chain = compose(bundle.t_world_camera, pose_wp)
    return project(bundle.camera, transform_point(chain, tip))


def tip_to_projector_pixel(bundle: CalibrationBundle, pose_wp: RigidTransform,
                           tip: Point3) -> Pixel:
    """Pointer-frame tip -> projector pixel for live visual feedback."""
    bundle.require_projector()
    chain = compose(bundle.t_camera_projector, compose(bundle.t_world_camera, pose_wp))
    return project(bundle.projector, transform_point(chain, tip))


def world_to_camera_pixel(bundle: CalibrationBundle, p_world: Point3) -> Pixel:
    """World point -> camera pixel; same chain the tip mappings use."""
    return project(bundle.camera, transform_point(bundle.t_world_camera, p_world))


def world_to_projector_pixel(bundle: CalibrationBundle, p_world: Point3) -> Pixel:
    bundle.require_projector()
    chain = compose(bundle.t_camera_projector, bundle.t_world_camera)
    return project(bundle.projector, transform_point(chain, p_world))


# --- bundle (de)serialization -------------------------------------------------
# JSON schema: matrices row-major nested lists, frames stored explicitly.

def _camera_to_dict(cam: CameraModel) -> dict:
    return {"fx": cam.fx, "fy": cam.fy, "cx": cam.cx, "cy": cam.cy,
            "k1": cam.k1, "k2": cam.k2, "p1": cam.p1, "p2": cam.p2,
            "width": cam.width, "height": cam.height}


def _camera_from_dict(d: dict) -> CameraModel:
    return CameraModel(**d)


def _transform_to_dict(t: RigidTransform) -> dict:
    return {"rotation": t.rotation.tolist(), "translation": t.translation.tolist(),
            "from_frame": t.from_frame, "to_frame": t.to_frame}


def _transform_from_dict(d: dict) -> RigidTransform:
    return RigidTransform(np.array(d["rotation"]), np.array(d["translation"]),
                          d["from_frame"], d["to_frame"])


def bundle_to_dict(bundle: CalibrationBundle) -> dict:
    return {
        "camera": _camera_to_dict(bundle.camera),
        "world_to_camera": _transform_to_dict(bundle.t_world_camera),
        "projector": _camera_to_dict(bundle.projector) if bundle.projector else None,
        "camera_to_projector": (_transform_to_dict(bundle.t_camera_projector)
                                if bundle.t_camera_projector else None),
        "reprojection_rms_px": bundle.reprojection_rms_px,
    }


def bundle_from_dict(d: dict) -> CalibrationBundle:
    return CalibrationBundle(
        camera=_camera_from_dict(d["camera"]),
        t_world_camera=_transform_from_dict(d["world_to_camera"]),
        projector=_camera_from_dict(d["projector"]) if d.get("projector") else None,
        t_camera_projector=(_transform_from_dict(d["camera_to_projector"])
                            if d.get("camera_to_projector") else None),
        reprojection_rms_px=d.get("reprojection_rms_px", 0.0),
    )


def save_bundle(bundle: CalibrationBundle, path: str | Path) -> None:
    Path(path).write_text(json.dumps(bundle_to_dict(bundle), indent=2) + "\n")


def load_bundle(path: str | Path) -> CalibrationBundle:
    return bundle_from_dict(json.loads(Path(path).read_text()))
