"""Stage-1 annotation: tracked pen strokes to cleaned 2D shapes.

A Trajectory accumulates tip positions in the world frame while the operator
draws on the object; every appended sample also yields the projector pixel to
light up as live feedback. Finalizing projects the (simplified) stroke into
the reference camera frame as a bbox, polygon or polyline.
"""
from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .annotations import BBOX, POLYGON, POLYLINE, Annotation, bbox_from_points
from .errors import (EmptyTrajectory, InvalidSample, OpenContour,
                     StaleCalibration, TooFewPoints)
from .geometry import (POINTER, WORLD, CalibrationBundle, Pixel, Point3,
                       RigidTransform, project_array, transform_point,
                       world_to_camera_pixel, world_to_projector_pixel)
from .pivot import TrackedSample

RESAMPLE_SPACING_MM = 5.0
DEFAULT_EPSILON_MM = 1.5
AUTO_CLOSE_GAP_MM = 5.0
POINTER_LIFT_MM = 50.0


@dataclass
class Trajectory:
    """Ordered tip samples in the world frame with pen-down flags."""

    timestamps: list[float] = field(default_factory=list)
    points: list[np.ndarray] = field(default_factory=list)
    pen_down: list[bool] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.points)

    def pen_points(self) -> np.ndarray:
        """(N,3) world points captured while the pen was down."""
        pts = [p for p, down in zip(self.points, self.pen_down) if down]
        return np.array(pts) if pts else np.empty((0, 3))

    def copy(self) -> "Trajectory":
        return Trajectory(list(self.timestamps), [p.copy() for p in self.points],
                          list(self.pen_down))


def append_sample(traj: Trajectory, sample: TrackedSample,
                  bundle: CalibrationBundle, tip_offset: np.ndarray,
                  pen_down: bool = True) -> Pixel:
    """Append one tracked pose; returns the live projector-feedback pixel.

    The sample's pose maps pointer -> world; the stored point is the tip
    offset pushed through it. Raises InvalidSample (trajectory untouched) for
    samples flagged invalid and StaleCalibration when the bundle lacks the
    projector side needed for feedback.
    """
    if not sample.valid:
        raise InvalidSample("tracker flagged the sample invalid")
    bundle.require_projector()
    if traj.timestamps and sample.timestamp <= traj.timestamps[-1]:
        raise InvalidSample(
            f"timestamp {sample.timestamp} not increasing past {traj.timestamps[-1]}")

    pose = RigidTransform(sample.rotation, sample.translation, POINTER, WORLD)
    tip_world = transform_point(pose, Point3.from_array(tip_offset, POINTER))
    overlay = world_to_projector_pixel(bundle, tip_world)
    traj.timestamps.append(sample.timestamp)
    traj.points.append(tip_world.xyz)
    traj.pen_down.append(pen_down)
    return overlay


def _dedupe(points: np.ndarray) -> np.ndarray:
    keep = [0]
    for i in range(1, len(points)):
        if not np.array_equal(points[i], points[keep[-1]]):
            keep.append(i)
    return points[keep]


def _densify(points: np.ndarray, spacing: float) -> np.ndarray:
    """Subdivide segments so no span exceeds `spacing`, keeping all vertices.

    Keeping the original vertices (rather than sliding a uniform comb over
    the arc length) is what makes simplify idempotent: re-densified points
    land exactly on the simplified polyline and get removed again.
    """
    out = [points[0]]
    for a, b in zip(points[:-1], points[1:]):
        length = float(np.linalg.norm(b - a))
        n_seg = max(1, int(np.ceil(length / spacing)))
        for k in range(1, n_seg + 1):
            out.append(a + (b - a) * (k / n_seg))
    return np.array(out)


def _point_line_distances(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    denom = float(np.linalg.norm(ab))
    if denom == 0.0:
        return np.linalg.norm(points - a, axis=1)
    t = (points - a) @ ab / (denom * denom)
    feet = a + np.outer(t, ab)
    return np.linalg.norm(points - feet, axis=1)


def _douglas_peucker(points: np.ndarray, epsilon: float) -> np.ndarray:
    keep = np.zeros(len(points), dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, len(points) - 1)]
    while stack:
        lo, hi = stack.pop()
        if hi - lo < 2:
            continue
        d = _point_line_distances(points[lo + 1:hi], points[lo], points[hi])
        idx = int(np.argmax(d))
        if d[idx] > epsilon:
            split = lo + 1 + idx
            keep[split] = True
            stack.append((lo, split))
            stack.append((split, hi))
    return points[keep]


def simplify(traj: Trajectory, epsilon_mm: float = DEFAULT_EPSILON_MM) -> Trajectory:
    """Clean the pen-down stroke: densify to <= 5 mm spans, then
    Douglas-Peucker at epsilon_mm. Endpoints always survive; removed points
    deviate at most epsilon_mm from the simplified polyline. epsilon 0
    degenerates to exact-duplicate removal only.
    """
    pts = traj.pen_points()
    if len(pts) < 2:
        raise TooFewPoints(f"need >= 2 pen-down points, got {len(pts)}")
    pts = _dedupe(pts)
    if epsilon_mm < 0:
        raise ValueError("epsilon must be non-negative")
    if epsilon_mm == 0.0 or len(pts) < 2:
        simplified = pts
    else:
        simplified = _douglas_peucker(_densify(pts, RESAMPLE_SPACING_MM), epsilon_mm)
    n = len(simplified)
    return Trajectory(timestamps=list(np.linspace(0.0, 1.0, n)),
                      points=[p for p in simplified],
                      pen_down=[True] * n)


def finalize_shape(traj: Trajectory, kind: str, bundle: CalibrationBundle,
                   frame_index: int = 0, label: str = "", ann_id: str | None = None,
                   auto_close_mm: float = AUTO_CLOSE_GAP_MM) -> Annotation:
    """Project a simplified stroke into the reference frame as an annotation.

    Polygons auto-close when the endpoints sit within auto_close_mm (the
    duplicate endpoint is dropped); larger gaps raise OpenContour. A bbox is
    the axis-aligned extent of all projected points.
    """
    world_pts = traj.pen_points()
    if len(world_pts) == 0:
        raise EmptyTrajectory("no pen-down points to finalize")
    ann_id = ann_id or uuid.uuid4().hex[:8]

    if kind == POLYGON:
        gap = float(np.linalg.norm(world_pts[0] - world_pts[-1]))
        if gap > auto_close_mm:
            raise OpenContour(
                f"polygon endpoints {gap:.1f} mm apart (> {auto_close_mm} mm)")
        if len(world_pts) >= 4:
            world_pts = world_pts[:-1]  # endpoint duplicates the start; closed implicitly

    pixels = np.array([world_to_camera_pixel(bundle, Point3.from_array(p, WORLD)).uv
                       for p in world_pts])
    if kind == BBOX:
        return bbox_from_points(pixels, ann_id, label, frame_index=frame_index)
    return Annotation(id=ann_id, label=label, kind=kind, points=pixels,
                      frame_index=frame_index)


def detect_occlusion_free(tip_world: Point3, bundle: CalibrationBundle,
                          table_point: Point3 | None = None,
                          table_normal: np.ndarray | None = None,
                          lift_threshold_mm: float = POINTER_LIFT_MM) -> bool:
    """True when a camera exposure now would not show the pointer: the tip is
    outside the camera frustum or lifted more than lift_threshold_mm off the
    table."""
    if table_point is None:
        table_point = Point3(0.0, 0.0, 0.0, WORLD)
    normal = (np.array([0.0, 0.0, 1.0]) if table_normal is None
              else np.asarray(table_normal, dtype=float))
    normal = normal / np.linalg.norm(normal)
    height = float(np.dot(tip_world.xyz - table_point.xyz, normal))
    if height > lift_threshold_mm:
        return True
    cam_pt = transform_point(bundle.t_world_camera, tip_world)
    if cam_pt.z <= 0:
        return True
    uv = project_array(bundle.camera, cam_pt.xyz)
    return not bool(bundle.camera.contains(uv)[0])


# --- sample-stream records (JSON lines) ---------------------------------------

def read_sample_stream(path: str | Path) -> list[tuple[TrackedSample, bool]]:
    """One (sample, pen_down) per JSONL line."""
    out = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        rec = json.loads(line)
        out.append((TrackedSample.from_record(rec), bool(rec.get("pen_down", True))))
    return out


def write_sample_stream(samples: list[tuple[TrackedSample, bool]],
                        path: str | Path) -> None:
    with open(path, "w") as fh:
        for sample, pen in samples:
            fh.write(json.dumps(sample.to_record(pen_down=pen)) + "\n")
