"""annorig: desk-scale pointer annotation rig.

Calibration (pivot, camera, projector), the pointer-to-pixel projection
chains, trajectory-to-annotation processing, optical-flow label propagation,
dataset exporters, and a synthetic rig simulator that stands in for the
physical tracker/camera/projector.
"""

from .annotations import BBOX, POLYGON, POLYLINE, Annotation
from .geometry import (CAMERA, POINTER, PROJECTOR, TRACKER, WORLD,
                       CalibrationBundle, CameraModel, Pixel, Point3,
                       RigidTransform, compose, load_bundle, project,
                       save_bundle, tip_to_camera_pixel, tip_to_projector_pixel,
                       transform_point, unproject_to_plane)
from .pivot import PivotResult, PointerSpec, TrackedSample, solve_pivot
from .trajectory import Trajectory, append_sample, finalize_shape, simplify

__version__ = "0.1.0"

__all__ = [
    "Annotation", "BBOX", "POLYGON", "POLYLINE",
    "CAMERA", "POINTER", "PROJECTOR", "TRACKER", "WORLD",
    "CalibrationBundle", "CameraModel", "Pixel", "Point3", "RigidTransform",
    "compose", "transform_point", "project", "unproject_to_plane",
    "tip_to_camera_pixel", "tip_to_projector_pixel",
    "load_bundle", "save_bundle",
    "PivotResult", "PointerSpec", "TrackedSample", "solve_pivot",
    "Trajectory", "append_sample", "simplify", "finalize_shape",
    "__version__",
]
