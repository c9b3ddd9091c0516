"""Labeled 2D shapes in camera pixel coordinates."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BBOX = "bbox"
POLYGON = "polygon"
POLYLINE = "polyline"
KINDS = (BBOX, POLYGON, POLYLINE)


@dataclass(frozen=True)
class Annotation:
    """A labeled shape anchored to one camera frame.

    bbox: exactly two points, min corner then max corner, strictly ordered
    per axis. polygon: >= 3 vertices, implicitly closed. polyline: >= 2
    vertices.
    """

    id: str
    label: str
    kind: str
    points: np.ndarray  # (N,2) px
    frame_index: int = 0

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"points must be (N,2), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("annotation points must be finite")
        if self.kind == BBOX:
            if len(pts) != 2:
                raise ValueError("bbox needs exactly 2 points (min, max corner)")
            if not (pts[0, 0] < pts[1, 0] and pts[0, 1] < pts[1, 1]):
                raise ValueError("bbox corners must satisfy min < max per axis")
        elif self.kind == POLYGON:
            if len(pts) < 3:
                raise ValueError("polygon needs >= 3 points")
        elif self.kind == POLYLINE:
            if len(pts) < 2:
                raise ValueError("polyline needs >= 2 points")
        else:
            raise ValueError(f"unknown annotation kind '{self.kind}'")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def bounds(self) -> tuple[float, float, float, float]:
        """(min_x, min_y, max_x, max_y) of the shape's points."""
        lo = self.points.min(axis=0)
        hi = self.points.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    def to_dict(self) -> dict:
        return {"id": self.id, "label": self.label, "kind": self.kind,
                "points": self.points.tolist(), "frame_index": self.frame_index}

    @classmethod
    def from_dict(cls, d: dict) -> "Annotation":
        return cls(id=d["id"], label=d["label"], kind=d["kind"],
                   points=np.array(d["points"], dtype=float),
                   frame_index=d.get("frame_index", 0))


def bbox_from_points(points: np.ndarray, id: str, label: str,
                     frame_index: int = 0) -> Annotation:
    """Axis-aligned extent of a point set as a bbox annotation."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    return Annotation(id=id, label=label, kind=BBOX,
                      points=np.array([lo, hi]), frame_index=frame_index)
