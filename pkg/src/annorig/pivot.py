"""Pointer-tip offset estimation from poses pivoted about a fixed tip.

While the tip is held fixed, every tracked pose (R_k, t_k) of the pointer's
reference body must land the (unknown) tip offset c on the same (unknown)
world point c': R_k c + t_k = c'. Stacking all samples gives the linear
system [R_k | -I] (c; c') = -t_k, solved in the least-squares sense with an
orthogonal factorization. The pairwise-difference formulation over all sample
pairs has exactly the same optimum (it equals N times the stacked objective
after eliminating c'); the test suite uses it as an independent oracle.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateMotion, InsufficientSamples
from .rotations import quat_from_matrix

MIN_SPREAD_DEG = 10.0
_RANK_TOL = 1e-10


@dataclass(frozen=True)
class TrackedSample:
    """One timestamped pose of the pointer's dynamic reference frame."""

    timestamp: float
    rotation: np.ndarray
    translation: np.ndarray
    valid: bool = True

    def __post_init__(self):
        rot = np.array(self.rotation, dtype=float)
        t = np.array(self.translation, dtype=float).reshape(3)
        if self.valid and np.abs(rot.T @ rot - np.eye(3)).max() > 1e-9:
            raise ValueError("valid sample carries a non-orthonormal rotation")
        rot.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", t)

    def to_record(self, pen_down: bool | None = None) -> dict:
        rec = {"timestamp": self.timestamp, "rotation": self.rotation.tolist(),
               "translation": self.translation.tolist(), "valid": self.valid}
        if pen_down is not None:
            rec["pen_down"] = pen_down
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "TrackedSample":
        return cls(rec["timestamp"], np.array(rec["rotation"]),
                   np.array(rec["translation"]), rec.get("valid", True))


@dataclass(frozen=True)
class PointerSpec:
    """Physical tip geometry; the tip is a small sphere."""

    tip_sphere_diameter: float = 1.0

    def __post_init__(self):
        if self.tip_sphere_diameter <= 0:
            raise ValueError("tip sphere diameter must be positive")


@dataclass(frozen=True)
class PivotResult:
    tip_offset: np.ndarray    # c, pointer frame (mm)
    pivot_point: np.ndarray   # c', world frame (mm)
    rms_residual: float       # mm
    sample_count: int

    def to_dict(self) -> dict:
        return {"tip_offset": self.tip_offset.tolist(),
                "pivot_point": self.pivot_point.tolist(),
                "rms_residual": self.rms_residual,
                "sample_count": self.sample_count}


def rotational_spread_deg(rotations: list[np.ndarray], max_pairs: int = 2000) -> float:
    """Largest geodesic angle between any two rotations, degrees.

    Uses |q_i . q_j| = cos(theta_ij / 2); subsamples deterministically above
    max_pairs rotations to keep the pairwise check O(max_pairs^2).
    """
    if len(rotations) < 2:
        return 0.0
    if len(rotations) > max_pairs:
        stride = int(np.ceil(len(rotations) / max_pairs))
        rotations = rotations[::stride]
    quats = np.array([quat_from_matrix(r) for r in rotations])
    dots = np.abs(quats @ quats.T)
    return float(np.degrees(2.0 * np.arccos(np.clip(dots.min(), -1.0, 1.0))))


def solve_pivot(samples: list[TrackedSample]) -> PivotResult:
    """Least-squares tip offset and pivot point from pivoting poses.

    Raises InsufficientSamples below three valid samples and DegenerateMotion
    when the rotational spread is <= 10 degrees or the stacked system is
    rank-deficient (e.g. every rotation shares one axis, which leaves the
    offset component along that axis unobservable regardless of spread).
    """
    valid = [s for s in samples if s.valid]
    if len(valid) < 3:
        raise InsufficientSamples(f"need >= 3 valid samples, got {len(valid)}")
    spread = rotational_spread_deg([s.rotation for s in valid])
    if spread <= MIN_SPREAD_DEG:
        raise DegenerateMotion(
            f"rotational spread {spread:.2f} deg <= {MIN_SPREAD_DEG} deg")

    n = len(valid)
    a = np.zeros((3 * n, 6))
    b = np.zeros(3 * n)
    for k, s in enumerate(valid):
        a[3 * k:3 * k + 3, :3] = s.rotation
        a[3 * k:3 * k + 3, 3:] = -np.eye(3)
        b[3 * k:3 * k + 3] = -s.translation

    singular = np.linalg.svd(a, compute_uv=False)
    if singular[-1] < _RANK_TOL * singular[0]:
        raise DegenerateMotion("pivot system is rank-deficient (single-axis motion)")

    x, *_ = np.linalg.lstsq(a, b, rcond=None)
    tip_offset, pivot_point = x[:3], x[3:]
    residuals = np.array([s.rotation @ tip_offset + s.translation - pivot_point
                          for s in valid])
    rms = float(np.sqrt(np.mean(np.sum(residuals * residuals, axis=1))))
    return PivotResult(tip_offset=tip_offset, pivot_point=pivot_point,
                       rms_residual=rms, sample_count=n)


# --- file formats -------------------------------------------------------------
# CSV rows: timestamp,r11..r33,tx,ty,tz,valid (an optional header is skipped).

def read_samples_csv(path: str | Path) -> list[TrackedSample]:
    samples = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            try:
                float(row[0])
            except ValueError:
                continue  # header line
            if len(row) != 14:
                raise ValueError(f"expected 14 columns, got {len(row)}: {row}")
            values = [float(v) for v in row[:13]]
            valid = row[13].strip().lower() in ("1", "true", "yes")
            samples.append(TrackedSample(
                timestamp=values[0],
                rotation=np.array(values[1:10]).reshape(3, 3),
                translation=np.array(values[10:13]),
                valid=valid))
    return samples


def write_samples_csv(samples: list[TrackedSample], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "r11", "r12", "r13", "r21", "r22", "r23",
                         "r31", "r32", "r33", "tx", "ty", "tz", "valid"])
        for s in samples:
            writer.writerow([s.timestamp, *s.rotation.reshape(9).tolist(),
                             *s.translation.tolist(), int(s.valid)])


def write_pivot_result(result: PivotResult, path: str | Path) -> None:
    Path(path).write_text(json.dumps(result.to_dict(), indent=2) + "\n")
