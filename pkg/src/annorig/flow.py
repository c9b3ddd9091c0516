"""Pyramidal Lucas-Kanade point tracking for annotation "gluing".

Sparse translation-only LK over a binomial image pyramid: per level the
displacement is refined with Gauss-Newton steps on the intensity difference,
then doubled and handed to the next finer level. Gradients come from 3x3
Scharr filters on the previous frame; all sub-pixel sampling is bilinear.
A point counts as lost when its window leaves the image, the local structure
tensor is too close to singular (aperture problem), the update diverges, or
the converged window's mean absolute intensity difference exceeds the
residual threshold.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .annotations import BBOX, POLYGON, POLYLINE, Annotation, bbox_from_points
from .errors import AnnotationOutOfFrame, DimensionMismatch
from .image import ImageFrame, bilinear_sample

log = logging.getLogger(__name__)

_BINOMIAL5 = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0
_SCHARR_SMOOTH = np.array([3.0, 10.0, 3.0]) / 16.0
_SCHARR_DERIV = np.array([-0.5, 0.0, 0.5])  # f(x+1) - f(x-1) over 2


@dataclass(frozen=True)
class TrackParams:
    levels: int = 3
    window: int = 21                 # odd; radius = window // 2
    max_iterations: int = 30
    convergence_px: float = 0.01
    residual_threshold: float = 25.0  # mean |dI| in 8-bit intensity levels
    min_eigenvalue: float = 1e-4      # of the structure tensor per window pixel
    max_lost_fraction: float = 0.20   # per-frame omission threshold

    @property
    def radius(self) -> int:
        return self.window // 2


STATUS_TRACKED = "tracked"
STATUS_LOST = "lost"


@dataclass
class TrackState:
    """Per-point results of one tracking step."""

    points: np.ndarray    # (N,2) sub-pixel positions (last estimate if lost)
    status: np.ndarray    # (N,) bool, True = tracked
    residual: np.ndarray  # (N,) mean |dI| of the matched windows

    @property
    def lost_fraction(self) -> float:
        return float(1.0 - self.status.mean()) if len(self.status) else 0.0


def build_pyramid(image: np.ndarray, levels: int) -> list[np.ndarray]:
    """Downsample by 2 per level with 5-tap binomial smoothing."""
    pyramid = [np.asarray(image, dtype=np.float64)]
    for _ in range(levels - 1):
        prev = pyramid[-1]
        smoothed = ndimage.correlate1d(prev, _BINOMIAL5, axis=0, mode="nearest")
        smoothed = ndimage.correlate1d(smoothed, _BINOMIAL5, axis=1, mode="nearest")
        pyramid.append(smoothed[::2, ::2])
    return pyramid


def scharr_gradients(image: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    gx = ndimage.correlate1d(image, _SCHARR_SMOOTH, axis=0, mode="nearest")
    gx = ndimage.correlate1d(gx, _SCHARR_DERIV, axis=1, mode="nearest")
    gy = ndimage.correlate1d(image, _SCHARR_SMOOTH, axis=1, mode="nearest")
    gy = ndimage.correlate1d(gy, _SCHARR_DERIV, axis=0, mode="nearest")
    return gx, gy


def _window_inside(cx: float, cy: float, shape: tuple[int, int], radius: int) -> bool:
    h, w = shape
    return (cx - radius >= 0.0 and cy - radius >= 0.0
            and cx + radius <= w - 1.000001 and cy + radius <= h - 1.000001)


def _track_single(prev_pyr, grad_pyrs, next_pyr, point: np.ndarray,
                  params: TrackParams) -> tuple[np.ndarray, bool, float]:
    radius = params.radius
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    ox, oy = np.meshgrid(offsets, offsets)
    n_window = ox.size

    flow = np.zeros(2)
    for level in reversed(range(len(prev_pyr))):
        scale = 2.0 ** level
        base = point / scale
        img_prev = prev_pyr[level]
        img_next = next_pyr[level]
        gx, gy = grad_pyrs[level]

        if not _window_inside(base[0], base[1], img_prev.shape, radius):
            return point + flow * scale, False, np.inf

        sample_x = base[0] + ox
        sample_y = base[1] + oy
        patch = bilinear_sample(img_prev, sample_x, sample_y)
        ix = bilinear_sample(gx, sample_x, sample_y)
        iy = bilinear_sample(gy, sample_x, sample_y)

        sxx = float(np.sum(ix * ix))
        sxy = float(np.sum(ix * iy))
        syy = float(np.sum(iy * iy))
        trace = sxx + syy
        det = sxx * syy - sxy * sxy
        min_eig = (trace - np.sqrt(max(trace * trace - 4.0 * det, 0.0))) / 2.0
        if min_eig / n_window < params.min_eigenvalue:
            return point + flow, False, np.inf
        inv = np.array([[syy, -sxy], [-sxy, sxx]]) / det

        for _ in range(params.max_iterations):
            tx = sample_x + flow[0]
            ty = sample_y + flow[1]
            if not _window_inside(base[0] + flow[0], base[1] + flow[1],
                                  img_next.shape, radius):
                return point + flow * scale, False, np.inf
            diff = patch - bilinear_sample(img_next, tx, ty)
            b = np.array([float(np.sum(diff * ix)), float(np.sum(diff * iy))])
            step = inv @ b
            if not np.all(np.isfinite(step)):
                return point + flow * scale, False, np.inf
            flow += step
            if float(np.hypot(step[0], step[1])) < params.convergence_px:
                break

        if level > 0:
            flow *= 2.0

    new_point = point + flow
    if not _window_inside(new_point[0], new_point[1], next_pyr[0].shape, radius):
        return new_point, False, np.inf
    final = bilinear_sample(next_pyr[0], point[0] + ox + flow[0],
                            point[1] + oy + flow[1])
    start = bilinear_sample(prev_pyr[0], point[0] + ox, point[1] + oy)
    residual = float(np.mean(np.abs(start - final)))
    return new_point, residual <= params.residual_threshold, residual


def track_points(prev: ImageFrame, next_frame: ImageFrame, points: np.ndarray,
                 params: TrackParams = TrackParams()) -> TrackState:
    """Track sub-pixel points from prev into next_frame.

    points is (N,2) in pixel coordinates. Same-size frames required.
    Identical frames return exactly the input positions.
    """
    if prev.pixels.shape != next_frame.pixels.shape:
        raise DimensionMismatch(
            f"frame shapes differ: {prev.pixels.shape} vs {next_frame.pixels.shape}")
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))

    prev_pyr = build_pyramid(prev.as_float(), params.levels)
    next_pyr = build_pyramid(next_frame.as_float(), params.levels)
    grad_pyrs = [scharr_gradients(level) for level in prev_pyr]

    out_points = np.empty_like(pts)
    status = np.zeros(len(pts), dtype=bool)
    residual = np.full(len(pts), np.inf)
    for i, p in enumerate(pts):
        out_points[i], status[i], residual[i] = _track_single(
            prev_pyr, grad_pyrs, next_pyr, p, params)
    return TrackState(points=out_points, status=status, residual=residual)


def propagate_annotation(seq: list[ImageFrame], ann: Annotation,
                         params: TrackParams = TrackParams()) -> list[Annotation]:
    """Chain frame-to-frame tracking to carry an annotation through a sequence.

    The annotation must be anchored to the first frame of seq. Output contains
    one annotation per frame where the shape survived: a frame is omitted
    (and the gap logged) once more than max_lost_fraction of the points are
    lost or too few vertices remain for the shape kind. Lost vertices never
    reappear in emitted annotations. A bbox is re-derived per frame as the
    axis-aligned extent of its two tracked corners.
    """
    if not seq:
        return []
    if ann.frame_index != seq[0].frame_index:
        raise ValueError(
            f"annotation anchored to frame {ann.frame_index}, sequence starts "
            f"at {seq[0].frame_index}")

    positions = np.array(ann.points, dtype=np.float64)
    shape = seq[0].pixels.shape
    for p in positions:
        if not _window_inside(p[0], p[1], shape, params.radius):
            raise AnnotationOutOfFrame(
                f"initial point ({p[0]:.1f}, {p[1]:.1f}) outside trackable area")

    n_total = len(positions)
    alive = np.ones(n_total, dtype=bool)
    results = [replace(ann, frame_index=seq[0].frame_index)]

    min_vertices = {BBOX: 2, POLYGON: 3, POLYLINE: 2}[ann.kind]
    for prev, cur in zip(seq[:-1], seq[1:]):
        if alive.any():
            state = track_points(prev, cur, positions[alive], params)
            idx = np.nonzero(alive)[0]
            positions[idx] = state.points
            alive[idx[~state.status]] = False

        lost_fraction = 1.0 - alive.mean()
        if lost_fraction > params.max_lost_fraction or alive.sum() < min_vertices:
            log.warning("frame %d: annotation '%s' omitted (%.0f%% of points lost)",
                        cur.frame_index, ann.id, 100.0 * lost_fraction)
            continue
        live_pts = positions[alive]
        if ann.kind == BBOX:
            lo, hi = live_pts.min(axis=0), live_pts.max(axis=0)
            if not (lo[0] < hi[0] and lo[1] < hi[1]):
                log.warning("frame %d: bbox '%s' collapsed, omitted",
                            cur.frame_index, ann.id)
                continue
            results.append(bbox_from_points(live_pts, ann.id, ann.label,
                                            frame_index=cur.frame_index))
        else:
            results.append(Annotation(id=ann.id, label=ann.label, kind=ann.kind,
                                      points=live_pts,
                                      frame_index=cur.frame_index))
    return results
