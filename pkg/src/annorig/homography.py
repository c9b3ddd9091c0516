"""Plane-to-plane projective estimation via the normalized DLT.

Hartley normalization (centroid to origin, mean distance sqrt(2)) is applied
to both point sets before building the 2Nx9 design matrix; skipping it makes
the DLT numerically unusable at pixel scales.
"""
from __future__ import annotations

import numpy as np

from .errors import DegenerateConfiguration

_COLLINEAR_TOL = 1e-9


def _normalize_points(pts: np.ndarray):
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    mean_dist = np.mean(np.linalg.norm(centered, axis=1))
    scale = np.sqrt(2.0) / mean_dist if mean_dist > 0 else 1.0
    t = np.array([[scale, 0.0, -scale * centroid[0]],
                  [0.0, scale, -scale * centroid[1]],
                  [0.0, 0.0, 1.0]])
    return centered * scale, t


def _is_collinear(pts: np.ndarray) -> bool:
    centered = pts - pts.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    return s[0] == 0 or s[1] / s[0] < _COLLINEAR_TOL


def estimate_homography(points_src: np.ndarray, points_dst: np.ndarray) -> np.ndarray:
    """DLT homography H with dst ~ H @ src (homogeneous), src/dst of shape (N,2).

    The algebraic residual is minimized on Hartley-normalized coordinates.
    The result is scaled so h33 == 1 when |h33| > 1e-12. Raises
    DegenerateConfiguration for fewer than 4 correspondences or collinear
    input on either side.
    """
    src = np.atleast_2d(np.asarray(points_src, dtype=float))
    dst = np.atleast_2d(np.asarray(points_dst, dtype=float))
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 2:
        raise ValueError(f"point arrays must both be (N,2), got {src.shape} / {dst.shape}")
    if len(src) < 4:
        raise DegenerateConfiguration(f"need >= 4 correspondences, got {len(src)}")
    if _is_collinear(src) or _is_collinear(dst):
        raise DegenerateConfiguration("points are collinear")

    src_n, t_src = _normalize_points(src)
    dst_n, t_dst = _normalize_points(dst)

    n = len(src)
    a = np.zeros((2 * n, 9))
    x, y = src_n[:, 0], src_n[:, 1]
    u, v = dst_n[:, 0], dst_n[:, 1]
    a[0::2, 0] = -x
    a[0::2, 1] = -y
    a[0::2, 2] = -1.0
    a[0::2, 6] = u * x
    a[0::2, 7] = u * y
    a[0::2, 8] = u
    a[1::2, 3] = -x
    a[1::2, 4] = -y
    a[1::2, 5] = -1.0
    a[1::2, 6] = v * x
    a[1::2, 7] = v * y
    a[1::2, 8] = v

    # reduced SVD drops the null-space row when rows < columns (4-point case)
    _, _, vt = np.linalg.svd(a, full_matrices=a.shape[0] < 9)
    h_norm = vt[-1].reshape(3, 3)
    h = np.linalg.inv(t_dst) @ h_norm @ t_src
    if abs(h[2, 2]) > 1e-12:
        h = h / h[2, 2]
    return h


def apply_homography(h: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Map (N,2) points through a homography, dividing out the scale."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    ones = np.ones((len(pts), 1))
    mapped = np.hstack([pts, ones]) @ h.T
    return mapped[:, :2] / mapped[:, 2:3]
