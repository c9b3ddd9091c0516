"""Planar intrinsic calibration against the simulator generator oracle."""
import numpy as np
import pytest

from annorig.errors import DegenerateOrientations, InsufficientViews
from annorig.geometry import CameraModel
from annorig.intrinsics import PlanarView, calibrate_intrinsics_zhang
from annorig.optim import project_points
from annorig.rotations import rodrigues
from annorig.sim import NOMINAL_CAMERA, board_grid_mm, make_planar_views

TRUE_CAM = NOMINAL_CAMERA  # fx=fy=2000, cx=1224, cy=1024, no distortion


def relative_errors(cam: CameraModel, truth: CameraModel):
    return np.array([abs(cam.fx - truth.fx) / truth.fx,
                     abs(cam.fy - truth.fy) / truth.fy,
                     abs(cam.cx - truth.cx) / truth.cx,
                     abs(cam.cy - truth.cy) / truth.cy])


class TestZhang:
    def test_noiseless_recovery(self):
        views, _, _ = make_planar_views(TRUE_CAM, n_views=10, seed=11)
        result = calibrate_intrinsics_zhang(views, TRUE_CAM.width, TRUE_CAM.height)
        assert np.all(relative_errors(result.camera, TRUE_CAM) < 1e-3)
        assert result.rms_px < 1e-6
        assert abs(result.camera.k1) < 1e-6 and abs(result.camera.k2) < 1e-4

    def test_noiseless_recovery_with_distortion(self):
        truth = CameraModel(fx=2000.0, fy=1990.0, cx=1230.0, cy=1015.0,
                            k1=-0.08, k2=0.015, p1=4e-4, p2=-3e-4,
                            width=2448, height=2048)
        views, _, _ = make_planar_views(truth, n_views=12, seed=4)
        result = calibrate_intrinsics_zhang(views, truth.width, truth.height)
        assert np.all(relative_errors(result.camera, truth) < 1e-3)
        assert abs(result.camera.k1 - truth.k1) < 1e-3
        assert result.rms_px < 1e-6

    def test_noisy_recovery_monte_carlo(self):
        for seed in range(10):
            views, _, _ = make_planar_views(TRUE_CAM, n_views=10, seed=seed,
                                            pixel_sigma_px=0.2)
            result = calibrate_intrinsics_zhang(views, TRUE_CAM.width, TRUE_CAM.height)
            errors = relative_errors(result.camera, TRUE_CAM)
            assert errors[0] < 0.01 and errors[1] < 0.01, f"seed {seed}: {errors}"
            assert result.rms_px <= 0.4, f"seed {seed}: rms {result.rms_px}"

    def test_two_views_rejected(self):
        views, _, _ = make_planar_views(TRUE_CAM, n_views=2, seed=0)
        with pytest.raises(InsufficientViews):
            calibrate_intrinsics_zhang(views, TRUE_CAM.width, TRUE_CAM.height)

    def test_parallel_views_rejected(self):
        # identical orientation, shifted positions: conic system loses rank
        board = board_grid_mm(7, 10, 25.0) - [112.5, 75.0]
        board3 = np.column_stack([board, np.zeros(len(board))])
        intr = np.array([TRUE_CAM.fx, TRUE_CAM.fy, TRUE_CAM.cx, TRUE_CAM.cy,
                         0.0, 0.0, 0.0, 0.0])
        rot = rodrigues(np.array([0.05, 0.02, 0.0]))
        views = []
        for dx in (-80.0, 0.0, 80.0, 160.0):
            t = np.array([dx, 10.0, 800.0])
            views.append(PlanarView(board, project_points(intr, rot, t, board3)))
        with pytest.raises(DegenerateOrientations):
            calibrate_intrinsics_zhang(views, TRUE_CAM.width, TRUE_CAM.height)

    def test_reported_rms_matches_reprojection(self):
        views, _, _ = make_planar_views(TRUE_CAM, n_views=8, seed=21,
                                        pixel_sigma_px=0.3)
        result = calibrate_intrinsics_zhang(views, TRUE_CAM.width, TRUE_CAM.height)
        cam = result.camera
        intr = np.array([cam.fx, cam.fy, cam.cx, cam.cy, cam.k1, cam.k2, cam.p1, cam.p2])
        sq_sum, count = 0.0, 0
        for view, pose in zip(views, result.poses):
            board3 = np.column_stack([view.plane_points,
                                      np.zeros(len(view.plane_points))])
            uv = project_points(intr, pose.rotation, pose.translation, board3)
            sq_sum += float(np.sum((uv - view.image_points) ** 2))
            count += len(board3)
        np.testing.assert_allclose(np.sqrt(sq_sum / count), result.rms_px, atol=1e-12)

    def test_accepted_costs_monotone(self):
        views, _, _ = make_planar_views(TRUE_CAM, n_views=6, seed=8,
                                        pixel_sigma_px=0.5)
        result = calibrate_intrinsics_zhang(views, TRUE_CAM.width, TRUE_CAM.height)
        costs = np.array(result.accepted_costs)
        assert np.all(np.diff(costs) <= 0)

    def test_scaling_equivariance(self):
        views, _, _ = make_planar_views(TRUE_CAM, n_views=8, seed=17)
        sigma = 0.5
        scaled_views = [PlanarView(v.plane_points, v.image_points * sigma)
                        for v in views]
        base = calibrate_intrinsics_zhang(views, TRUE_CAM.width, TRUE_CAM.height)
        scaled = calibrate_intrinsics_zhang(
            scaled_views, int(TRUE_CAM.width * sigma), int(TRUE_CAM.height * sigma))
        for attr in ("fx", "fy", "cx", "cy"):
            ratio = getattr(scaled.camera, attr) / getattr(base.camera, attr)
            assert abs(ratio - sigma) / sigma < 1e-3, f"{attr}: ratio {ratio}"
