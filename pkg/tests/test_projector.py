"""Projector calibration pipeline against rendered-rig ground truth."""
import numpy as np
import pytest

from annorig.errors import InsufficientDecodablePixels, InsufficientViews, NoSharedViews
from annorig.extrinsics import Correspondence3D2D, solve_pnp
from annorig.geometry import BOARD, CAMERA, PROJECTOR, Pixel, Point3, RigidTransform
from annorig.graycode import COLUMN_AXIS, ROW_AXIS, CorrespondenceMap
from annorig.homography import apply_homography
from annorig.projector import (calibrate_projector, local_homography_corner,
                               stereo_extrinsics)
from annorig.rotations import angle_between, rodrigues
from annorig.sim import RigConfig, make_projector_calib_views


def synthetic_maps(shape, h_u, h_v=None):
    """Exact float correspondence maps from closed-form plane mappings."""
    hgt, wid = shape
    ys, xs = np.mgrid[0:hgt, 0:wid]
    pts = np.column_stack([xs.ravel(), ys.ravel()]).astype(float)
    u = apply_homography(h_u, pts)[:, 0].reshape(shape) if h_u.ndim == 2 else None
    if h_v is None:
        h_v = h_u
    v = apply_homography(h_v, pts)[:, 1].reshape(shape)
    valid = np.ones(shape, dtype=bool)
    conf = np.full(shape, 255.0)
    return (CorrespondenceMap(COLUMN_AXIS, u, valid, conf),
            CorrespondenceMap(ROW_AXIS, v, valid, conf))


class TestLocalHomography:
    def test_exact_affine_map(self):
        # integer-exact affine camera->projector map: fit must be exact
        h = np.array([[1.0, 0.0, 12.0], [0.0, 1.0, -7.0], [0.0, 0.0, 1.0]])
        map_u, map_v = synthetic_maps((64, 64), h)
        corner = Pixel(31.37, 29.81)
        out = local_homography_corner(corner, map_u, map_v, patch_radius=10)
        np.testing.assert_allclose([out.u, out.v],
                                   [corner.u + 12.0, corner.v - 7.0], atol=1e-6)

    def test_matches_global_fit_for_planar_scene(self):
        # true projective map: local patch answer == full-image answer
        h = np.array([[1.1, 0.02, 40.0], [-0.015, 0.96, 22.0], [1e-5, -2e-5, 1.0]])
        map_u, map_v = synthetic_maps((96, 96), h)
        corner = Pixel(47.6, 52.3)
        local = local_homography_corner(corner, map_u, map_v, patch_radius=12)
        full = apply_homography(h, corner.uv)[0]
        np.testing.assert_allclose([local.u, local.v], full, atol=1e-6)

    def test_undecodable_patch(self):
        h = np.eye(3)
        map_u, map_v = synthetic_maps((64, 64), h)
        dead_valid = map_u.valid.copy()
        dead_valid[:, :] = False
        dead_u = CorrespondenceMap(COLUMN_AXIS, map_u.coords, dead_valid, map_u.confidence)
        with pytest.raises(InsufficientDecodablePixels):
            local_homography_corner(Pixel(32.0, 32.0), dead_u, map_v)

    def test_noisy_decode_monte_carlo(self, rng):
        h = np.array([[0.95, 0.01, 30.0], [0.02, 1.04, -11.0], [0.0, 0.0, 1.0]])
        errors = []
        for k in range(20):
            map_u, map_v = synthetic_maps((64, 64), h)
            noisy_u = CorrespondenceMap(
                COLUMN_AXIS, map_u.coords + rng.normal(0, 0.3, map_u.coords.shape),
                map_u.valid, map_u.confidence)
            noisy_v = CorrespondenceMap(
                ROW_AXIS, map_v.coords + rng.normal(0, 0.3, map_v.coords.shape),
                map_v.valid, map_v.confidence)
            corner = Pixel(20.0 + k, 30.0 + 0.5 * k)
            out = local_homography_corner(corner, noisy_u, noisy_v, patch_radius=15)
            truth = apply_homography(h, corner.uv)[0]
            errors.append(np.hypot(out.u - truth[0], out.v - truth[1]))
        assert max(errors) < 0.5


@pytest.fixture(scope="module")
def quarter_rig():
    return RigConfig(pose_sigma_mm=0.0, rot_sigma_rad=0.0,
                     intensity_sigma=0.0, seed=0).scaled(0.25)


@pytest.fixture(scope="module")
def calib_views(quarter_rig):
    return make_projector_calib_views(quarter_rig, n_views=6, seed=0)


class TestCalibrateProjector:
    def test_noiseless_recovery(self, quarter_rig, calib_views):
        views, _, _ = calib_views
        result = calibrate_projector(views, quarter_rig.projector.width,
                                     quarter_rig.projector.height)
        truth = quarter_rig.projector
        for attr in ("fx", "fy", "cx", "cy"):
            rel = abs(getattr(result.camera, attr) - getattr(truth, attr)) / getattr(truth, attr)
            assert rel < 0.002, f"{attr}: {rel:.2e}"

    def test_noisy_corners_recovery(self):
        # half-res camera: 0.3 px of corner noise is twice the physical noise
        # the nominal 5 MP sensor would see, so passing 1.5% here is conservative
        half_rig = RigConfig(pose_sigma_mm=0.0, rot_sigma_rad=0.0,
                             intensity_sigma=0.0, seed=0).scaled(0.5)
        views, _, _ = make_projector_calib_views(half_rig, n_views=8,
                                                 corner_sigma_px=0.3, seed=1)
        result = calibrate_projector(views, half_rig.projector.width,
                                     half_rig.projector.height)
        truth = half_rig.projector
        for attr in ("fx", "fy"):
            rel = abs(getattr(result.camera, attr) - getattr(truth, attr)) / getattr(truth, attr)
            assert rel < 0.015, f"{attr}: {rel:.2e}"

    def test_two_views_rejected(self, quarter_rig, calib_views):
        views, _, _ = calib_views
        with pytest.raises(InsufficientViews):
            calibrate_projector(views[:2], quarter_rig.projector.width,
                                quarter_rig.projector.height)


class TestStereoExtrinsics:
    def test_single_view_passthrough(self, rng):
        from scipy.spatial.transform import Rotation
        cam_pose = RigidTransform(Rotation.random(random_state=rng).as_matrix(),
                                  rng.normal(0, 100, 3), BOARD, CAMERA)
        proj_pose = RigidTransform(Rotation.random(random_state=rng).as_matrix(),
                                   rng.normal(0, 100, 3), BOARD, PROJECTOR)
        out = stereo_extrinsics([cam_pose], [proj_pose])
        expected_rot = proj_pose.rotation @ cam_pose.rotation.T
        np.testing.assert_allclose(out.transform.rotation, expected_rot, atol=1e-12)
        assert out.max_translation_disagreement_mm < 1e-12

    def test_true_poses_agree_exactly(self, quarter_rig, calib_views):
        _, cam_poses, proj_poses = calib_views
        out = stereo_extrinsics(cam_poses[:5], proj_poses[:5])
        assert out.max_translation_disagreement_mm < 1e-9
        assert out.max_rotation_disagreement_rad < 1e-9
        truth = quarter_rig.t_camera_projector
        np.testing.assert_allclose(out.transform.translation, truth.translation,
                                   atol=1e-9)
        assert angle_between(out.transform.rotation, truth.rotation) < 1e-7

    def test_no_shared_views(self):
        with pytest.raises(NoSharedViews):
            stereo_extrinsics([], [])

    def test_full_pipeline_translation_error(self, quarter_rig, calib_views):
        views, _, _ = calib_views
        proj = calibrate_projector(views, quarter_rig.projector.width,
                                   quarter_rig.projector.height)
        cam_poses = []
        for v in views:
            corrs = [Correspondence3D2D(Point3(p[0], p[1], 0.0, BOARD), Pixel(u, vv))
                     for p, (u, vv) in zip(v.board_points, v.camera_corners)]
            cam_poses.append(solve_pnp(corrs, quarter_rig.camera,
                                       world_frame=BOARD).pose)
        stereo = stereo_extrinsics(cam_poses, proj.poses)
        truth = quarter_rig.t_camera_projector
        err = np.linalg.norm(stereo.transform.translation - truth.translation)
        assert err < 2.0, f"translation error {err:.3f} mm"
