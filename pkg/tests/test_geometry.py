"""Transform/projection core against independent homogeneous-matrix oracles."""
import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from annorig.errors import BehindCamera, FrameMismatch, RayParallelToPlane
from annorig.geometry import (CAMERA, POINTER, PROJECTOR, WORLD,
                              CalibrationBundle, CameraModel, Pixel, Point3,
                              RigidTransform, bundle_from_dict, bundle_to_dict,
                              compose, project, tip_to_camera_pixel,
                              tip_to_projector_pixel, transform_point,
                              unproject_to_plane)


def mat44(rot, t):
    m = np.eye(4)
    m[:3, :3] = rot
    m[:3, 3] = t
    return m


def random_transform(rng, from_frame, to_frame, t_scale=100.0):
    rot = Rotation.random(random_state=rng).as_matrix()
    return RigidTransform(rot, rng.normal(0.0, t_scale, 3), from_frame, to_frame)


def make_camera(**overrides):
    values = dict(fx=2000.0, fy=2000.0, cx=1224.0, cy=1024.0,
                  width=2448, height=2048)
    values.update(overrides)
    return CameraModel(**values)


class TestRigidTransform:
    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValueError):
            RigidTransform(np.eye(3) * 2.0, np.zeros(3), WORLD, CAMERA)

    def test_rejects_reflection(self):
        with pytest.raises(ValueError):
            RigidTransform(np.diag([1.0, 1.0, -1.0]), np.zeros(3), WORLD, CAMERA)

    def test_inverse_roundtrip(self, rng):
        t = random_transform(rng, WORLD, CAMERA)
        both = compose(t, t.inverse())
        np.testing.assert_allclose(both.rotation, np.eye(3), atol=1e-12)
        np.testing.assert_allclose(both.translation, 0.0, atol=1e-9)


class TestCompose:
    def test_identity_left(self, rng):
        t = random_transform(rng, POINTER, WORLD)
        out = compose(RigidTransform.identity(WORLD), t)
        np.testing.assert_allclose(out.rotation, t.rotation, atol=1e-15)
        np.testing.assert_allclose(out.translation, t.translation, atol=1e-15)

    def test_frame_mismatch(self, rng):
        a = random_transform(rng, WORLD, CAMERA)
        b = random_transform(rng, POINTER, CAMERA)  # inner frames differ
        with pytest.raises(FrameMismatch):
            compose(a, b)

    def test_result_frames(self, rng):
        a = random_transform(rng, WORLD, CAMERA)
        b = random_transform(rng, POINTER, WORLD)
        out = compose(a, b)
        assert out.from_frame == POINTER and out.to_frame == CAMERA

    def test_matches_homogeneous_oracle(self, rng):
        for _ in range(200):
            a = random_transform(rng, WORLD, CAMERA)
            b = random_transform(rng, POINTER, WORLD)
            expected = mat44(a.rotation, a.translation) @ mat44(b.rotation, b.translation)
            got = compose(a, b)
            np.testing.assert_allclose(got.matrix(), expected, atol=1e-9)

    def test_spec_example_rz90(self):
        rz90 = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        t_wc = RigidTransform(rz90, [10.0, 0.0, 0.0], WORLD, CAMERA)
        t_pw = RigidTransform(np.eye(3), [0.0, 5.0, 0.0], POINTER, WORLD)
        chained = compose(t_wc, t_pw)
        origin = transform_point(chained, Point3(0.0, 0.0, 0.0, POINTER))
        oracle = (mat44(rz90, [10, 0, 0]) @ mat44(np.eye(3), [0, 5, 0]) @ [0, 0, 0, 1])[:3]
        np.testing.assert_allclose(origin.xyz, oracle, atol=1e-12)


class TestTransformPoint:
    def test_identity(self):
        p = Point3(1.0, 2.0, 3.0, WORLD)
        out = transform_point(RigidTransform.identity(WORLD), p)
        np.testing.assert_allclose(out.xyz, [1.0, 2.0, 3.0])

    def test_pure_translation(self):
        t = RigidTransform(np.eye(3), [0.0, 0.0, -100.0], WORLD, CAMERA)
        out = transform_point(t, Point3(0.0, 0.0, 0.0, WORLD))
        np.testing.assert_allclose(out.xyz, [0.0, 0.0, -100.0])
        assert out.frame == CAMERA

    def test_frame_check(self):
        t = RigidTransform.identity(WORLD)
        with pytest.raises(FrameMismatch):
            transform_point(t, Point3(0.0, 0.0, 0.0, CAMERA))

    def test_matches_homogeneous_oracle(self, rng):
        for _ in range(200):
            t = random_transform(rng, WORLD, CAMERA)
            p = rng.normal(0.0, 50.0, 3)
            expected = (mat44(t.rotation, t.translation) @ [*p, 1.0])[:3]
            got = transform_point(t, Point3.from_array(p, WORLD))
            np.testing.assert_allclose(got.xyz, expected, atol=1e-12)

    def test_preserves_distances(self, rng):
        t = random_transform(rng, WORLD, CAMERA)
        pts = rng.normal(0.0, 100.0, (20, 3))
        moved = np.array([transform_point(t, Point3.from_array(p, WORLD)).xyz
                          for p in pts])
        before = np.linalg.norm(pts[:, None] - pts[None, :], axis=-1)
        after = np.linalg.norm(moved[:, None] - moved[None, :], axis=-1)
        np.testing.assert_allclose(after, before, atol=1e-9)


class TestProject:
    def test_optical_axis_hits_principal_point(self):
        cam = make_camera()
        for z in (1.0, 10.0, 5000.0):
            px = project(cam, Point3(0.0, 0.0, z, CAMERA))
            assert (px.u, px.v) == (cam.cx, cam.cy)

    def test_spec_example_values(self):
        # u = 2000*10/1000 + 1224 = 1244, v = 2000*20/1000 + 1024 = 1064
        cam = make_camera()
        px = project(cam, Point3(10.0, 20.0, 1000.0, CAMERA))
        np.testing.assert_allclose([px.u, px.v], [1244.0, 1064.0], atol=1e-12)

    def test_scale_invariance(self, rng):
        cam = make_camera(k1=-0.1, k2=0.02, p1=1e-3, p2=-5e-4)
        p = np.array([35.0, -60.0, 800.0])
        a = project(cam, Point3.from_array(p, CAMERA))
        b = project(cam, Point3.from_array(2.0 * p, CAMERA))
        np.testing.assert_allclose([a.u, a.v], [b.u, b.v], atol=1e-9)

    def test_behind_camera(self):
        cam = make_camera()
        with pytest.raises(BehindCamera):
            project(cam, Point3(0.0, 0.0, -5.0, CAMERA))
        with pytest.raises(BehindCamera):
            project(cam, Point3(1.0, 1.0, 0.0, CAMERA))

    def test_distortion_against_direct_evaluation(self, rng):
        cam = make_camera(k1=-0.12, k2=0.03, p1=8e-4, p2=-6e-4)
        for _ in range(50):
            p = np.array([rng.normal(0, 80), rng.normal(0, 80), rng.uniform(500, 1500)])
            x, y = p[0] / p[2], p[1] / p[2]
            r2 = x * x + y * y
            radial = 1 + cam.k1 * r2 + cam.k2 * r2 ** 2
            xd = x * radial + 2 * cam.p1 * x * y + cam.p2 * (r2 + 2 * x * x)
            yd = y * radial + cam.p1 * (r2 + 2 * y * y) + 2 * cam.p2 * x * y
            px = project(cam, Point3.from_array(p, CAMERA))
            np.testing.assert_allclose([px.u, px.v],
                                       [cam.fx * xd + cam.cx, cam.fy * yd + cam.cy],
                                       atol=1e-9)


class TestUnprojectToPlane:
    def test_principal_point_axis_plane(self):
        cam = make_camera()
        out = unproject_to_plane(cam, Pixel(cam.cx, cam.cy),
                                 Point3(0.0, 0.0, 1000.0, CAMERA), [0.0, 0.0, 1.0])
        np.testing.assert_allclose(out.xyz, [0.0, 0.0, 1000.0], atol=1e-9)

    def test_roundtrip_project(self, rng):
        cam = make_camera(k1=-0.08, k2=0.01, p1=4e-4, p2=-2e-4)
        plane_pt = Point3(0.0, 0.0, 1000.0, CAMERA)
        normal = np.array([0.05, -0.02, 1.0])
        for _ in range(100):
            px = Pixel(rng.uniform(100, cam.width - 100), rng.uniform(100, cam.height - 100))
            p = unproject_to_plane(cam, px, plane_pt, normal)
            # on the plane within 1e-9 mm (algebraic substitution)
            n = normal / np.linalg.norm(normal)
            assert abs(np.dot(p.xyz - plane_pt.xyz, n)) < 1e-9
            back = project(cam, p)
            np.testing.assert_allclose([back.u, back.v], [px.u, px.v], atol=1e-6)

    def test_plane_roundtrip_identity(self, rng):
        cam = make_camera()
        plane_pt = Point3(0.0, 0.0, 900.0, CAMERA)
        for _ in range(20):
            p = Point3(rng.uniform(-200, 200), rng.uniform(-150, 150), 900.0, CAMERA)
            again = unproject_to_plane(cam, project(cam, p), plane_pt, [0, 0, 1])
            np.testing.assert_allclose(again.xyz, p.xyz, atol=1e-6)

    def test_parallel_ray(self):
        cam = make_camera()
        with pytest.raises(RayParallelToPlane):
            unproject_to_plane(cam, Pixel(cam.cx, cam.cy),
                               Point3(0.0, 100.0, 0.0, CAMERA), [0.0, 1.0, 0.0])


class TestChains:
    def bundle(self, rng, degenerate_projector=False):
        cam = make_camera()
        t_wc = random_transform(rng, WORLD, CAMERA, t_scale=500.0)
        if degenerate_projector:
            proj = cam
            t_cb = RigidTransform(np.eye(3), np.zeros(3), CAMERA, PROJECTOR)
        else:
            proj = CameraModel(fx=1800.0, fy=1800.0, cx=960.0, cy=540.0,
                               width=1920, height=1080)
            t_cb = RigidTransform(Rotation.random(random_state=rng).as_matrix(),
                                  rng.normal(0, 30.0, 3), CAMERA, PROJECTOR)
        return CalibrationBundle(camera=cam, t_world_camera=t_wc,
                                 projector=proj, t_camera_projector=t_cb)

    def test_identity_chain_hits_principal_point(self):
        cam = make_camera()
        bundle = CalibrationBundle(
            camera=cam, t_world_camera=RigidTransform(np.eye(3), np.zeros(3), WORLD, CAMERA),
            projector=cam,
            t_camera_projector=RigidTransform(np.eye(3), np.zeros(3), CAMERA, PROJECTOR))
        pose = RigidTransform(np.eye(3), np.zeros(3), POINTER, WORLD)
        px = tip_to_camera_pixel(bundle, pose, Point3(0.0, 0.0, 500.0, POINTER))
        assert (px.u, px.v) == (cam.cx, cam.cy)

    def test_camera_chain_matches_matrix_oracle(self, rng):
        hits = 0
        while hits < 1000:
            bundle = self.bundle(rng)
            pose = random_transform(rng, POINTER, WORLD, t_scale=100.0)
            tip = rng.normal(0, 50.0, 3)
            chain = (mat44(bundle.t_world_camera.rotation, bundle.t_world_camera.translation)
                     @ mat44(pose.rotation, pose.translation))
            p_cam = (chain @ [*tip, 1.0])[:3]
            if p_cam[2] <= 1.0:
                continue
            hits += 1
            x, y = p_cam[0] / p_cam[2], p_cam[1] / p_cam[2]
            expected = [bundle.camera.fx * x + bundle.camera.cx,
                        bundle.camera.fy * y + bundle.camera.cy]
            got = tip_to_camera_pixel(bundle, pose, Point3.from_array(tip, POINTER))
            np.testing.assert_allclose([got.u, got.v], expected, atol=1e-9)

    def test_projector_chain_matches_four_factor_oracle(self, rng):
        hits = 0
        while hits < 1000:
            bundle = self.bundle(rng)
            pose = random_transform(rng, POINTER, WORLD, t_scale=100.0)
            tip = rng.normal(0, 50.0, 3)
            k_b = np.array([[bundle.projector.fx, 0, bundle.projector.cx],
                            [0, bundle.projector.fy, bundle.projector.cy],
                            [0, 0, 1.0]])
            chain = (mat44(bundle.t_camera_projector.rotation,
                           bundle.t_camera_projector.translation)
                     @ mat44(bundle.t_world_camera.rotation,
                             bundle.t_world_camera.translation)
                     @ mat44(pose.rotation, pose.translation))
            p_proj = (chain @ [*tip, 1.0])[:3]
            if p_proj[2] <= 1.0:
                continue
            hits += 1
            s_uv = k_b @ p_proj
            expected = s_uv[:2] / s_uv[2]
            got = tip_to_projector_pixel(bundle, pose, Point3.from_array(tip, POINTER))
            np.testing.assert_allclose([got.u, got.v], expected, atol=1e-9)

    def test_colocated_projector_degenerates_to_camera(self, rng):
        bundle = self.bundle(rng, degenerate_projector=True)
        pose = random_transform(rng, POINTER, WORLD, t_scale=30.0)
        tip = np.array([5.0, -3.0, 40.0])
        p_cam = bundle.t_world_camera.apply(pose.apply(tip))
        if p_cam[2] <= 0:
            pose = RigidTransform(pose.rotation, pose.translation + [0, 0, 2000.0],
                                  POINTER, WORLD)
        a = tip_to_camera_pixel(bundle, pose, Point3.from_array(tip, POINTER))
        b = tip_to_projector_pixel(bundle, pose, Point3.from_array(tip, POINTER))
        np.testing.assert_allclose([a.u, a.v], [b.u, b.v], atol=1e-12)

    def test_tip_behind_projector(self):
        cam = make_camera()
        bundle = CalibrationBundle(
            camera=cam, t_world_camera=RigidTransform(np.eye(3), np.zeros(3), WORLD, CAMERA),
            projector=cam,
            t_camera_projector=RigidTransform(np.eye(3), np.zeros(3), CAMERA, PROJECTOR))
        pose = RigidTransform(np.eye(3), [0.0, 0.0, -50.0], POINTER, WORLD)
        with pytest.raises(BehindCamera):
            tip_to_projector_pixel(bundle, pose, Point3(0.0, 0.0, 0.0, POINTER))

    def test_bit_identical_to_manual_composition(self, rng):
        from annorig.geometry import project as geo_project
        bundle = self.bundle(rng)
        pose = RigidTransform(Rotation.random(random_state=rng).as_matrix(),
                              [10.0, 5.0, 0.0], POINTER, WORLD)
        tip = Point3(1.0, 2.0, 3.0, POINTER)
        manual = geo_project(bundle.camera,
                             transform_point(compose(bundle.t_world_camera, pose), tip))
        chained = tip_to_camera_pixel(bundle, pose, tip)
        assert (manual.u, manual.v) == (chained.u, chained.v)


class TestBundleSerialization:
    def test_roundtrip(self, rng):
        cam = make_camera(k1=-0.05)
        t_wc = random_transform(rng, WORLD, CAMERA)
        bundle = CalibrationBundle(camera=cam, t_world_camera=t_wc,
                                   reprojection_rms_px=0.123)
        again = bundle_from_dict(bundle_to_dict(bundle))
        np.testing.assert_allclose(again.t_world_camera.rotation, t_wc.rotation)
        assert again.camera == cam
        assert again.projector is None
        assert again.reprojection_rms_px == 0.123
