"""Camera intrinsics from planar views, then the world pose from grid touches.

First the classic planar-target calibration (absolute-conic closed form, then
joint LM refinement of intrinsics + distortion + poses), then PnP against
grid points touched with the calibrated pen to anchor the workspace frame.
"""
import numpy as np

from annorig.extrinsics import CircleGridSpec, solve_pnp
from annorig.intrinsics import calibrate_intrinsics_zhang
from annorig.sim import RigConfig, make_planar_views, make_pnp_correspondences

config = RigConfig(pose_sigma_mm=0.0, rot_sigma_rad=0.0)
truth = config.camera

for noise in (0.0, 0.2):
    views, _, _ = make_planar_views(truth, n_views=10, seed=3,
                                    pixel_sigma_px=noise)
    result = calibrate_intrinsics_zhang(views, truth.width, truth.height)
    print(f"detection noise {noise} px -> rms {result.rms_px:.4f} px, "
          f"{len(result.accepted_costs) - 1} accepted LM steps")
    for attr in ("fx", "fy", "cx", "cy"):
        got = getattr(result.camera, attr)
        want = getattr(truth, attr)
        print(f"  {attr}: {got:9.3f}  (truth {want:7.1f}, "
              f"rel err {abs(got - want) / want:.2e})")

# extrinsics: the pen touches the notched circles of the asymmetric grid;
# their world positions and detected image centers give a PnP problem
grid = CircleGridSpec(rows=4, cols=11, diagonal_spacing=36.0)
points = grid.points() - grid.points().mean(axis=0)
corrs = make_pnp_correspondences(config, points, pixel_sigma_px=0.2, seed=5)
pose = solve_pnp(corrs, truth)
print(f"\nPnP on {len(corrs)} touched circles: rms {pose.rms_px:.3f} px")
print("  world->camera translation:", np.round(pose.pose.translation, 3))
print("  truth                    :", config.t_world_camera.translation)
