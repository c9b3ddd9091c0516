"""Mapping a tracked pen tip into camera and projector pixels.

The rig keeps four frames: pointer, world (on the table, z up), camera and
projector. A pixel is produced by chaining rigid transforms and a pinhole
projection; frame ids are checked at every composition, so wiring the chain
backwards raises instead of silently producing garbage.
"""
import numpy as np

from annorig import (CAMERA, POINTER, WORLD, Point3, RigidTransform, compose,
                     tip_to_camera_pixel, tip_to_projector_pixel,
                     transform_point)
from annorig.errors import FrameMismatch
from annorig.rotations import rodrigues
from annorig.sim import RigConfig

config = RigConfig(pose_sigma_mm=0.0, rot_sigma_rad=0.0)
bundle = config.bundle()  # ground-truth calibration of the simulated rig
print("camera:", bundle.camera)
print("world->camera translation:", bundle.t_world_camera.translation)

# the pen: its tip sits 120 mm below the tracked reference body
tip_offset = Point3(0.0, 0.0, -120.0, POINTER)

# hold the pen tilted 20 degrees, tip touching the table at (80, -40)
rot = rodrigues(np.deg2rad([20.0, 0.0, 0.0]))
tip_world = np.array([80.0, -40.0, 0.0])
pose = RigidTransform(rot, tip_world - rot @ tip_offset.xyz, POINTER, WORLD)

cam_px = tip_to_camera_pixel(bundle, pose, tip_offset)
proj_px = tip_to_projector_pixel(bundle, pose, tip_offset)
print(f"tip at {tip_world} mm -> camera ({cam_px.u:.2f}, {cam_px.v:.2f}) px, "
      f"projector ({proj_px.u:.2f}, {proj_px.v:.2f}) px")

# the chain is just composition + projection; spell it out
chain = compose(bundle.t_world_camera, pose)
print("pointer->camera chain maps", chain.from_frame, "->", chain.to_frame)
tip_cam = transform_point(chain, tip_offset)
print(f"tip in camera frame: ({tip_cam.x:.1f}, {tip_cam.y:.1f}, {tip_cam.z:.1f}) mm")

# frames are load-bearing: composing the wrong way is an error, not a bug hunt
try:
    compose(pose, bundle.t_world_camera)
except FrameMismatch as exc:
    print("wrong order rejected:", exc)
