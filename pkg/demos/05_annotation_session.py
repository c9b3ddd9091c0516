"""Stage 1: a pen stroke becomes a cleaned polygon and standard label files.

A simulated pointer traces a square on the table; every sample yields a live
projector-feedback pixel; the stroke is simplified (densify + corner-keeping
reduction) and projected into the reference camera frame, then exported as
YOLO, CVAT 1.1 XML and JSON into ./demo_output/.
"""
from pathlib import Path

import numpy as np

from annorig import Trajectory, append_sample, finalize_shape, simplify
from annorig.exporters import Dataset, DatasetFrame, write_export
from annorig.sim import DEFAULT_TIP_OFFSET, RigConfig, generate_pointer_stream

config = RigConfig(pose_sigma_mm=0.1, rot_sigma_rad=0.0002, seed=8)
bundle = config.bundle()

square = np.array([[-60.0, -60.0], [60.0, -60.0], [60.0, 60.0],
                   [-60.0, 60.0], [-60.0, -60.0]])
stream = generate_pointer_stream(square, config, speed_mm_s=220.0)
print(f"pointer stream: {len(stream.samples)} samples at 60 Hz "
      f"(tracker noise {config.pose_sigma_mm} mm)")

traj = Trajectory()
overlay = None
for sample in stream.samples:
    overlay = append_sample(traj, sample, bundle, DEFAULT_TIP_OFFSET)
print(f"last projector-feedback pixel: ({overlay.u:.1f}, {overlay.v:.1f})")

cleaned = simplify(traj, epsilon_mm=1.5)
print(f"simplify: {len(traj)} raw samples -> {len(cleaned)} vertices")

annotation = finalize_shape(cleaned, "polygon", bundle, label="gasket")
print(f"finalized polygon with {len(annotation.points)} vertices "
      f"in frame {annotation.frame_index}")

dataset = Dataset(labels=["gasket"], frames=[DatasetFrame(
    image="frame_000000.pgm", width=bundle.camera.width,
    height=bundle.camera.height, annotations=[annotation])])
out = Path("demo_output")
for fmt in ("yolo", "cvat", "json"):
    write_export(dataset, fmt, out / fmt)
    print(f"wrote {fmt} export -> {out / fmt}")
