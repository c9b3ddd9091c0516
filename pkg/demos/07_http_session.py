"""A scripted end-to-end session against the HTTP service (in-process).

Create a session, stream a two-point diagonal (the bounding-box gesture),
finalize, run the stage-2 capture over a motion script, and download the
YOLO archive -- the same calls the browser UI makes.
"""
import io
import time
import zipfile
from pathlib import Path
from tempfile import TemporaryDirectory

import numpy as np
from fastapi.testclient import TestClient

from annorig.service import create_app
from annorig.sim import RigConfig, Scene, checkerboard_texture

config = RigConfig(pose_sigma_mm=0.0, rot_sigma_rad=0.0,
                   intensity_sigma=0.0, seed=11).scaled(0.25)
scene = Scene(texture=checkerboard_texture((220, 220), square=24, seed=6),
              texel_size_mm=1.0,
              motion=[(3.0 * i, 1.0 * i, 0.0) for i in range(12)])

with TemporaryDirectory() as data_dir:
    client = TestClient(create_app(data_dir, config=config, scene=scene))

    session = client.post("/sessions", json={"labels": ["part"]}).json()
    sid = session["id"]
    print("session", sid, "state:", session["state"])

    # pen down at one corner, up at the opposite corner
    corners = [[-70.0, -55.0, 0.0], [65.0, 50.0, 0.0]]
    records = [{"timestamp": i / 60.0, "rotation": np.eye(3).tolist(),
                "translation": corners[i], "valid": True, "pen_down": True}
               for i in range(2)]
    resp = client.post(f"/sessions/{sid}/samples", json={"samples": records}).json()
    print("overlay feedback pixel:", np.round(resp["projector_pixel"], 1).tolist())

    ann = client.post(f"/sessions/{sid}/annotations",
                      json={"kind": "bbox", "label": "part"}).json()
    print("finalized bbox:", np.round(ann["points"], 1).tolist())

    client.post(f"/sessions/{sid}/capture", json={"frames": {"count": 12}})
    while True:
        status = client.get(f"/sessions/{sid}/capture/status").json()
        if status["state"] in ("done", "error"):
            break
        time.sleep(0.05)
    print("capture:", status["state"], f"({status['frames_done']} frames,",
          f"gaps {status['gaps']})")

    archive = client.get(f"/sessions/{sid}/export", params={"format": "yolo"})
    out = Path("demo_output/http_yolo.zip")
    out.parent.mkdir(exist_ok=True)
    out.write_bytes(archive.content)
    names = zipfile.ZipFile(io.BytesIO(archive.content)).namelist()
    print(f"downloaded YOLO archive with {len(names)} files -> {out}")

    client.post(f"/sessions/{sid}/close")
    print("final state:", client.get(f"/sessions/{sid}").json()["state"])
