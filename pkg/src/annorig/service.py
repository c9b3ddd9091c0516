"""Session-oriented HTTP facade over the annotation pipeline.

One service process owns a calibration bundle plus a simulated rig (scene +
config) and serves concurrent, fully isolated sessions. Within a session the
workflow is the two-stage one: stream pointer samples and finalize
annotations while `annotating`, then run `capture` (stage 2: render the
motion script and propagate the annotations), then close. Sessions persist as
append-only JSONL event logs plus a dataset.json snapshot, so the CLI can
reproduce any HTTP export from disk.

State machine: annotating -> capturing -> closed; endpoints outside the
current state answer 409. Library errors map to {code, message} payloads
with snake_case codes derived from the exception class.
"""
from __future__ import annotations

import io
import json
import re
import threading
import time
import uuid
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from . import sim
from .annotations import Annotation
from .errors import AnnorigError, InvalidSample
from .exporters import (Dataset, DatasetFrame, export_cvat_xml, export_json,
                        export_yolo)
from .flow import TrackParams, propagate_annotation
from .geometry import (CAMERA, WORLD, CalibrationBundle, Pixel, Point3,
                       transform_point, unproject_to_plane,
                       world_to_camera_pixel)
from .image import FRAME_NAME_FORMAT, read_frame_sequence, write_pgm
from .pivot import TrackedSample
from .trajectory import Trajectory, append_sample, finalize_shape, simplify

ANNOTATING = "annotating"
CAPTURING = "capturing"
CLOSED = "closed"

_CAMEL_RE = re.compile(r"(?<!^)(?=[A-Z])")


def error_code(exc: Exception) -> str:
    return _CAMEL_RE.sub("_", type(exc).__name__).lower()


# HTTP status per error family; anything unlisted is a conflict with session
# state or data (409)
_STATUS_OVERRIDES = {
    "invalid_sample": 422,
    "out_of_range": 422,
    "parse_error": 422,
    "path_out_of_work_area": 422,
}


@dataclass
class CaptureStatus:
    state: str = "idle"  # idle | running | done | error
    frames_done: int = 0
    frames_total: int = 0
    gaps: list[int] = field(default_factory=list)
    message: str = ""

    def to_dict(self) -> dict:
        return {"state": self.state, "frames_done": self.frames_done,
                "frames_total": self.frames_total, "gaps": self.gaps,
                "message": self.message}


@dataclass
class Session:
    id: str
    labels: list[str]
    bundle: CalibrationBundle
    tip_offset: np.ndarray
    directory: Path
    state: str = ANNOTATING
    trajectory: Trajectory = field(default_factory=Trajectory)
    annotations: list[Annotation] = field(default_factory=list)
    capture: CaptureStatus = field(default_factory=CaptureStatus)
    captured_frames: list = field(default_factory=list)
    captured_dataset: Dataset | None = None
    camera_trail: list[list[float]] = field(default_factory=list)
    projector_trail: list[list[float]] = field(default_factory=list)
    last_tip_world: np.ndarray | None = None
    sample_clock: float = 0.0
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def log_event(self, kind: str, payload: dict) -> None:
        with open(self.directory / "events.jsonl", "a") as fh:
            fh.write(json.dumps({"t": time.time(), "event": kind, **payload}) + "\n")

    def info(self) -> dict:
        return {"id": self.id, "state": self.state, "labels": self.labels,
                "annotations": len(self.annotations),
                "samples": len(self.trajectory)}


def _frame_name(index: int) -> str:
    return FRAME_NAME_FORMAT.format(index)


def build_dataset(session: Session, config: sim.RigConfig) -> Dataset:
    """Current session contents as a Dataset: captured frames when stage 2
    ran, otherwise the single reference frame."""
    if session.captured_dataset is not None:
        return session.captured_dataset
    cam = session.bundle.camera
    frame = DatasetFrame(image=_frame_name(0), width=cam.width, height=cam.height,
                         annotations=list(session.annotations))
    return Dataset(labels=list(session.labels), frames=[frame],
                   name=f"session-{session.id}")


def persist_dataset(session: Session, config: sim.RigConfig) -> None:
    ds = build_dataset(session, config)
    (session.directory / "dataset.json").write_text(export_json(ds))


def export_archive(ds: Dataset, fmt: str) -> bytes:
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
        if fmt == "yolo":
            out = export_yolo(ds)
            for stem, content in out.documents.items():
                zf.writestr(f"labels/{stem}.txt", content)
            zf.writestr("classes.txt", out.classes)
            if out.report:
                zf.writestr("export_report.txt", "".join(l + "\n" for l in out.report))
        elif fmt == "cvat":
            zf.writestr("annotations.xml", export_cvat_xml(ds))
        elif fmt == "json":
            zf.writestr("dataset.json", export_json(ds))
        else:
            raise ValueError(f"unknown export format '{fmt}'")
    return buf.getvalue()


def create_app(data_dir: str | Path, bundle: CalibrationBundle | None = None,
               config: sim.RigConfig | None = None,
               scene: sim.Scene | None = None,
               track_params: TrackParams = TrackParams()) -> FastAPI:
    """Wire the service. The rig config/scene drive the simulated camera; the
    bundle defaults to the rig's ground-truth calibration."""
    config = config or sim.RigConfig(pose_sigma_mm=0.0, rot_sigma_rad=0.0)
    bundle = bundle or config.bundle()
    scene = scene or sim.Scene(texture=sim.checkerboard_texture(seed=1),
                               texel_size_mm=1.0)
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)

    app = FastAPI(title="annorig service")
    sessions: dict[str, Session] = {}

    # table plane expressed in the camera frame, for pixel-sample unprojection
    plane_point_cam = transform_point(bundle.t_world_camera, Point3(0, 0, 0, WORLD))
    plane_normal_cam = bundle.t_world_camera.rotation @ np.array([0.0, 0.0, 1.0])

    def error_response(exc: Exception, status: int | None = None) -> JSONResponse:
        code = error_code(exc)
        return JSONResponse(status_code=status or _STATUS_OVERRIDES.get(code, 409),
                            content={"code": code, "message": str(exc)})

    @app.exception_handler(AnnorigError)
    async def handle_annorig_error(request: Request, exc: AnnorigError):
        return error_response(exc)

    @app.exception_handler(RequestValidationError)
    async def handle_validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422, content={
            "code": "validation_error", "message": str(exc.errors())})

    def get_session(session_id: str) -> Session | None:
        return sessions.get(session_id)

    def not_found() -> JSONResponse:
        return JSONResponse(status_code=404, content={
            "code": "unknown_session", "message": "no such session"})

    def wrong_state(session: Session, expected: str) -> JSONResponse:
        return JSONResponse(status_code=409, content={
            "code": "invalid_state",
            "message": f"session is {session.state}, endpoint needs {expected}"})

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        try:
            body = await request.json()
        except Exception:
            body = {}
        if not isinstance(body, dict):
            return error_response(ValueError("body must be a JSON object"), 422)
        labels = body.get("labels") or ["object"]
        tip_offset = np.asarray(body.get("tip_offset", [0.0, 0.0, 0.0]), dtype=float)
        session_id = uuid.uuid4().hex[:12]
        directory = data_dir / session_id
        directory.mkdir(parents=True, exist_ok=True)
        session = Session(id=session_id, labels=list(labels), bundle=bundle,
                          tip_offset=tip_offset, directory=directory)
        sessions[session_id] = session
        session.log_event("created", {"labels": labels})
        persist_dataset(session, config)
        return session.info()

    @app.get("/sessions/{session_id}")
    async def session_info(session_id: str):
        session = get_session(session_id)
        if session is None:
            return not_found()
        with session.lock:
            return session.info()

    def ingest_one(session: Session, record: dict) -> tuple[Pixel, Pixel]:
        pen_down = bool(record.get("pen_down", True))
        if "pixel" in record:
            u, v = float(record["pixel"][0]), float(record["pixel"][1])
            tip_cam = unproject_to_plane(bundle.camera, Pixel(u, v),
                                         plane_point_cam, plane_normal_cam)
            tip_world = transform_point(bundle.t_world_camera.inverse(), tip_cam)
            session.sample_clock += 1.0 / sim.SAMPLE_RATE_HZ
            sample = TrackedSample(timestamp=session.sample_clock,
                                   rotation=np.eye(3),
                                   translation=tip_world.xyz)
            tip_offset = np.zeros(3)
        else:
            sample = TrackedSample.from_record(record)
            session.sample_clock = sample.timestamp
            tip_offset = session.tip_offset
        overlay = append_sample(session.trajectory, sample, session.bundle,
                                tip_offset, pen_down=pen_down)
        tip = session.trajectory.points[-1]
        cam_px = world_to_camera_pixel(session.bundle, Point3.from_array(tip, WORLD))
        session.last_tip_world = tip
        if pen_down:
            session.projector_trail.append([overlay.u, overlay.v])
            session.camera_trail.append([cam_px.u, cam_px.v])
        return overlay, cam_px

    @app.post("/sessions/{session_id}/samples", status_code=202)
    async def post_samples(session_id: str, request: Request):
        session = get_session(session_id)
        if session is None:
            return not_found()
        if session.state != ANNOTATING:
            return wrong_state(session, ANNOTATING)
        content_type = request.headers.get("content-type", "")
        raw = await request.body()
        try:
            if "json" in content_type and not content_type.startswith("application/x-ndjson"):
                payload = json.loads(raw)
                records = payload["samples"] if isinstance(payload, dict) else payload
            else:  # JSON-lines stream
                records = [json.loads(line) for line in raw.decode().splitlines()
                           if line.strip()]
            if not isinstance(records, list):
                raise ValueError("expected a list of sample records")
        except (ValueError, KeyError) as exc:
            return error_response(ValueError(f"malformed sample body: {exc}"), 422)

        overlay = cam_px = None
        accepted = 0
        with session.lock:
            for record in records:
                try:
                    overlay, cam_px = ingest_one(session, record)
                    accepted += 1
                except InvalidSample:
                    continue  # dropped samples are part of tracker life
            session.log_event("samples", {"count": accepted})
        body = {"accepted": accepted}
        if overlay is not None:
            body["projector_pixel"] = [overlay.u, overlay.v]
            body["camera_pixel"] = [cam_px.u, cam_px.v]
        return body

    @app.post("/sessions/{session_id}/annotations", status_code=201)
    async def post_annotation(session_id: str, request: Request):
        session = get_session(session_id)
        if session is None:
            return not_found()
        if session.state != ANNOTATING:
            return wrong_state(session, ANNOTATING)
        body = await request.json()
        kind = body.get("kind")
        label = body.get("label")
        if kind not in ("bbox", "polygon", "polyline") or not label:
            return error_response(
                ValueError("body needs kind in {bbox,polygon,polyline} and label"), 422)
        if label not in session.labels:
            return error_response(ValueError(f"label '{label}' not in catalog"), 422)
        with session.lock:
            cleaned = simplify(session.trajectory,
                               epsilon_mm=float(body.get("epsilon_mm", 1.5)))
            ann = finalize_shape(cleaned, kind, session.bundle, frame_index=0,
                                 label=label)
            session.annotations.append(ann)
            session.trajectory = Trajectory()  # one stroke per annotation
            session.camera_trail.clear()
            session.projector_trail.clear()
            session.log_event("annotation", ann.to_dict())
            persist_dataset(session, config)
        return ann.to_dict()

    def run_capture(session: Session, frame_count: int,
                    frames_dir: str | None) -> None:
        try:
            if frames_dir:
                frames = read_frame_sequence(frames_dir)
            else:
                frames = []
                for i in range(frame_count):
                    frames.append(sim.render_frame(scene, config, i))
                    with session.lock:
                        session.capture.frames_done = i + 1
            seq_dir = session.directory / "frames"
            seq_dir.mkdir(exist_ok=True)
            for frame in frames:
                write_pgm(frame, seq_dir / _frame_name(frame.frame_index))

            per_frame: dict[int, list[Annotation]] = {f.frame_index: [] for f in frames}
            gaps: set[int] = set()
            for ann in session.annotations:
                outputs = propagate_annotation(frames, ann, track_params)
                emitted = {a.frame_index for a in outputs}
                gaps |= {f.frame_index for f in frames} - emitted
                for out in outputs:
                    per_frame[out.frame_index].append(out)
            cam = session.bundle.camera
            ds = Dataset(labels=list(session.labels), name=f"session-{session.id}",
                         frames=[DatasetFrame(image=_frame_name(f.frame_index),
                                              width=cam.width, height=cam.height,
                                              annotations=per_frame[f.frame_index])
                                 for f in frames])
            with session.lock:
                session.captured_frames = frames
                session.captured_dataset = ds
                session.capture.state = "done"
                session.capture.frames_done = len(frames)
                session.capture.gaps = sorted(gaps)
                persist_dataset(session, config)
                session.log_event("capture_finished", {"frames": len(frames),
                                                       "gaps": sorted(gaps)})
        except Exception as exc:  # background thread: report, never crash the app
            with session.lock:
                session.capture.state = "error"
                session.capture.message = f"{error_code(exc)}: {exc}"
                session.log_event("capture_failed", {"error": str(exc)})

    @app.post("/sessions/{session_id}/capture", status_code=202)
    async def post_capture(session_id: str, request: Request):
        session = get_session(session_id)
        if session is None:
            return not_found()
        body = await request.json()
        frames_spec = body.get("frames") or {}
        frame_count = int(frames_spec.get("count", len(scene.motion)))
        frames_dir = frames_spec.get("directory")
        with session.lock:
            if session.state != ANNOTATING:
                return wrong_state(session, ANNOTATING)
            if not session.annotations:
                return error_response(ValueError("no annotations to propagate"), 409)
            session.state = CAPTURING
            session.capture = CaptureStatus(state="running", frames_total=frame_count)
            session.log_event("capture_started", {"frames": frame_count})
        worker = threading.Thread(target=run_capture,
                                  args=(session, frame_count, frames_dir),
                                  daemon=True)
        worker.start()
        return {"state": CAPTURING, "frames_total": frame_count}

    @app.get("/sessions/{session_id}/capture/status")
    async def capture_status(session_id: str):
        session = get_session(session_id)
        if session is None:
            return not_found()
        with session.lock:
            return session.capture.to_dict()

    @app.get("/sessions/{session_id}/dataset")
    async def dataset(session_id: str):
        session = get_session(session_id)
        if session is None:
            return not_found()
        with session.lock:
            ds = build_dataset(session, config)
        return json.loads(export_json(ds))

    @app.get("/sessions/{session_id}/export")
    async def export(session_id: str, format: str = "json"):
        session = get_session(session_id)
        if session is None:
            return not_found()
        if format not in ("yolo", "cvat", "json"):
            return error_response(ValueError(f"unknown format '{format}'"), 422)
        with session.lock:
            ds = build_dataset(session, config)
        payload = export_archive(ds, format)
        return Response(content=payload, media_type="application/zip",
                        headers={"Content-Disposition":
                                 f'attachment; filename="{session_id}-{format}.zip"'})

    @app.get("/sessions/{session_id}/frames/latest")
    async def latest_frame(session_id: str):
        session = get_session(session_id)
        if session is None:
            return not_found()
        from PIL import Image
        with session.lock:
            if session.captured_frames:
                frame = session.captured_frames[-1]
            else:
                frame = sim.render_frame(scene, config, 0,
                                         pointer_tip_world=session.last_tip_world)
        img = Image.fromarray(frame.pixels, mode="L")
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.get("/sessions/{session_id}/frames/latest/meta")
    async def latest_meta(session_id: str):
        session = get_session(session_id)
        if session is None:
            return not_found()
        with session.lock:
            return {
                "frame_index": (session.captured_frames[-1].frame_index
                                if session.captured_frames else 0),
                "camera_trail": list(session.camera_trail),
                "projector_trail": list(session.projector_trail),
                "annotations": [a.to_dict() for a in session.annotations],
                "state": session.state,
            }

    @app.post("/sessions/{session_id}/close")
    async def close_session(session_id: str):
        session = get_session(session_id)
        if session is None:
            return not_found()
        with session.lock:
            if session.state != CAPTURING:
                return wrong_state(session, CAPTURING)
            session.state = CLOSED
            session.log_event("closed", {})
            return session.info()

    return app
