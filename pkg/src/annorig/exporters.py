"""Dataset serialization: YOLO text lines, CVAT 1.1 XML, structured JSON.

Formatting is pinned for byte-exact golden tests: YOLO values carry 6 decimal
places, CVAT coordinates 2. The CVAT exporter writes the document by template
so export -> import -> export is a byte-identical fixpoint.
"""
from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .annotations import BBOX, POLYGON, POLYLINE, Annotation
from .errors import EmptyLabelCatalog, ParseError


@dataclass
class DatasetFrame:
    image: str
    width: int
    height: int
    annotations: list[Annotation] = field(default_factory=list)


@dataclass
class Dataset:
    """Label catalog (class ids are list positions) plus per-frame shapes."""

    labels: list[str]
    frames: list[DatasetFrame] = field(default_factory=list)
    name: str = "annorig"

    def validate(self) -> None:
        catalog = set(self.labels)
        for frame in self.frames:
            for ann in frame.annotations:
                if ann.label not in catalog:
                    raise ValueError(
                        f"label '{ann.label}' of {ann.id} missing from catalog")

    def class_id(self, label: str) -> int:
        return self.labels.index(label)


@dataclass
class YoloExport:
    """Per-image label documents plus the degradation/clamping report."""

    documents: dict[str, str]  # image stem -> file content
    classes: str               # classes.txt content
    report: list[str]          # one line per degraded or clamped shape


def export_yolo(ds: Dataset) -> YoloExport:
    """Normalized `class cx cy w h` lines, one per shape, 6 decimals.

    Non-bbox shapes are exported via their axis-aligned extent and flagged in
    the report; boxes are clamped to the image and clamping reported. Shapes
    with no area after clamping are dropped, also via the report.
    """
    has_annotations = any(frame.annotations for frame in ds.frames)
    if has_annotations and not ds.labels:
        raise EmptyLabelCatalog("cannot assign class ids without a label catalog")
    ds.validate()

    documents: dict[str, str] = {}
    report: list[str] = []
    for frame in ds.frames:
        stem = Path(frame.image).stem
        lines = []
        for ann in frame.annotations:
            if ann.kind != BBOX:
                report.append(f"{frame.image}: {ann.kind} '{ann.id}' exported "
                              "as its bounding extent")
            x0, y0, x1, y1 = ann.bounds()
            cx0, cy0 = max(x0, 0.0), max(y0, 0.0)
            cx1, cy1 = min(x1, float(frame.width)), min(y1, float(frame.height))
            if (cx0, cy0, cx1, cy1) != (x0, y0, x1, y1):
                report.append(f"{frame.image}: '{ann.id}' clamped to image bounds")
            if cx1 <= cx0 or cy1 <= cy0:
                report.append(f"{frame.image}: '{ann.id}' dropped (no area in frame)")
                continue
            cx = (cx0 + cx1) / 2.0 / frame.width
            cy = (cy0 + cy1) / 2.0 / frame.height
            w = (cx1 - cx0) / frame.width
            h = (cy1 - cy0) / frame.height
            lines.append(f"{ds.class_id(ann.label)} "
                         f"{cx:.6f} {cy:.6f} {w:.6f} {h:.6f}\n")
        documents[stem] = "".join(lines)
    classes = "".join(f"{label}\n" for label in ds.labels)
    return YoloExport(documents=documents, classes=classes, report=report)


def write_yolo(ds: Dataset, out_dir: str | Path) -> None:
    out = Path(out_dir)
    (out / "labels").mkdir(parents=True, exist_ok=True)
    result = export_yolo(ds)
    for stem, content in result.documents.items():
        (out / "labels" / f"{stem}.txt").write_text(content)
    (out / "classes.txt").write_text(result.classes)
    if result.report:
        (out / "export_report.txt").write_text("".join(l + "\n" for l in result.report))


# --- CVAT "annotations 1.1" image dump ---------------------------------------

def _points_attr(points: np.ndarray) -> str:
    return ";".join(f"{x:.2f},{y:.2f}" for x, y in points)


def export_cvat_xml(ds: Dataset) -> str:
    """CVAT 1.1 image-dump XML, UTF-8, deterministic formatting."""
    ds.validate()
    lines = ['<?xml version="1.0" encoding="utf-8"?>', "<annotations>",
             "  <version>1.1</version>", "  <meta>", "    <task>",
             f"      <name>{escape(ds.name)}</name>",
             f"      <size>{len(ds.frames)}</size>", "      <labels>"]
    for label in ds.labels:
        lines += ["        <label>", f"          <name>{escape(label)}</name>",
                  "        </label>"]
    lines += ["      </labels>", "    </task>", "  </meta>"]
    for idx, frame in enumerate(ds.frames):
        lines.append(f'  <image id="{idx}" name="{escape(frame.image)}" '
                     f'width="{frame.width}" height="{frame.height}">')
        for ann in frame.annotations:
            label = escape(ann.label)
            if ann.kind == BBOX:
                (x0, y0), (x1, y1) = ann.points
                lines.append(f'    <box label="{label}" occluded="0" '
                             f'xtl="{x0:.2f}" ytl="{y0:.2f}" '
                             f'xbr="{x1:.2f}" ybr="{y1:.2f}" z_order="0">'
                             "</box>")
            else:
                tag = "polygon" if ann.kind == POLYGON else "polyline"
                lines.append(f'    <{tag} label="{label}" occluded="0" '
                             f'points="{_points_attr(ann.points)}" z_order="0">'
                             f"</{tag}>")
        lines.append("  </image>")
    lines.append("</annotations>")
    return "\n".join(lines) + "\n"


def _require_attr(element: ET.Element, name: str, context: str) -> str:
    value = element.get(name)
    if value is None:
        raise ParseError(f"<{element.tag}> missing attribute '{name}' in {context}")
    return value


def import_cvat_xml(doc: str) -> Dataset:
    """Inverse of export_cvat_xml; raises ParseError with element context."""
    try:
        root = ET.fromstring(doc)
    except ET.ParseError as exc:
        raise ParseError(f"malformed XML: {exc}") from exc
    if root.tag != "annotations":
        raise ParseError(f"expected <annotations> root, found <{root.tag}>")

    name = root.findtext("meta/task/name") or "annorig"
    labels = [el.text or "" for el in root.findall("meta/task/labels/label/name")]

    frames = []
    for img_idx, img in enumerate(root.findall("image")):
        context = f"image '{img.get('name', img_idx)}'"
        frame = DatasetFrame(
            image=_require_attr(img, "name", "document"),
            width=int(_require_attr(img, "width", context)),
            height=int(_require_attr(img, "height", context)))
        frame_index = int(img.get("id", img_idx))
        for shape_idx, shape in enumerate(img):
            ann_id = f"{frame_index}-{shape_idx}"
            label = _require_attr(shape, "label", context)
            if shape.tag == "box":
                pts = np.array([
                    [float(_require_attr(shape, "xtl", context)),
                     float(_require_attr(shape, "ytl", context))],
                    [float(_require_attr(shape, "xbr", context)),
                     float(_require_attr(shape, "ybr", context))]])
                kind = BBOX
            elif shape.tag in ("polygon", "polyline"):
                raw = _require_attr(shape, "points", context)
                try:
                    pts = np.array([[float(c) for c in pair.split(",")]
                                    for pair in raw.split(";")])
                except ValueError as exc:
                    raise ParseError(
                        f"<{shape.tag}> has malformed points in {context}") from exc
                kind = POLYGON if shape.tag == "polygon" else POLYLINE
            else:
                raise ParseError(f"unsupported shape <{shape.tag}> in {context}")
            frame.annotations.append(Annotation(
                id=ann_id, label=label, kind=kind, points=pts,
                frame_index=frame_index))
        frames.append(frame)
    return Dataset(labels=labels, frames=frames, name=name)


# --- structured JSON ----------------------------------------------------------

def export_json(ds: Dataset) -> str:
    """Schema: {labels: [...], frames: [{image, width, height, annotations:
    [{label, kind, points: [[x, y], ...]}]}]}."""
    ds.validate()
    payload = {
        "labels": list(ds.labels),
        "frames": [{
            "image": f.image,
            "width": f.width,
            "height": f.height,
            "annotations": [{
                "label": a.label,
                "kind": a.kind,
                "points": [[float(x), float(y)] for x, y in a.points],
            } for a in f.annotations],
        } for f in ds.frames],
    }
    return json.dumps(payload, indent=2) + "\n"


def dataset_from_json(doc: str) -> Dataset:
    try:
        payload = json.loads(doc)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc}") from exc
    frames = []
    for fi, f in enumerate(payload.get("frames", [])):
        frame = DatasetFrame(image=f["image"], width=f["width"], height=f["height"])
        for ai, a in enumerate(f.get("annotations", [])):
            frame.annotations.append(Annotation(
                id=a.get("id", f"{fi}-{ai}"), label=a["label"], kind=a["kind"],
                points=np.array(a["points"], dtype=float), frame_index=fi))
        frames.append(frame)
    return Dataset(labels=list(payload.get("labels", [])), frames=frames,
                   name=payload.get("name", "annorig"))


def write_export(ds: Dataset, fmt: str, out_dir: str | Path) -> None:
    """CLI/file-layout entry point: yolo | cvat | json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "yolo":
        write_yolo(ds, out)
    elif fmt == "cvat":
        (out / "annotations.xml").write_text(export_cvat_xml(ds), encoding="utf-8")
    elif fmt == "json":
        (out / "dataset.json").write_text(export_json(ds))
    else:
        raise ValueError(f"unknown export format '{fmt}'")
