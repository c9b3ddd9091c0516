"""Command-line front door: calibration, replay, propagation, export, serve.

Thin argument plumbing over the library; every subcommand reads/writes the
same file formats the HTTP service uses, so scripted and interactive
workflows stay interchangeable.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import sim
from .annotations import Annotation
from .errors import AnnorigError
from .exporters import dataset_from_json, write_export
from .extrinsics import Correspondence3D2D, solve_pnp
from .flow import TrackParams, propagate_annotation
from .geometry import (BOARD, CalibrationBundle, Pixel, Point3, WORLD,
                       load_bundle, save_bundle)
from .graycode import COLUMN_AXIS, ROW_AXIS, decode_correspondences
from .image import read_frame_sequence, read_pgm
from .intrinsics import PlanarView, calibrate_intrinsics_zhang
from .pivot import read_samples_csv, solve_pivot, write_pivot_result
from .projector import ProjectorView, calibrate_projector, stereo_extrinsics
from .trajectory import Trajectory, append_sample, finalize_shape, simplify


def cmd_calibrate_pivot(args) -> int:
    samples = read_samples_csv(args.samples)
    result = solve_pivot(samples)
    write_pivot_result(result, args.out)
    print(f"tip offset {np.round(result.tip_offset, 4).tolist()} mm, "
          f"rms {result.rms_residual:.6f} mm over {result.sample_count} samples")
    return 0


def cmd_calibrate_intrinsics(args) -> int:
    spec = json.loads(Path(args.views).read_text())
    views = [PlanarView(np.array(v["plane_points"]), np.array(v["image_points"]))
             for v in spec["views"]]
    result = calibrate_intrinsics_zhang(views, spec["width"], spec["height"])
    bundle = CalibrationBundle(camera=result.camera,
                               t_world_camera=sim.RigConfig().t_world_camera,
                               reprojection_rms_px=result.rms_px)
    if args.bundle and Path(args.bundle).exists():
        old = load_bundle(args.bundle)
        bundle = CalibrationBundle(camera=result.camera,
                                   t_world_camera=old.t_world_camera,
                                   projector=old.projector,
                                   t_camera_projector=old.t_camera_projector,
                                   reprojection_rms_px=result.rms_px)
    save_bundle(bundle, args.out)
    print(f"fx {result.camera.fx:.2f} fy {result.camera.fy:.2f} "
          f"cx {result.camera.cx:.2f} cy {result.camera.cy:.2f} "
          f"rms {result.rms_px:.4f} px")
    return 0


def cmd_calibrate_extrinsics(args) -> int:
    bundle = load_bundle(args.bundle)
    spec = json.loads(Path(args.correspondences).read_text())
    corrs = [Correspondence3D2D(Point3(*c["world"], WORLD), Pixel(*c["pixel"]))
             for c in spec["correspondences"]]
    result = solve_pnp(corrs, bundle.camera)
    updated = CalibrationBundle(camera=bundle.camera, t_world_camera=result.pose,
                                projector=bundle.projector,
                                t_camera_projector=bundle.t_camera_projector,
                                reprojection_rms_px=result.rms_px)
    save_bundle(updated, args.out)
    print(f"world->camera pose solved, rms {result.rms_px:.4f} px")
    return 0


def cmd_calibrate_projector(args) -> int:
    scene = json.loads(Path(args.scene).read_text())
    proj_w, proj_h = scene["projector"]["width"], scene["projector"]["height"]
    bundle = load_bundle(args.bundle)
    captures_root = Path(args.captures)

    views = []
    cam_poses = []
    for view_spec in scene["views"]:
        view_dir = captures_root / view_spec["dir"]

        def load_pairs(prefix: str, count: int):
            pairs = []
            for b in range(count):
                pat = read_pgm(view_dir / f"{prefix}_b{b:02d}.pgm")
                inv = read_pgm(view_dir / f"{prefix}_b{b:02d}_inv.pgm")
                pairs.append((pat, inv))
            return pairs

        map_u = decode_correspondences(load_pairs("col", view_spec["col_bits"]),
                                       COLUMN_AXIS, proj_w)
        map_v = decode_correspondences(load_pairs("row", view_spec["row_bits"]),
                                       ROW_AXIS, proj_h)
        board = np.array(view_spec["board_points"])
        corners = np.array(view_spec["camera_corners"])
        views.append(ProjectorView(board, corners, map_u, map_v))
        corrs = [Correspondence3D2D(Point3(p[0], p[1], 0.0, BOARD),
                                    Pixel(float(u), float(v)))
                 for p, (u, v) in zip(board, corners)]
        cam_poses.append(solve_pnp(corrs, bundle.camera, world_frame=BOARD).pose)

    result = calibrate_projector(views, proj_w, proj_h)
    stereo = stereo_extrinsics(cam_poses, result.poses)
    updated = CalibrationBundle(camera=bundle.camera,
                                t_world_camera=bundle.t_world_camera,
                                projector=result.camera,
                                t_camera_projector=stereo.transform,
                                reprojection_rms_px=bundle.reprojection_rms_px)
    save_bundle(updated, args.out)
    print(f"projector fx {result.camera.fx:.2f} fy {result.camera.fy:.2f}, "
          f"stereo disagreement {stereo.max_translation_disagreement_mm:.3f} mm")
    return 0


def cmd_annotate_replay(args) -> int:
    from .trajectory import read_sample_stream
    bundle = load_bundle(args.bundle)
    tip_offset = np.array(json.loads(args.tip_offset))
    traj = Trajectory()
    for sample, pen_down in read_sample_stream(args.stream):
        try:
            append_sample(traj, sample, bundle, tip_offset, pen_down=pen_down)
        except AnnorigError:
            continue
    cleaned = simplify(traj, epsilon_mm=args.epsilon)
    ann = finalize_shape(cleaned, args.kind, bundle, label=args.label)
    Path(args.out).write_text(json.dumps(ann.to_dict(), indent=2) + "\n")
    print(f"{args.kind} '{args.label}' with {len(ann.points)} points -> {args.out}")
    return 0


def cmd_propagate(args) -> int:
    frames = read_frame_sequence(args.seq)
    ann = Annotation.from_dict(json.loads(Path(args.annotation).read_text()))
    params = TrackParams(levels=args.levels, window=args.window)
    outputs = propagate_annotation(frames, ann, params)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for out in outputs:
        path = out_dir / f"annotation_{out.frame_index:06d}.json"
        path.write_text(json.dumps(out.to_dict(), indent=2) + "\n")
    emitted = {a.frame_index for a in outputs}
    gaps = sorted(set(f.frame_index for f in frames) - emitted)
    print(f"propagated to {len(outputs)}/{len(frames)} frames"
          + (f", gaps at {gaps}" if gaps else ""))
    return 0


def cmd_export(args) -> int:
    ds = dataset_from_json(Path(args.input).read_text())
    write_export(ds, args.format, args.out)
    print(f"{args.format} export -> {args.out}")
    return 0


def cmd_simulate(args) -> int:
    scenario = json.loads(Path(args.scenario).read_text())
    truth = sim.run_scenario(scenario, args.out)
    print(f"scenario -> {args.out} ({truth['frames']} frames)")
    return 0


def cmd_serve(args) -> int:
    import uvicorn
    from .service import create_app
    bundle = load_bundle(args.bundle) if args.bundle else None
    app = create_app(args.data_dir, bundle=bundle)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="annorig",
                                     description="pointer annotation rig tools")
    sub = parser.add_subparsers(dest="command", required=True)

    calibrate = sub.add_parser("calibrate", help="calibration stages")
    calib_sub = calibrate.add_subparsers(dest="stage", required=True)

    pivot = calib_sub.add_parser("pivot", help="pointer tip offset from pivot poses")
    pivot.add_argument("--samples", required=True, help="CSV of tracked samples")
    pivot.add_argument("--out", required=True, help="result JSON")
    pivot.set_defaults(func=cmd_calibrate_pivot)

    intr = calib_sub.add_parser("intrinsics", help="camera intrinsics from planar views")
    intr.add_argument("--views", required=True, help="views JSON")
    intr.add_argument("--bundle", help="existing bundle to update")
    intr.add_argument("--out", required=True, help="bundle JSON to write")
    intr.set_defaults(func=cmd_calibrate_intrinsics)

    extr = calib_sub.add_parser("extrinsics", help="world->camera pose from touches")
    extr.add_argument("--bundle", required=True)
    extr.add_argument("--correspondences", required=True,
                      help="JSON with world/pixel correspondence list")
    extr.add_argument("--out", required=True)
    extr.set_defaults(func=cmd_calibrate_extrinsics)

    proj = calib_sub.add_parser("projector",
                                help="projector intrinsics + stereo from captures")
    proj.add_argument("--captures", required=True, help="directory of PGM captures")
    proj.add_argument("--scene", required=True, help="scene description JSON")
    proj.add_argument("--bundle", required=True)
    proj.add_argument("--out", required=True)
    proj.set_defaults(func=cmd_calibrate_projector)

    annotate = sub.add_parser("annotate", help="annotation-stage tools")
    ann_sub = annotate.add_subparsers(dest="mode", required=True)
    replay = ann_sub.add_parser("replay", help="replay a sample stream into a shape")
    replay.add_argument("--stream", required=True, help="JSONL sample stream")
    replay.add_argument("--bundle", required=True)
    replay.add_argument("--kind", choices=["bbox", "polygon", "polyline"],
                        default="polyline")
    replay.add_argument("--label", default="object")
    replay.add_argument("--tip-offset", default="[0,0,0]",
                        help="tip offset JSON triple (mm)")
    replay.add_argument("--epsilon", type=float, default=1.5)
    replay.add_argument("--out", required=True)
    replay.set_defaults(func=cmd_annotate_replay)

    prop = sub.add_parser("propagate", help="track an annotation through frames")
    prop.add_argument("--seq", required=True, help="directory of frame_%%06d.pgm")
    prop.add_argument("--annotation", required=True, help="annotation JSON")
    prop.add_argument("--out", required=True)
    prop.add_argument("--levels", type=int, default=3)
    prop.add_argument("--window", type=int, default=21)
    prop.set_defaults(func=cmd_propagate)

    export = sub.add_parser("export", help="write dataset files")
    export.add_argument("--format", choices=["yolo", "cvat", "json"], required=True)
    export.add_argument("--in", dest="input", required=True, help="dataset JSON")
    export.add_argument("--out", required=True)
    export.set_defaults(func=cmd_export)

    simulate = sub.add_parser("simulate", help="materialize a scenario")
    simulate.add_argument("--scenario", required=True, help="scenario JSON")
    simulate.add_argument("--out", required=True)
    simulate.set_defaults(func=cmd_simulate)

    serve = sub.add_parser("serve", help="run the HTTP session service")
    serve.add_argument("--port", type=int, default=8077)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--data-dir", default="./annorig-data")
    serve.add_argument("--bundle", help="calibration bundle JSON")
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AnnorigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
