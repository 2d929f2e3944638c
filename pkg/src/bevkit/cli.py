"""Command-line interface.

Subcommands::

    bevkit scene-gen   generate a synthetic scene and save it
    bevkit pipeline    run the expert or apprentice pipeline on a scene
    bevkit distill     compute distillation losses between two pipeline runs
    bevkit misalign    report ego-only warping error versus window length

Exit codes: 0 success, 2 usage error, 3 data error (missing or corrupt
files, mismatched grids), 4 numeric error (non-finite values).

Every report embeds the fully resolved configuration, so outputs are
self-describing; reruns with the same flags produce byte-identical
files.  When --out is omitted, outputs land under the directory named
by the BEVKIT_OUT_ROOT environment variable (default ".").  A --config
JSON file may supply any flag's value by its long name with underscores;
explicit flags win over the file, the file wins over defaults.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from .depth import DepthBinSpec, DepthStrategy
from .errors import BevkitError, NonFiniteInput
from .loss import total_loss
from .occupancy import VoxelSpec, gaussian_weights, occ_recon_loss
from .pipeline import PipelineConfig, run_pipeline
from .scene_io import load_grid, load_scene, save_grid, save_scene
from .synth_scene import SceneSpec, generate_scene, scene_track
from .temporal import misalignment
from .trajectory_distill import build_trajectory, traj_distill_loss
from .view_transform import BEVSpec


def _out_path(arg: str | None, default_name: str) -> Path:
    if arg is not None:
        return Path(arg)
    return Path(os.environ.get("BEVKIT_OUT_ROOT", ".")) / default_name


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise BevkitError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise BevkitError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise BevkitError(f"config file {path} must hold a JSON object")
    return data


def _resolve(args: argparse.Namespace, file_cfg: dict, defaults: dict) -> dict:
    """Merge defaults, config file, and explicit flags (strongest last)."""
    resolved = dict(defaults)
    for key, value in file_cfg.items():
        if key not in defaults:
            raise BevkitError(f"unknown config key {key!r}")
        resolved[key] = value
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            resolved[key] = value
    return resolved


def _floats(text: str, n: int, what: str) -> tuple[float, ...]:
    parts = [p for p in str(text).split(",") if p.strip()]
    if len(parts) != n:
        raise BevkitError(f"{what} needs {n} comma-separated values, got {len(parts)}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise BevkitError(f"{what}: {exc}") from exc


def _parse_bins(text: str) -> DepthBinSpec:
    d_min, d_max, n_bins = _floats(text, 3, "--bins")
    return DepthBinSpec(d_min, d_max, int(n_bins))


def _parse_bev(text: str) -> BEVSpec:
    v = _floats(text, 6, "--bev")
    return BEVSpec(v[0], v[1], v[2], v[3], int(v[4]), int(v[5]))


def _parse_voxels(text: str) -> VoxelSpec:
    v = _floats(text, 9, "--voxels")
    return VoxelSpec(v[0], v[1], v[2], v[3], v[4], v[5], int(v[6]), int(v[7]), int(v[8]))


def _write_json(path: Path, data: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


# scene-gen


_SCENE_FLAG_HELP = {
    "n_frames": "number of frames",
    "frame_dt": "seconds between frames",
    "n_objects": "number of boxes",
    "ego_speed": "ego speed in m/s",
    "ego_yaw_rate": "ego turn rate in rad/s (0 = straight)",
    "lidar_azimuth_steps": "LiDAR rays per elevation ring",
    "lidar_elevation_steps": "LiDAR elevation rings",
    "image_width": "camera image width in pixels",
    "image_height": "camera image height in pixels",
    "focal": "camera focal length in pixels",
    "depth_blur_bins": "triangular blur half-width for predicted depth",
    "depth_dropout": "fraction of predicted-depth pixels dropped to uniform",
}


def cmd_scene_gen(args: argparse.Namespace) -> int:
    defaults = {f.name: getattr(SceneSpec(), f.name) for f in fields(SceneSpec)}
    resolved = _resolve(args, _load_config_file(args.config), defaults)
    if args.speed_range is not None:
        resolved["object_speed_range"] = _floats(args.speed_range, 2, "--speed-range")
    if args.cam_yaws is not None:
        parts = [p for p in args.cam_yaws.split(",") if p.strip()]
        resolved["cam_yaws"] = tuple(float(p) for p in parts)
    if args.velocities is not None:
        resolved["object_velocities"] = tuple(
            _floats(group, 3, "--velocities") for group in args.velocities.split(";")
        )
    for key in ("object_speed_range", "spawn_x", "spawn_y", "lidar_elevation_range", "cam_yaws"):
        resolved[key] = tuple(resolved[key])
    if resolved["object_velocities"] is not None:
        resolved["object_velocities"] = tuple(tuple(v) for v in resolved["object_velocities"])
    resolved["size_ranges"] = tuple(tuple(r) for r in resolved["size_ranges"])

    spec = SceneSpec(**resolved)
    scene = generate_scene(spec, args.seed)
    out = _out_path(args.out, "scene")
    manifest = save_scene(scene, out)
    print(manifest.path / "manifest.json")
    return 0


# pipeline


def cmd_pipeline(args: argparse.Namespace) -> int:
    defaults = {
        "depth_strategy": "fusion" if args.role == "expert" else "predicted",
        "weighted_w": 0.5,
        "bins": "1,60,59",
        "bev": "-8,40,-24,24,96,96",
        "voxels": "-8,40,-24,24,-0.5,3.5,96,96,8",
        "channels": 8,
        "frames": None,
    }
    resolved = _resolve(args, _load_config_file(args.config), defaults)
    if args.role == "apprentice" and resolved["depth_strategy"] != "predicted":
        print("note: apprentice role always uses predicted depth", file=sys.stderr)
        resolved["depth_strategy"] = "predicted"

    scene = load_scene(args.scene)
    cfg = PipelineConfig(
        role=args.role,
        strategy=DepthStrategy(resolved["depth_strategy"]),
        weighted_w=float(resolved["weighted_w"]),
        bins=_parse_bins(resolved["bins"]),
        bev=_parse_bev(resolved["bev"]),
        voxels=_parse_voxels(resolved["voxels"]),
        channels=int(resolved["channels"]),
        window=None if resolved["frames"] is None else int(resolved["frames"]),
    )
    result = run_pipeline(scene, cfg)

    out = _out_path(args.out, f"pipeline_{args.role}")
    out.mkdir(parents=True, exist_ok=True)
    save_grid(result.bev, out / "bev.grid")
    save_grid(result.occupancy, out / "occupancy.grid")
    _write_json(
        out / "run_config.json",
        {"command": "pipeline", "scene": str(args.scene), "role": args.role, **{
            k: (v if not isinstance(v, tuple) else list(v)) for k, v in resolved.items()
        }},
    )
    print(out)
    return 0


# distill


def cmd_distill(args: argparse.Namespace) -> int:
    defaults = {"traj_len": 5, "lambda1": 1.0, "lambda2": 1.0, "l_a": 0.0}
    resolved = _resolve(args, _load_config_file(args.config), defaults)

    scene = load_scene(args.scene)
    expert_bev = load_grid(Path(args.expert) / "bev.grid")
    apprentice_bev = load_grid(Path(args.apprentice) / "bev.grid")
    expert_occ = load_grid(Path(args.expert) / "occupancy.grid")
    apprentice_occ = load_grid(Path(args.apprentice) / "occupancy.grid")

    track = scene_track(scene)
    t_0 = track.timestamps[-1]
    n_points = int(resolved["traj_len"])
    trajectories = []
    for oid in sorted({s.object_id for f in scene.frames for s in f.objects}):
        states = [s for f in scene.frames for s in f.objects if s.object_id == oid]
        trajectories.append(build_trajectory(states, track, t_0, n_points))

    l_td = traj_distill_loss(apprentice_bev, expert_bev, trajectories)
    weights = gaussian_weights(list(scene.frames[-1].objects), expert_occ.spec)
    l_or = occ_recon_loss(expert_occ, apprentice_occ, weights)
    report = total_loss(
        float(resolved["l_a"]), l_td, l_or,
        float(resolved["lambda1"]), float(resolved["lambda2"]),
    )

    out = _out_path(args.out, "distill_report.json")
    _write_json(
        out,
        {
            "command": "distill",
            "scene": str(args.scene),
            "expert": str(args.expert),
            "apprentice": str(args.apprentice),
            "traj_len": n_points,
            "n_trajectories": len(trajectories),
            "losses": report.to_dict(),
        },
    )
    print(out)
    return 0


# misalign


def cmd_misalign(args: argparse.Namespace) -> int:
    scene = load_scene(args.scene)
    track = scene_track(scene)
    window = args.window
    if window >= len(track):
        window = len(track) - 1

    reports = []
    rows = []
    for oid in sorted({s.object_id for f in scene.frames for s in f.objects}):
        states = [s for f in scene.frames for s in f.objects if s.object_id == oid]
        rep = misalignment(track, states, window)
        reports.append(
            {
                "object_id": rep.object_id,
                "temporal_length": rep.temporal_length,
                "errors": [[float(x) for x in row] for row in rep.errors],
                "error_norms": [float(np.linalg.norm(row)) for row in rep.errors],
                "e_fusion": [float(x) for x in rep.e_fusion],
                "e_fusion_norm": float(np.linalg.norm(rep.e_fusion)),
            }
        )
        for n in range(1, window + 1):
            rep_n = misalignment(track, states, n)
            rows.append((n, oid, float(np.linalg.norm(rep_n.e_fusion))))

    out = _out_path(args.out, "misalign")
    out.mkdir(parents=True, exist_ok=True)
    _write_json(
        out / "misalign.json",
        {"command": "misalign", "scene": str(args.scene), "window": window, "objects": reports},
    )
    with open(out / "e_fusion_vs_window.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["window", "object_id", "e_fusion_norm"])
        for row in sorted(rows):
            writer.writerow([row[0], row[1], repr(row[2])])
    print(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bevkit",
        description="Desk-scale BEV perception pipeline and synthetic scenes.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scene-gen", help="generate and save a synthetic scene")
    p.add_argument("--seed", type=int, default=0, help="scene seed (default 0)")
    p.add_argument("--out", help="output directory (default $BEVKIT_OUT_ROOT/scene)")
    p.add_argument("--config", help="JSON file supplying any scene spec field")
    for name, help_text in _SCENE_FLAG_HELP.items():
        flag = "--" + name.replace("_", "-")
        kind = float if name in ("frame_dt", "ego_speed", "ego_yaw_rate", "focal",
                                 "depth_dropout") else int
        p.add_argument(flag, dest=name, type=kind, help=help_text)
    p.add_argument("--speed-range", help="object speed range, m/s: LO,HI")
    p.add_argument("--velocities", help="explicit velocities: VX,VY,VZ;VX,VY,VZ;...")
    p.add_argument("--cam-yaws", help="camera headings in radians: A,B,...")
    p.set_defaults(func=cmd_scene_gen)

    p = sub.add_parser("pipeline", help="run the expert or apprentice pipeline")
    p.add_argument("--scene", required=True, help="scene directory from scene-gen")
    p.add_argument("--role", required=True, choices=["expert", "apprentice"])
    p.add_argument("--depth-strategy", dest="depth_strategy",
                   choices=[s.value for s in DepthStrategy],
                   help="expert depth handling (default fusion)")
    p.add_argument("--weighted-w", dest="weighted_w", type=float,
                   help="LiDAR weight for the weighted strategy (default 0.5)")
    p.add_argument("--bins", help="depth bins: D_MIN,D_MAX,N (default 1,60,59)")
    p.add_argument("--bev", help="BEV grid: X_MIN,X_MAX,Y_MIN,Y_MAX,NX,NY")
    p.add_argument("--voxels", help="voxel grid: X_MIN,X_MAX,Y_MIN,Y_MAX,Z_MIN,Z_MAX,NX,NY,NZ")
    p.add_argument("--channels", type=int, help="feature channels (default 8)")
    p.add_argument("--frames", type=int, help="temporal window including current (default all)")
    p.add_argument("--out", help="output directory (default $BEVKIT_OUT_ROOT/pipeline_<role>)")
    p.add_argument("--config", help="JSON file supplying any of the above")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("distill", help="distillation losses between two pipeline runs")
    p.add_argument("--scene", required=True)
    p.add_argument("--expert", required=True, help="expert pipeline output directory")
    p.add_argument("--apprentice", required=True, help="apprentice pipeline output directory")
    p.add_argument("--traj-len", dest="traj_len", type=int,
                   help="trajectory points per object, current frame included (default 5)")
    p.add_argument("--lambda1", type=float, help="trajectory loss weight (default 1)")
    p.add_argument("--lambda2", type=float, help="occupancy loss weight (default 1)")
    p.add_argument("--l-a", dest="l_a", type=float,
                   help="externally supplied apprentice task loss (default 0)")
    p.add_argument("--out", help="report path (default $BEVKIT_OUT_ROOT/distill_report.json)")
    p.add_argument("--config", help="JSON file supplying any of the above")
    p.set_defaults(func=cmd_distill)

    p = sub.add_parser("misalign", help="ego-only warping error for each object")
    p.add_argument("--scene", required=True)
    p.add_argument("--window", type=int, default=8,
                   help="largest temporal window, frames (default 8, clipped to scene)")
    p.add_argument("--out", help="output directory (default $BEVKIT_OUT_ROOT/misalign)")
    p.set_defaults(func=cmd_misalign)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except NonFiniteInput as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    except (BevkitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
