"""Acceptance suite: one test per numbered criterion, run in order.

Each test prints a single [PASS]/[FAIL] line through the disabled
capture so the verdicts are visible in any pytest invocation.  Expected
values are either computed by an independent in-test oracle or pinned
closed forms; no expected value is copied from the implementation.
"""

import contextlib
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from bevkit.cli import main
from bevkit.depth import (
    DepthBinSpec,
    DepthDistribution,
    DepthMap,
    DepthStrategy,
    bin_index,
    fuse_depth,
)
from bevkit.geometry import (
    CameraModel,
    backproject_pixels,
    camera_extrinsic,
    project_points,
)
from bevkit.occupancy import (
    OccupancyGrid,
    VoxelSpec,
    default_sigma,
    gaussian_weights,
    occ_recon_loss,
)
from bevkit.objects import ObjectState
from bevkit.scene_io import load_grid, load_scene, save_grid, save_scene, scenes_equal
from bevkit.synth_scene import (
    SceneSpec,
    degrade_depth,
    generate_scene,
    render_true_depth,
    render_truth_features,
    scene_track,
)
from bevkit.temporal import misalignment
from bevkit.trajectory_distill import Trajectory, build_trajectory, traj_distill_loss
from bevkit.view_transform import (
    BEVGrid,
    BEVSpec,
    FeatureMap,
    lift_splat,
    lift_splat_oracle,
)


@contextlib.contextmanager
def _verdict(capsys, number, title):
    try:
        yield
    except Exception:
        with capsys.disabled():
            print(f"[FAIL] criterion {number}: {title}")
        raise
    with capsys.disabled():
        print(f"[PASS] criterion {number}: {title}")


# --------------------------------------------------------------------------
# 1. geometry round trip


def test_criterion_1_geometry_round_trip(capsys):
    with _verdict(capsys, 1, "pixel/depth round trip on 10k in-frustum points per camera"):
        cams = [
            CameraModel(120.0, 115.0, 47.5, 31.5, 96, 64,
                        camera_extrinsic((1.2, 0.3, 1.6), 0.4)),
            CameraModel(80.0, 80.0, 63.5, 35.5, 128, 72,
                        camera_extrinsic((0.8, -0.5, 1.4), -0.9)),
            CameraModel(200.0, 190.0, 31.5, 23.5, 64, 48,
                        camera_extrinsic((-0.2, 0.0, 2.1), 3.0)),
        ]
        rng = np.random.default_rng(101)
        t0 = time.monotonic()
        for cam in cams:
            u = rng.uniform(0.0, cam.width - 1.0, 10_000)
            v = rng.uniform(0.0, cam.height - 1.0, 10_000)
            d = rng.uniform(0.2, 120.0, 10_000)
            pts = backproject_pixels(cam, u, v, d)
            uv, depth, in_front = project_points(cam, pts)
            assert np.all(in_front)
            pix_err = max(np.abs(uv[:, 0] - u).max(), np.abs(uv[:, 1] - v).max())
            assert pix_err < 1e-6
            assert np.abs(depth - d).max() < 1e-9
        assert time.monotonic() - t0 < 1.0


# --------------------------------------------------------------------------
# 2. lift-splat oracle equivalence


def test_criterion_2_lift_splat_oracle_equivalence(capsys):
    with _verdict(capsys, 2, "100 randomized lift-splat instances match the naive oracle"):
        rng = np.random.default_rng(202)
        t0 = time.monotonic()
        # 97 modest instances plus 3 at the size caps.
        sizes = [(int(rng.integers(4, 21)), int(rng.integers(4, 21)),
                  int(rng.integers(4, 33)), int(rng.integers(8, 65)),
                  int(rng.integers(8, 65))) for _ in range(97)]
        sizes += [(64, 64, 32, 64, 64), (64, 48, 32, 64, 48), (48, 64, 24, 48, 64)]
        for h, w, d, nx, ny in sizes:
            fx = w * rng.uniform(0.5, 1.5)
            cam = CameraModel(fx, fx * rng.uniform(0.9, 1.1),
                              (w - 1) / 2.0 + rng.uniform(-1, 1),
                              (h - 1) / 2.0 + rng.uniform(-1, 1), w, h,
                              camera_extrinsic((rng.uniform(-1, 1), rng.uniform(-1, 1), 1.5),
                                               rng.uniform(-0.3, 0.3)))
            d_min = rng.uniform(0.5, 2.0)
            bins = DepthBinSpec(d_min, d_min + rng.uniform(5.0, 40.0), d)
            spec = BEVSpec(0.0, bins.d_max + 5.0, -bins.d_max, bins.d_max, nx, ny)
            c = int(rng.integers(1, 5))
            feat = FeatureMap(rng.uniform(0.1, 1.0, (h, w, c)))
            probs = rng.uniform(0.01, 1.0, (h, w, d))
            probs /= probs.sum(axis=2, keepdims=True)
            depth = DepthDistribution(probs)

            fast = lift_splat(feat, depth, cam, spec, bins).values
            slow = lift_splat_oracle(feat, depth, cam, spec, bins).values
            zero = slow == 0.0
            assert np.all(fast[zero] == 0.0)
            rel = np.abs(fast[~zero] - slow[~zero]) / np.abs(slow[~zero])
            assert rel.size == 0 or rel.max() < 1e-5
        assert time.monotonic() - t0 < 30.0


# --------------------------------------------------------------------------
# 3. trajectory distillation loss vs direct summation


def _manual_bilinear(spec, values, x, y):
    """Four-corner bilinear lookup written from scratch for independence."""
    gx = (x - spec.x_min) / spec.dx - 0.5
    gy = (y - spec.y_min) / spec.dy - 0.5
    x0, y0 = math.floor(gx), math.floor(gy)
    tx, ty = gx - x0, gy - y0
    out = np.zeros(values.shape[2])
    for ix, wx in ((x0, 1.0 - tx), (x0 + 1, tx)):
        for iy, wy in ((y0, 1.0 - ty), (y0 + 1, ty)):
            if 0 <= ix < spec.nx and 0 <= iy < spec.ny:
                out += wx * wy * np.asarray(values[ix, iy], dtype=np.float64)
    return out


def _loss_direct(apprentice, expert, trajectories, squared=True):
    total, n_valid = 0.0, 0
    spec = expert.spec
    for traj in trajectories:
        for p in traj.points:
            if not (spec.x_min <= p[0] < spec.x_max and spec.y_min <= p[1] < spec.y_max):
                continue
            e = _manual_bilinear(spec, expert.values, p[0], p[1])
            ne = float(np.linalg.norm(e))
            if ne <= 1e-12:
                continue
            a = _manual_bilinear(spec, apprentice.values, p[0], p[1])
            na = float(np.linalg.norm(a))
            av = a / na if na > 1e-12 else np.zeros_like(a)
            dist = float(np.linalg.norm(e / ne - av))
            total += dist * dist if squared else dist
            n_valid += 1
    return total / n_valid if n_valid else 0.0


def test_criterion_3_trajectory_loss_oracle(capsys):
    with _verdict(capsys, 3, "trajectory loss matches direct summation; zero on self; scale invariant"):
        spec = BEVSpec(-4.0, 4.0, -4.0, 4.0, 8, 8)
        ix, iy = np.meshgrid(np.arange(8.0), np.arange(8.0), indexing="ij")
        expert = BEVGrid(spec, np.stack(
            [0.5 + 0.1 * ix + 0.03 * iy, 1.0 + 0.2 * np.cos(ix), 0.7 + 0.05 * ix * iy],
            axis=2))
        apprentice = BEVGrid(spec, np.stack(
            [0.9 + 0.07 * iy, 0.6 + 0.11 * ix, 1.3 - 0.02 * ix * iy], axis=2))
        trajectories = [
            Trajectory(0, np.array([[-2.8, -1.3, 0.0], [-1.5, -0.4, 0.0],
                                    [0.2, 0.6, 0.0], [1.9, 1.7, 0.0]]),
                       (0.0, 0.5, 1.0, 1.5)),
            Trajectory(1, np.array([[3.1, -3.4, 0.0], [2.2, -2.0, 0.0],
                                    [9.0, 0.0, 0.0], [1.1, -0.2, 0.0]]),
                       (0.0, 0.5, 1.0, 1.5)),  # third point lies outside
        ]
        for squared in (True, False):
            got = traj_distill_loss(apprentice, expert, trajectories, squared=squared)
            want = _loss_direct(apprentice, expert, trajectories, squared=squared)
            assert abs(got - want) < 1e-6

        assert traj_distill_loss(expert, expert, trajectories) == 0.0

        base = traj_distill_loss(apprentice, expert, trajectories)
        for scale in (3.7, 0.25):
            scaled = BEVGrid(spec, apprentice.values * np.float32(scale))
            assert abs(traj_distill_loss(scaled, expert, trajectories) - base) < 1e-6


# --------------------------------------------------------------------------
# 4. Gaussian weights and occupancy reconstruction loss


def test_criterion_4_gaussian_and_occupancy_loss(capsys):
    with _verdict(capsys, 4, "Gaussian e^-1/2 at sigma; weighted occupancy loss oracle; symmetry"):
        size = (3.0, 4.0, 12.0)
        sigma = default_sigma(size)
        center = np.array([10.0, 2.0, 1.0])
        obj = ObjectState(0, 0.0, center, size, np.zeros(3))
        # One voxel whose center sits exactly sigma away from the object.
        probe = VoxelSpec(center[0] + sigma - 0.5, center[0] + sigma + 0.5,
                          center[1] - 0.5, center[1] + 0.5,
                          center[2] - 0.5, center[2] + 0.5, 1, 1, 1)
        w = gaussian_weights([obj], probe).values[0, 0, 0]
        assert abs(w - math.exp(-0.5)) <= 1e-9

        spec = VoxelSpec(0.0, 16.0, -8.0, 8.0, 0.0, 4.0, 16, 16, 4)
        rng = np.random.default_rng(404)
        expert = OccupancyGrid(spec, rng.uniform(0.0, 1.0, (16, 16, 4)))
        apprentice = OccupancyGrid(spec, rng.uniform(0.0, 1.0, (16, 16, 4)))
        objs = [
            ObjectState(0, 0.0, (5.0, -2.0, 1.0), (4.0, 2.0, 1.5), np.zeros(3)),
            ObjectState(1, 0.0, (11.0, 3.0, 0.8), (2.0, 2.0, 2.0), np.zeros(3)),
        ]
        weights = gaussian_weights(objs, spec)

        total = 0.0
        for i in range(16):
            for j in range(16):
                for k in range(4):
                    wv = float(weights.values[i, j, k])
                    total += abs(wv * float(expert.values[i, j, k])
                                 - wv * float(apprentice.values[i, j, k]))
        want = total / (16 * 16 * 4)
        got = occ_recon_loss(expert, apprentice, weights)
        assert abs(got - want) < 1e-9
        assert occ_recon_loss(apprentice, expert, weights) == got


# --------------------------------------------------------------------------
# 5. motion misalignment closed forms


def test_criterion_5_misalignment_closed_forms(capsys):
    with _verdict(capsys, 5, "|e_i| = |v| i dt and |e_fusion| = |v| dt (N+1)/2, growing in N"):
        velocities = ((1.5, 0.8, 0.0), (-0.7, 1.1, 0.0), (2.0, -0.5, 0.0))
        spec = SceneSpec(n_frames=10, n_objects=3, object_velocities=velocities,
                         ego_speed=2.0, ego_yaw_rate=0.15,
                         lidar_azimuth_steps=12, lidar_elevation_steps=2,
                         image_width=16, image_height=12, focal=10.0)
        scene = generate_scene(spec, seed=50)
        track = scene_track(scene)
        dt = spec.frame_dt
        windows = (1, 2, 4, 8)
        for oid, v in enumerate(velocities):
            speed = float(np.linalg.norm(v))
            states = [s for f in scene.frames for s in f.objects if s.object_id == oid]
            fusion_norms = []
            for n in windows:
                report = misalignment(track, states, n)
                per_frame = np.linalg.norm(report.errors, axis=1)
                for i, norm in enumerate(per_frame, start=1):
                    assert abs(norm - speed * i * dt) < 1e-6
                fused = float(np.linalg.norm(report.e_fusion))
                assert abs(fused - speed * dt * (n + 1) / 2.0) < 1e-6
                fusion_norms.append(fused)
            assert all(b > a for a, b in zip(fusion_norms, fusion_norms[1:]))


# --------------------------------------------------------------------------
# 6. depth fusion strategy agreement


def test_criterion_6_fusion_strategy_agreement(capsys):
    with _verdict(capsys, 6, "fusion == lidar on covered pixels; weighted limits match"):
        spec = SceneSpec(n_frames=3, n_objects=3, lidar_azimuth_steps=120,
                         lidar_elevation_steps=8, image_width=48, image_height=32,
                         focal=30.0)
        scene = generate_scene(spec, seed=606)
        bins = DepthBinSpec(1.0, 60.0, 59)
        cam = scene.rig[0]
        from bevkit.depth import render_lidar_depth
        from bevkit.geometry import RigidTransform

        lidar = render_lidar_depth(cam, [(scene.frames[-1].lidar, RigidTransform.identity())])
        predicted = degrade_depth(render_true_depth(scene, 2, 0), 2, 0.1, bins, seed=9)

        idx, in_range = bin_index(lidar.values, bins)
        covered = lidar.coverage_mask() & in_range
        assert covered.any() and not covered.all()

        lidar_dist = fuse_depth(lidar, predicted, DepthStrategy.LIDAR, spec=bins)
        fusion = fuse_depth(lidar, predicted, DepthStrategy.FUSION, spec=bins)
        assert np.array_equal(fusion.values[covered], lidar_dist.values[covered])

        w1 = fuse_depth(lidar, predicted, DepthStrategy.WEIGHTED, w=1.0, spec=bins)
        assert np.array_equal(w1.values, fusion.values)

        w0 = fuse_depth(lidar, predicted, DepthStrategy.WEIGHTED, w=0.0, spec=bins)
        assert np.abs(w0.values - predicted.values).max() < 1e-12


# --------------------------------------------------------------------------
# 7. loss decreases as the apprentice depth sharpens


def test_criterion_7_loss_decreases_with_sharper_depth(capsys):
    with _verdict(capsys, 7, "trajectory loss strictly decreasing over blur 4, 2, 1, 0"):
        spec = SceneSpec(n_frames=5, n_objects=3, lidar_azimuth_steps=12,
                         lidar_elevation_steps=2, image_width=48, image_height=32,
                         focal=30.0)
        scene = generate_scene(spec, seed=0)
        bins = DepthBinSpec(1.0, 33.0, 64)
        bev = BEVSpec(-8.0, 40.0, -24.0, 24.0, 64, 64)
        track = scene_track(scene)
        frame = scene.n_frames - 1

        def role_bev(blur):
            accum = np.zeros((bev.nx, bev.ny, 8))
            for ci in range(len(scene.rig)):
                feat = render_truth_features(scene, frame, ci, 8)
                dist = degrade_depth(render_true_depth(scene, frame, ci),
                                     blur, 0.0, bins, seed=1)
                accum += lift_splat(feat, dist, scene.rig[ci], bev, bins
                                    ).values.astype(np.float64)
            return BEVGrid(bev, accum.astype(np.float32), scene.frames[frame].timestamp)

        expert = role_bev(0)
        trajectories = []
        for oid in range(3):
            states = [s for f in scene.frames for s in f.objects if s.object_id == oid]
            trajectories.append(build_trajectory(states, track, track.timestamps[-1], 5))

        losses = [traj_distill_loss(role_bev(b), expert, trajectories) for b in (4, 2, 1, 0)]
        assert all(b < a for a, b in zip(losses, losses[1:])), losses
        assert losses[-1] < 1e-6


# --------------------------------------------------------------------------
# 8. byte-identical CLI reruns and bit-exact persistence


def _snapshot(root):
    root = Path(root)
    return {str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


def _rerun_identical(argv, out_dir):
    assert main(argv) == 0
    first = _snapshot(out_dir)
    assert main(argv) == 0
    assert _snapshot(out_dir) == first


def test_criterion_8_byte_identical_reruns_and_roundtrips(capsys, tmp_path):
    with _verdict(capsys, 8, "CLI reruns byte-identical; save/load round trips bit-exact"):
        scene_dir = str(tmp_path / "scene")
        scene_flags = ["scene-gen", "--seed", "11", "--n-frames", "5",
                       "--n-objects", "2", "--lidar-azimuth-steps", "60",
                       "--lidar-elevation-steps", "4", "--image-width", "24",
                       "--image-height", "16", "--focal", "20", "--out", scene_dir]
        _rerun_identical(scene_flags, scene_dir)

        pipe_flags = ["--scene", scene_dir, "--bins", "1,40,39",
                      "--bev=-8,40,-24,24,32,32",
                      "--voxels=-8,40,-24,24,-0.5,3.5,16,16,4", "--channels", "4"]
        expert_dir = str(tmp_path / "expert")
        apprentice_dir = str(tmp_path / "apprentice")
        _rerun_identical(["pipeline", "--role", "expert", *pipe_flags,
                          "--out", expert_dir], expert_dir)
        _rerun_identical(["pipeline", "--role", "apprentice", *pipe_flags,
                          "--out", apprentice_dir], apprentice_dir)

        report = tmp_path / "report.json"
        _rerun_identical(["distill", "--scene", scene_dir, "--expert", expert_dir,
                          "--apprentice", apprentice_dir, "--traj-len", "4",
                          "--out", str(report)], report.parent)
        misalign_dir = str(tmp_path / "misalign")
        _rerun_identical(["misalign", "--scene", scene_dir, "--window", "3",
                          "--out", misalign_dir], misalign_dir)

        # Scene round trip: load, save elsewhere, byte-compare the copies.
        scene = load_scene(scene_dir)
        copy_dir = tmp_path / "scene_copy"
        save_scene(scene, copy_dir)
        assert scenes_equal(load_scene(copy_dir), scene)
        assert _snapshot(copy_dir) == _snapshot(scene_dir)

        # Grid round trips: every artifact kind, bit-exact values and bytes.
        rng = np.random.default_rng(808)
        probs = rng.uniform(0.1, 1.0, (4, 6, 5))
        probs /= probs.sum(axis=2, keepdims=True)
        samples = [
            load_grid(Path(expert_dir) / "bev.grid"),
            load_grid(Path(expert_dir) / "occupancy.grid"),
            DepthDistribution(probs),
            DepthMap(np.where(rng.uniform(size=(4, 6)) < 0.7, rng.uniform(1, 50, (4, 6)), 0.0)),
        ]
        for i, grid in enumerate(samples):
            p1 = tmp_path / f"grid_{i}_a.grid"
            p2 = tmp_path / f"grid_{i}_b.grid"
            save_grid(grid, p1)
            loaded = load_grid(p1)
            assert type(loaded) is type(grid)
            assert np.array_equal(loaded.values, grid.values)
            save_grid(loaded, p2)
            assert p1.read_bytes() == p2.read_bytes()


# --------------------------------------------------------------------------
# 9. end-to-end smoke on the default scene


def test_criterion_9_end_to_end_smoke(capsys, tmp_path):
    with _verdict(capsys, 9, "scene-gen -> pipelines -> distill on the default scene in < 60 s"):
        t0 = time.monotonic()
        scene_dir = str(tmp_path / "scene")
        expert_dir = str(tmp_path / "expert")
        apprentice_dir = str(tmp_path / "apprentice")
        report_path = tmp_path / "report.json"

        assert main(["scene-gen", "--seed", "7", "--out", scene_dir]) == 0
        scene = load_scene(scene_dir)
        assert scene.n_frames == 8
        assert len(scene.frames[0].objects) == 3
        assert len(scene.rig) == 2

        assert main(["pipeline", "--role", "expert", "--scene", scene_dir,
                     "--out", expert_dir]) == 0
        assert main(["pipeline", "--role", "apprentice", "--scene", scene_dir,
                     "--out", apprentice_dir]) == 0
        assert main(["distill", "--scene", scene_dir, "--expert", expert_dir,
                     "--apprentice", apprentice_dir, "--out", str(report_path)]) == 0

        report = json.loads(report_path.read_text())
        losses = report["losses"]
        for key in ("l_apprentice", "l_td", "l_or", "l_total"):
            assert math.isfinite(losses[key])
        assert losses["l_td"] > 0.0
        assert report["n_trajectories"] == 3
        assert time.monotonic() - t0 < 60.0
