"""Soft 3D occupancy from depth distributions, and its weighted loss.

Back-projects per-pixel depth probability into voxels for exact and
blurred depth, builds the Gaussian weight field around the scene's
objects, and shows how the weighting focuses the reconstruction loss.

Writes demos/out/occupancy_slice.png when matplotlib is importable.
"""

from pathlib import Path

import numpy as np

from bevkit.depth import DepthBinSpec
from bevkit.occupancy import VoxelSpec, build_occupancy, gaussian_weights, occ_recon_loss
from bevkit.synth_scene import SceneSpec, degrade_depth, generate_scene, render_true_depth

scene = generate_scene(SceneSpec(n_frames=2, n_objects=3, lidar_azimuth_steps=12,
                                 lidar_elevation_steps=2, image_width=48,
                                 image_height=32, focal=30.0), seed=21)
bins = DepthBinSpec(1.0, 33.0, 32)
voxels = VoxelSpec(-8.0, 40.0, -24.0, 24.0, -0.5, 3.5, 48, 48, 8)
frame = 1


def occupancy_for(blur):
    depths = [
        (degrade_depth(render_true_depth(scene, frame, ci), blur, 0.0, bins, seed=2), cam)
        for ci, cam in enumerate(scene.rig)
    ]
    return build_occupancy(depths, voxels, bins)


expert = occupancy_for(0)
apprentice = occupancy_for(3)
print(f"occupied volume (sum of soft occupancy): expert {expert.values.sum():.1f}, "
      f"blurred apprentice {apprentice.values.sum():.1f}")

weights = gaussian_weights(list(scene.frames[frame].objects), voxels)
print(f"Gaussian weights peak at {weights.values.max():.4f} "
      f"({(weights.values > 0.5).sum()} voxels above 0.5)")

uniform = occ_recon_loss(expert, apprentice,
                         type(weights)(voxels, np.ones((48, 48, 8))))
focused = occ_recon_loss(expert, apprentice, weights)
print(f"reconstruction loss, uniform weights: {uniform:.6f}")
print(f"reconstruction loss, object-centered weights: {focused:.6f}")
print("the weighted loss ignores empty space and scores the objects.")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("\nmatplotlib not installed; skipping the picture")
else:
    out = Path(__file__).parent / "out"
    out.mkdir(exist_ok=True)
    k = 2  # slice just above the ground
    fig, axes = plt.subplots(1, 3, figsize=(12, 4))
    for ax, (title, grid) in zip(
        axes,
        [("expert occupancy", expert.values), ("apprentice occupancy", apprentice.values),
         ("Gaussian weights", weights.values)],
    ):
        ax.imshow(grid[:, :, k].T, origin="lower",
                  extent=(voxels.x_min, voxels.x_max, voxels.y_min, voxels.y_max))
        ax.set_title(title)
        ax.set_xlabel("x (m)")
    axes[0].set_ylabel("y (m)")
    plt.tight_layout()
    plt.savefig(out / "occupancy_slice.png", dpi=120)
    print(f"\nwrote {out / 'occupancy_slice.png'}")
