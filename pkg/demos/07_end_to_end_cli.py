"""The whole pipeline through the command line interface.

Drives bevkit.cli.main directly: generate a scene, run the expert and
apprentice pipelines, compute the distillation report, and print the
misalignment table.  Everything lands in a temporary directory.
"""

import json
import tempfile
from pathlib import Path

from bevkit.cli import main

with tempfile.TemporaryDirectory() as tmp:
    root = Path(tmp)
    scene = str(root / "scene")
    expert = str(root / "expert")
    apprentice = str(root / "apprentice")
    report = root / "report.json"

    steps = [
        ["scene-gen", "--seed", "7", "--n-frames", "6", "--n-objects", "3",
         "--lidar-azimuth-steps", "120", "--lidar-elevation-steps", "6",
         "--image-width", "48", "--image-height", "32", "--focal", "30",
         "--out", scene],
        # note the --flag=value form: comma lists starting with a minus
        # sign do not survive argparse as a separate token
        ["pipeline", "--role", "expert", "--scene", scene, "--bins", "1,40,39",
         "--bev=-8,40,-24,24,48,48", "--voxels=-8,40,-24,24,-0.5,3.5,24,24,4",
         "--out", expert],
        ["pipeline", "--role", "apprentice", "--scene", scene, "--bins", "1,40,39",
         "--bev=-8,40,-24,24,48,48", "--voxels=-8,40,-24,24,-0.5,3.5,24,24,4",
         "--out", apprentice],
        ["distill", "--scene", scene, "--expert", expert,
         "--apprentice", apprentice, "--out", str(report)],
        ["misalign", "--scene", scene, "--window", "4",
         "--out", str(root / "misalign")],
    ]
    for argv in steps:
        print(f"$ bevkit {' '.join(argv)}")
        code = main(argv)
        assert code == 0, f"exit {code}"
        print()

    losses = json.loads(report.read_text())["losses"]
    print("distillation report:")
    for key in ("l_apprentice", "l_td", "l_or", "l_total"):
        print(f"  {key:<12} {losses[key]:.6f}")

    print("\nmisalignment fusion error by window (first object):")
    csv_path = root / "misalign" / "e_fusion_vs_window.csv"
    for line in csv_path.read_text().splitlines():
        if line.startswith("window") or line.split(",")[1] == "0":
            print(f"  {line}")
