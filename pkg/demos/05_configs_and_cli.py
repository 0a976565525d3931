"""Write a scenario file, run it through the command line and read the CSVs back.

The same pipeline is available from a shell:

    flatform simulate --config my.toml --out runs/my --strategy unified
    flatform weights-demo --out runs/weights
"""
import json
import tempfile
from pathlib import Path

from flatform import cli, config, io

SCENARIO = """\
[scenario]
name = "triangle"
t_f = 6.0
dt = 0.005
strategy = "unified"

[formation]
n_uavs = 3
edges = [[1, 2], [2, 3], [3, 1]]
mu = [1.0, 1.0, 1.0]
omega = [2.0, 2.0, 2.0]
offsets = [[-6.0, 0.0, 0.0], [3.0, -5.2, 0.0], [3.0, 5.2, 0.0]]

[safety]
r = 1.0

[[uav]]
position = [0.0, 0.0, 2.0]

[[uav]]
position = [0.0, 4.0, 2.0]

[[uav]]
position = [4.0, 2.0, 2.0]
velocity = [-1.0, 0.0, 0.0]
"""

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    path = tmp / "triangle.toml"
    path.write_text(SCENARIO)
    cfg = config.load(path)
    print(f"parsed {cfg.name}: {cfg.n_uavs} UAVs, R defaults to {cfg.safety.R}")

    code = cli.main(["simulate", "--config", str(path), "--out", str(tmp / "run")])
    print(f"simulate exit code {code}")
    manifest = json.loads((tmp / "run" / "manifest.json").read_text())
    print("files:", ", ".join(manifest["files"]))
    header, rows = io.read_csv(tmp / "run" / "track.csv")
    print(f"track.csv: {len(rows)} rows, columns {header[:6]} ...")
    metrics = json.loads((tmp / "run" / "metrics.json").read_text())
    print(f"min distance {metrics['min_distance']:.3f} m, "
          f"terminal errors {metrics['terminal_formation_error']}")

    # Configuration mistakes come back with the key and line that caused them.
    bad = tmp / "bad.toml"
    bad.write_text(SCENARIO.replace("r = 1.0", "r = 1.0\nradius = 2.0"))
    code = cli.main(["plan", "--config", str(bad), "--out", str(tmp / "bad")])
    print(f"bad config exit code {code}")
