"""End-to-end tour: simulate a small office, export its logs, train per-zone
champions with nested cross-validation, and ask for a recommendation.

Uses a compact hyperparameter grid so the whole script runs in well under a
minute; swap `grid=None` into the RunConfig to sweep the full default grids.
"""

import json
import tempfile
from pathlib import Path

from zonecomfort.cli import RunConfig, main, run_pipeline

root = Path(tempfile.mkdtemp(prefix="zonecomfort-demo-"))
print("working in", root)

main(["simulate", "--occupants", "16", "--days", "28", "--seed", "11", "--out", str(root / "service")])
main(["export", "--data-dir", str(root / "service"), "--out", str(root / "dataset")])

config = RunConfig(
    data_dir=str(root / "dataset"),
    run_dir=str(root / "run"),
    seed=11,
    min_samples=40,
    grid={
        "svr": [
            {"kernel": "rbf", "C": 100.0, "gamma": 0.05},
            {"kernel": "linear", "C": 10.0},
        ],
        "rf": [
            {"n_estimators": 50, "max_depth": 7},
            {"n_estimators": 100, "max_depth": 9},
        ],
    },
)
outcome = run_pipeline(config)

print("\nkept zones:", sorted(outcome["matrices"]), "excluded:", outcome["excluded_zones"])
print("\nchampions:")
for zone, (family, params) in sorted(outcome["champions"].items()):
    print(f"  zone {zone}: {family} ({params.describe()})")

print("\naverage outer-fold metrics per zone:")
for report in outcome["reports"]:
    for family in ("svr", "rf", "mean"):
        m = report.average(family)
        print(
            f"  zone {report.zone} {family:>4}: COD {m.cod:6.3f}  NRMSE {m.nrmse:6.3f}  "
            f"CC {m.cc:6.3f}  GD {m.gd:6.3f}"
        )

last_weather = json.loads((root / "dataset" / "weather.jsonl").read_text().splitlines()[-1])
main(
    [
        "recommend",
        "--data-dir",
        str(root / "dataset"),
        "--models",
        str(root / "run" / "models"),
        "--user",
        "u03",
        "--now",
        last_weather["timestamp"],
    ]
)
