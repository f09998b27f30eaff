#!/usr/bin/env python3
"""Run the bundled crisis scenario three times, export metrics and figures.

Reproduces the standard study layout: three runs with consecutive seeds,
per-run metric tables, an aggregate growth report, and the figure set for
the last run.  Everything is scripted-backend driven, so the whole study
is deterministic end to end.
"""

from __future__ import annotations

import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    out = ROOT / "out" / "squeeze-study"
    code = subprocess.call([
        sys.executable, "-m", "futuresim.cli", "run",
        str(ROOT / "scenarios" / "tsingshan.scenario.json"),
        "--repeat", "3", "--out", str(out),
    ])
    if code != 0:
        return code
    metrics_dir = out / "tsingshan-r2-metrics"
    return subprocess.call([
        sys.executable, str(ROOT / "scripts" / "plot_run.py"),
        str(metrics_dir), "--out", str(out / "figures"),
    ])


if __name__ == "__main__":
    raise SystemExit(main())
