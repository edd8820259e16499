#!/usr/bin/env python3
"""End-to-end demo on the simulated backend: generate, run, analyze, report.

    python scripts/run_sim_demo.py --out /tmp/demo [--seed 42] [--crash]

Uses the bundled test fixtures, so no Android SDK is needed.
"""

import argparse
import sys
from pathlib import Path

from ctxmonkey.cli import main as cli

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="ctxmonkey-demo")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--crash", action="store_true", help="use the script that crashes after the 3rd event")
    args = p.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    badging = str(FIXTURES / ("badging_offline.txt" if args.crash else "badging_net.txt"))
    script = str(FIXTURES / ("sim_crash.json" if args.crash else "sim_quiet.json"))
    csv_path = out / "scenario.csv"
    run_dir = out / "run"

    steps = [
        ["generate", "--badging", badging, "--seed", str(args.seed), "--out", str(csv_path)],
        ["run", "--badging", badging, "--scenario", str(csv_path), "--backend", "sim", "--sim-script", script, "--out", str(run_dir)],
        ["analyze", "--run-dir", str(run_dir)],
        ["report", "--run-dir", str(run_dir), "--format", "html"],
        ["report", "--run-dir", str(run_dir)],
    ]
    for step in steps:
        print("$ ctxmonkey " + " ".join(step), flush=True)
        rc = cli(step)
        # 3 means the run finished and a crash was detected; keep going
        if rc not in (0, 3):
            return rc
    return 0


if __name__ == "__main__":
    sys.exit(main())
