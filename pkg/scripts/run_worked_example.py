#!/usr/bin/env python3
"""Run the shipped worked example end to end: synthesize the gain block,
simulate the closed loop, re-verify the trace invariants, and emit plot data.

Usage: python3 scripts/run_worked_example.py [out_dir]
"""

import sys
from pathlib import Path

from etncs.cli import main

ROOT = Path(__file__).resolve().parent.parent
CONFIG = ROOT / "configs" / "worked_example.cfg"


def run(out_dir: str) -> int:
    common = ["--config", str(CONFIG), "--out", out_dir]
    for step in ("design", "simulate", "verify", "report"):
        print(f"\n=== {step} ===")
        code = main([step, *common])
        if code != 0:
            print(f"{step} exited with code {code}")
            return code
    metrics = (Path(out_dir) / "metrics.kv").read_text()
    print("\n=== headline metrics ===")
    for line in metrics.splitlines():
        if line.split(" =")[0] in ("l2_gain_emp", "sup_x_p", "events_p", "events_c",
                                   "drops_p", "drops_c", "min_gap_p", "min_gap_c",
                                   "within_l2_bound", "budget_ok_p", "budget_ok_c"):
            print(line)
    return 0


if __name__ == "__main__":
    sys.exit(run(sys.argv[1] if len(sys.argv) > 1 else "out/worked_example"))
