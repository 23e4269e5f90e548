#!/usr/bin/env python3
"""Run every bundled preset into an output directory.

Usage: python3 scripts/run_all_presets.py [outdir]

Writes each preset's CSV (and SVG) under outdir/<preset>/ and prints a
one-line timing summary per preset. Mostly a convenience for eyeballing
outputs after a change; the test suite runs the same presets on its own.
"""

import sys
import time
from pathlib import Path

from rabisim.cli import main
from rabisim.scenario import PRESET_NAMES


def run(outdir: Path) -> int:
    failures = 0
    for name in PRESET_NAMES:
        target = outdir / name
        target.mkdir(parents=True, exist_ok=True)
        t0 = time.perf_counter()
        code = main(["reproduce", name, "--out", str(target), "--svg"])
        dt = time.perf_counter() - t0
        status = "ok" if code == 0 else f"exit {code}"
        print(f"{name:10s} {dt:6.2f} s  {status}")
        if code != 0:
            failures += 1
    return failures


if __name__ == "__main__":
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("preset_output")
    sys.exit(1 if run(out) else 0)
