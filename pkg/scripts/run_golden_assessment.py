#!/usr/bin/env python3
"""Run the bundled golden replay through the full assessment pipeline.

Writes reports under out/ (ignored by git) and prints the maturity vector.
A clean checkout should always produce accuracy=IV consistency=IV
transparency=IV.
"""

import json
import sys
from pathlib import Path

from ttq_harness.cli import main as cli_main

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    out = ROOT / "out" / "golden-report.json"
    code = cli_main([
        "assess",
        "--suite", str(ROOT / "suites" / "les-demo"),
        "--sut", str(ROOT / "suts" / "golden-replay.json"),
        "--out", str(out),
        "--format", "json,markdown",
        "--fixed-clock",
    ])
    if code != 0:
        print(f"assessment failed with exit code {code}", file=sys.stderr)
        return code
    report = json.loads(out.read_text(encoding="utf-8"))
    vector = report["maturity_vector"]
    print("maturity vector:",
          ", ".join(f"{k}={v}" for k, v in sorted(vector.items())))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
