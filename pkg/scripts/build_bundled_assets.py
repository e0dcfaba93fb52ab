#!/usr/bin/env python3
"""Regenerate the bundled suite, replays, manifests, and SUT descriptors.

The outputs are deterministic, so rerunning this script must leave a clean
git tree unless the fixture definitions changed.
"""

import argparse
from pathlib import Path

from ttq_harness.fixtures import build_assets


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--root", default=Path(__file__).resolve().parent.parent,
        type=Path, help="repository root to write assets under")
    args = parser.parse_args()
    suite = build_assets(args.root)
    print(f"wrote assets for suite '{suite.suite_id}' under {args.root}")


if __name__ == "__main__":
    main()
