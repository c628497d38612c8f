#!/usr/bin/env python3
"""Run every bundled scenario and print a verdict table.

Usage: python scripts/run_suite.py [out_dir]
"""

import sys
from pathlib import Path

from wassinc import load_config, run_scenario

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    out_root = Path(sys.argv[1]) if len(sys.argv) > 1 else ROOT / "out"
    failures = 0
    for path in sorted((ROOT / "scenarios").glob("*.json")):
        config = load_config(path)
        manifest = run_scenario(config, out_root / path.stem)
        verdicts = manifest["verdicts"]
        status = "pass" if all(verdicts.values()) else "FAIL"
        failures += status == "FAIL"
        detail = ", ".join(f"{k}={'ok' if v else 'BAD'}" for k, v in verdicts.items()) or "-"
        print(f"{path.stem:42s} {status:4s}  {detail}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
