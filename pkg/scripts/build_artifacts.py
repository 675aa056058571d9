#!/usr/bin/env python3
"""Build the full artifact chain (assets, dataset, checkpoint) into --root.

Usage: python scripts/build_artifacts.py [--root DIR] [--quick] [--force]
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from drivescope.pipeline import build

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--root", default=".acceptance")
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--force", action="store_true")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = build(args.root, quick=args.quick, force=args.force, seed=args.seed)
    print(json.dumps(out, indent=2))
