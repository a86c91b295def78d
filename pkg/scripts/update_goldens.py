#!/usr/bin/env python3
from __future__ import annotations

import json
from pathlib import Path

from gcilab.errors import GciError
from gcilab.gaussian import measure
from gcilab.models import Budget
from gcilab.serialize import load_body

FIXTURES_DIR = Path("tests/fixtures")


def _budget(meta: dict) -> Budget:
    b = meta.get("budget") or {}
    return Budget(
        samples=int(b.get("samples", 1000)),
        seed=int(b.get("seed", 0)),
        method=str(b.get("method", "auto")),
    )


def main() -> int:
    if not FIXTURES_DIR.exists():
        print(f"Fixtures dir not found: {FIXTURES_DIR}")
        return 1

    fixture_dirs = [p for p in FIXTURES_DIR.iterdir() if p.is_dir()]
    if not fixture_dirs:
        print("No fixtures found.")
        return 0

    failed = 0

    for fdir in sorted(fixture_dirs):
        meta_path = fdir / "meta.json"
        body_path = fdir / "body.json"
        if not meta_path.exists() or not body_path.exists():
            print(f"Skipping {fdir.name}: missing meta.json or body.json")
            continue

        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        try:
            est = measure(load_body(body_path), _budget(meta))
        except GciError as e:
            failed += 1
            print(f"❌ {fdir.name}: {e}")
            continue

        (fdir / "golden_measure.json").write_text(
            json.dumps({"value": round(est.value, 12), "source": est.source.value}, indent=2),
            encoding="utf-8",
        )
        print(f"✅ {fdir.name}: {est.value:.10f} ({est.source.value})")

    return 1 if failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
