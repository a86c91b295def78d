from __future__ import annotations

import json
from pathlib import Path

from gcilab.gaussian import measure
from gcilab.models import Budget
from gcilab.serialize import body_to_dict, load_body

FIXTURES_DIR = Path(__file__).parent / "fixtures"


def _budget(meta: dict) -> Budget:
    b = meta.get("budget") or {}
    return Budget(
        samples=int(b.get("samples", 1000)),
        seed=int(b.get("seed", 0)),
        method=str(b.get("method", "auto")),
    )


def test_fixtures_against_goldens():
    assert FIXTURES_DIR.exists()
    fixture_dirs = sorted(p for p in FIXTURES_DIR.iterdir() if p.is_dir())
    assert fixture_dirs

    for fdir in fixture_dirs:
        meta = json.loads((fdir / "meta.json").read_text(encoding="utf-8"))
        golden = json.loads((fdir / "golden_measure.json").read_text(encoding="utf-8"))
        tol = float(meta.get("tolerances", {}).get("value_abs", 1e-8))

        body = load_body(fdir / "body.json")
        est = measure(body, _budget(meta))

        assert est.source.value == golden["source"], f"{fdir.name}: source {est.source.value}"
        assert abs(est.value - golden["value"]) <= tol, (
            f"{fdir.name}: {est.value} vs golden {golden['value']} (tol={tol})"
        )
        assert est.ci_low <= golden["value"] + tol and golden["value"] - tol <= est.ci_high


def test_fixture_bodies_survive_serialization():
    for fdir in sorted(p for p in FIXTURES_DIR.iterdir() if p.is_dir()):
        raw = json.loads((fdir / "body.json").read_text(encoding="utf-8"))
        assert body_to_dict(load_body(fdir / "body.json")) == raw, fdir.name
