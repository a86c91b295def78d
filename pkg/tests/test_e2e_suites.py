from __future__ import annotations

import json
from pathlib import Path

from gcilab import suites
from gcilab.models import CSV_COLUMNS, SuiteConfig
from gcilab.report_csv import read_reports
from gcilab.suites import run_suite


def _cfg(tmp_path: Path, name: str, **kw) -> SuiteConfig:
    base = dict(suite=name, n=2, trials=2, samples=2000, seed=1, output=str(tmp_path / f"{name}.csv"))
    base.update(kw)
    return SuiteConfig(**base)


def test_chernoff_suite_writes_confirmed_rows(tmp_path: Path):
    result = run_suite(_cfg(tmp_path, "chernoff"))
    assert result.status == "ok", result.errors
    assert result.rows == 3 + 20
    assert result.counts["confirmed"] == result.rows
    assert result.exit_code == 0

    rows = read_reports(result.output_csv)
    assert list(rows[0]) == list(CSV_COLUMNS)
    names = [r["name"] for r in rows]
    assert names[:3] == ["c0_below_c1", "c1_matches_0.374", "corollary2_condition"]
    assert "chernoff_dominance_k=0.5" in names
    assert all(r["verdict"] == "confirmed" for r in rows)


def test_run_report_written_next_to_csv(tmp_path: Path):
    cfg = _cfg(tmp_path, "chernoff")
    run_suite(cfg)
    report = json.loads(Path(cfg.output + ".report.json").read_text(encoding="utf-8"))
    assert report["status"] == "ok"
    assert report["config"]["suite"] == "chernoff"
    assert report["rows"] == 23
    assert report["inconclusive_fraction"] == 0.0


def test_suite_output_is_deterministic(tmp_path: Path):
    first = run_suite(_cfg(tmp_path / "a", "main_theorem"))
    second = run_suite(_cfg(tmp_path / "b", "main_theorem"))
    threaded = run_suite(_cfg(tmp_path / "c", "main_theorem", workers=2))
    assert first.status == second.status == threaded.status == "ok"
    text = Path(first.output_csv).read_bytes()
    assert text == Path(second.output_csv).read_bytes()
    assert text == Path(threaded.output_csv).read_bytes()


def test_every_suite_runs(tmp_path: Path):
    result = run_suite(_cfg(tmp_path, "all", trials=1))
    assert result.status == "ok", result.errors
    # gcc2d, ellipsoid, main_theorem: one row each; corollary1, small_radius: two each;
    # lemma_shao: three; h_profile: 6 + 3 + 1; chernoff: 23
    assert result.rows == 3 + 4 + 3 + 10 + 23
    names = {r["name"] for r in read_reports(result.output_csv)}
    assert {"constant_factor", "small_radius", "small_radius_c0"} <= names
    assert len(read_reports(result.output_csv)) == result.rows


def test_failing_trial_is_recorded(tmp_path: Path, monkeypatch):
    def broken(seed, cfg, budget):
        raise RuntimeError("boom")

    monkeypatch.setitem(suites.TRIALS, "gcc2d", broken)
    result = run_suite(_cfg(tmp_path, "gcc2d"))
    assert result.status == "error"
    assert result.exit_code == 1
    assert any("boom" in e for e in result.errors)
    assert result.rows == 0
    report = json.loads(Path(result.output_csv + ".report.json").read_text(encoding="utf-8"))
    assert report["status"] == "error"


def test_invalid_config_is_reported(tmp_path: Path):
    result = run_suite(_cfg(tmp_path, "chernoff", samples=10))
    assert result.status == "error"
    assert result.rows == 0
    assert any("samples" in e for e in result.errors)


def test_suites_draw_polytopes(tmp_path: Path, monkeypatch):
    monkeypatch.setattr(suites, "_pick", lambda rng, kinds: kinds[-1])
    for name in ("main_theorem", "small_radius"):
        result = run_suite(_cfg(tmp_path / name, name, trials=1))
        assert result.status == "ok", result.errors
        rows = read_reports(result.output_csv)
        assert rows
        for row in rows:
            params = json.loads(row["params"])
            assert params["a"] == params["b"] == "Polytope"
            assert row["verdict"] != "violated"
