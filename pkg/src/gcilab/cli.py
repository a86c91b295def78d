from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, List, Optional

import numpy as np
import typer
from dotenv import load_dotenv

from .chernoff import bound_vs_exact, constant_c0, find_c1, optimal_t
from .config import parse_config
from .errors import GciError
from .gaussian import measure
from .h_profile import h_profile, h_property_suite, midpoint_design
from .inequality_lab import (
    CHECKERS,
    check_anderson,
    check_constant_factor,
    check_corollary1,
    check_gcc,
    check_li,
    check_lemma1,
    check_main_theorem,
    check_shao,
    check_small_radius,
    check_small_radius_c0,
    check_ssz,
)
from .matrix_lab import build_from_angles, check_hypotheses, corollary1_angle_check, random_angle_pair
from .models import Budget, InequalityReport, Verdict
from .serialize import angle_pair_from_dict, load_body, quintuple_from_dict
from .suites import run_suite

app = typer.Typer(help="gcilab: numerical checks of Gaussian correlation inequalities")


@app.callback()
def _main(verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging")):
    # Load .env if present
    if Path(".env").exists():
        load_dotenv(".env")
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _budget(samples: int, seed: int, confidence: float, method: str) -> Budget:
    try:
        return Budget(samples=samples, seed=seed, confidence=confidence, method=method)
    except ValueError as e:
        typer.echo(f"❌ {e}")
        raise typer.Exit(code=1)


def _read_json(path: Path) -> Any:
    return json.loads(path.read_text(encoding="utf-8"))


def _echo_report(report: InequalityReport) -> None:
    typer.echo(json.dumps(report.to_row(), indent=2))
    mark = {"confirmed": "✅", "inconclusive": "➖", "violated": "❌"}[report.verdict.value]
    typer.echo(f"{mark} {report.name}: {report.verdict.value} (margin {report.margin:.6g})")


@app.command("measure")
def measure_cmd(
    body_path: Path = typer.Argument(..., help="Body JSON file"),
    samples: int = typer.Option(1_000_000, help="Monte Carlo samples"),
    seed: int = typer.Option(42, help="Random seed"),
    confidence: float = typer.Option(0.99, help="Confidence level of the interval"),
    method: str = typer.Option("auto", help="auto | mc | quadrature"),
):
    """Gaussian measure of a body."""
    budget = _budget(samples, seed, confidence, method)
    try:
        est = measure(load_body(body_path), budget)
    except (GciError, OSError) as e:
        typer.echo(f"❌ {e}")
        raise typer.Exit(code=1)
    typer.echo(json.dumps(est.to_dict(), indent=2))


@app.command()
def check(
    a_path: Path = typer.Argument(..., help="Body A JSON file (or C for anderson)"),
    b_path: Optional[Path] = typer.Argument(None, help="Body B JSON file"),
    inequality: str = typer.Option("gcc", "--inequality", "-i", help=" | ".join(CHECKERS)),
    quintuple: Optional[Path] = typer.Option(None, help="Quintuple JSON (m, p, r, s, t) for main"),
    matrix: Optional[Path] = typer.Option(None, help="M (lemma1, shao) or K (anderson) as JSON rows"),
    p: float = typer.Option(0.6, help="p for li"),
    r: float = typer.Option(0.8, help="r for li"),
    samples: int = typer.Option(1_000_000, help="Monte Carlo samples per measure"),
    seed: int = typer.Option(42, help="Random seed"),
    confidence: float = typer.Option(0.99, help="Confidence level"),
    method: str = typer.Option("auto", help="auto | mc | quadrature"),
):
    """Check one inequality on the given bodies."""
    if inequality not in CHECKERS:
        typer.echo(f"❌ unknown inequality {inequality!r}; expected one of {', '.join(CHECKERS)}")
        raise typer.Exit(code=1)
    budget = _budget(samples, seed, confidence, method)

    try:
        a = load_body(a_path)
        if inequality == "anderson":
            if matrix is None:
                raise typer.BadParameter("anderson needs --matrix K")
            report = check_anderson(a, np.asarray(_read_json(matrix), dtype=float), budget)
        else:
            if b_path is None:
                raise typer.BadParameter(f"{inequality} needs a second body")
            b = load_body(b_path)
            if inequality == "gcc":
                report = check_gcc(a, b, budget)
            elif inequality == "main":
                if quintuple is None:
                    raise typer.BadParameter("main needs --quintuple")
                report = check_main_theorem(a, b, quintuple_from_dict(_read_json(quintuple)), budget)
            elif inequality == "ssz":
                report = check_ssz(a, b, budget)
            elif inequality == "li":
                report = check_li(a, b, p, r, budget)
            elif inequality == "corollary1":
                report = check_corollary1(a, b, budget)
            elif inequality == "constant_factor":
                report = check_constant_factor(a, b, budget)
            elif inequality == "small_radius":
                report = check_small_radius(a, b, budget)
            elif inequality == "small_radius_c0":
                report = check_small_radius_c0(a, b, budget)
            else:
                if matrix is None:
                    raise typer.BadParameter(f"{inequality} needs --matrix M")
                mmat = np.asarray(_read_json(matrix), dtype=float)
                checker = check_lemma1 if inequality == "lemma1" else check_shao
                report = checker(a, b, mmat, budget)
    except (GciError, OSError, json.JSONDecodeError) as e:
        typer.echo(f"❌ {e}")
        raise typer.Exit(code=1)

    _echo_report(report)
    if report.verdict is Verdict.VIOLATED:
        raise typer.Exit(code=1)


@app.command()
def angles(
    n: int = typer.Option(2, help="Matrix size"),
    seed: int = typer.Option(42, help="Seed of the random commuting pair"),
    angles_path: Optional[Path] = typer.Option(None, "--angles", help="JSON with alpha, beta"),
    corollary1: bool = typer.Option(False, "--corollary1", help="Compare pi/6 and pi/3 choices"),
):
    """Build a quintuple from commuting angle matrices and report its residuals."""
    try:
        if corollary1:
            typer.echo(json.dumps(corollary1_angle_check(n), indent=2))
            return
        pair = angle_pair_from_dict(_read_json(angles_path)) if angles_path else random_angle_pair(n, seed)
        q = build_from_angles(pair)
    except (GciError, OSError, json.JSONDecodeError) as e:
        typer.echo(f"❌ {e}")
        raise typer.Exit(code=1)
    typer.echo(
        json.dumps(
            {"angles": pair.to_dict(), "quintuple": q.to_dict(), "hypotheses": check_hypotheses(q).to_dict()},
            indent=2,
        )
    )


@app.command("h-profile")
def h_profile_cmd(
    a_path: Path = typer.Argument(..., help="Body A JSON file"),
    b_path: Path = typer.Argument(..., help="Body B JSON file"),
    quintuple: Optional[Path] = typer.Option(None, help="Take S and T from this quintuple (default I)"),
    points: int = typer.Option(3, help="Random base points; their midpoints are added"),
    spread: float = typer.Option(0.3, help="Standard deviation of the base points"),
    samples: int = typer.Option(1_000_000, help="Monte Carlo samples per point"),
    seed: int = typer.Option(42, help="Random seed"),
    confidence: float = typer.Option(0.99, help="Confidence level"),
    method: str = typer.Option("auto", help="auto | mc | quadrature"),
):
    """Estimate h(y) on a midpoint design and test its properties."""
    budget = _budget(samples, seed, confidence, method)
    try:
        a, b = load_body(a_path), load_body(b_path)
        n = a.dimension
        if quintuple is not None:
            q = quintuple_from_dict(_read_json(quintuple))
            s, t = q.s, q.t
        else:
            s = t = np.eye(n)
        base = np.random.default_rng(seed).normal(scale=spread, size=(points, n))
        profile = h_profile(a, b, s, t, midpoint_design(base), budget)
        props = h_property_suite(profile, budget.minkowski_tol, budget.minkowski_max_iter)
    except (GciError, OSError, json.JSONDecodeError) as e:
        typer.echo(f"❌ {e}")
        raise typer.Exit(code=1)

    for y, v in zip(profile.ys, profile.values):
        typer.echo(f"h({np.array2string(y, precision=4)}) = {v.value:.6f} [{v.ci_low:.6f}, {v.ci_high:.6f}]")
    counts = {k.value: 0 for k in Verdict}
    for rep in props.reports:
        counts[rep.verdict.value] += 1
    bad_support = sum(1 for c in props.support if not c.ok)
    typer.echo(f"   properties: {counts}, support failures: {bad_support}")
    if props.violations:
        raise typer.Exit(code=1)


@app.command()
def chernoff(
    k: List[float] = typer.Option([0.5], "--k", help="Radius factor(s) in (0, 1]"),
    n: int = typer.Option(4, help="Dimension"),
):
    """Ball-tail bound against the exact measure, plus the constants c0 and c1."""
    rows = []
    try:
        for kk in k:
            cmp = bound_vs_exact(kk, n)
            rows.append(
                {"k": kk, "n": n, "exact": cmp.exact, "bound": cmp.bound,
                 "optimal_t": optimal_t(kk), "holds": cmp.holds}
            )
    except GciError as e:
        typer.echo(f"❌ {e}")
        raise typer.Exit(code=1)
    typer.echo(json.dumps({"c0": constant_c0(), "c1": find_c1(), "rows": rows}, indent=2))


@app.command()
def suite(
    config: Optional[Path] = typer.Option(None, "--config", help="JSON config file"),
    suite_name: Optional[str] = typer.Option(None, "--suite", help="Suite name or 'all'"),
    n: Optional[int] = typer.Option(None, help="Dimension"),
    trials: Optional[int] = typer.Option(None, help="Trials per suite"),
    samples: Optional[int] = typer.Option(None, help="Monte Carlo samples per measure"),
    seed: Optional[int] = typer.Option(None, help="Global seed"),
    confidence: Optional[float] = typer.Option(None, help="Confidence level"),
    output: Optional[str] = typer.Option(None, "--output", "-o", help="CSV output path"),
    workers: Optional[int] = typer.Option(None, help="Trial threads"),
    method: Optional[str] = typer.Option(None, help="auto | mc | quadrature"),
):
    """Run a randomized suite and write the CSV report."""
    overrides = {
        "suite": suite_name, "n": n, "trials": trials, "samples": samples, "seed": seed,
        "confidence": confidence, "output": output, "workers": workers, "method": method,
    }
    try:
        cfg = parse_config(config, overrides)
    except GciError as e:
        typer.echo(f"❌ {e}")
        raise typer.Exit(code=1)

    result = run_suite(cfg)
    if result.status != "ok":
        typer.echo("❌ Suite failed:")
        for e in result.errors:
            typer.echo(f"  - {e}")
    typer.echo(
        f"{'✅' if result.exit_code == 0 else '❌'} {result.rows} rows -> {result.output_csv}: "
        f"{result.counts.get('confirmed', 0)} confirmed, "
        f"{result.counts.get('inconclusive', 0)} inconclusive, "
        f"{result.counts.get('violated', 0)} violated"
    )
    typer.echo(f"   inconclusive fraction: {result.inconclusive_fraction:.3f}")
    typer.echo(f"   report: {result.output_csv}.report.json")
    if result.exit_code:
        raise typer.Exit(code=result.exit_code)
