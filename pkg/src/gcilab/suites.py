from __future__ import annotations

import json
import logging
import math
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict, List

import numpy as np

from .chernoff import (
    constant_c0,
    corollary2_condition,
    dominance_grid,
    find_c1,
)
from .config import validate_config
from .convex_sets import (
    Body,
    linear_image,
    random_body,
    rotation,
    scaled,
)
from .gaussian import derive_seed
from .h_profile import h_profile, h_property_suite, midpoint_design
from .inequality_lab import (
    SMALL_RADIUS_C,
    check_anderson,
    check_constant_factor,
    check_corollary1,
    check_gcc,
    check_lemma1,
    check_main_theorem,
    check_shao,
    check_small_radius,
    check_small_radius_c0,
)
from .matrix_lab import build_from_angles, random_angle_pair
from .models import Budget, InequalityReport, Interval, SuiteConfig, SuiteResult, Verdict
from .report_csv import write_reports

logger = logging.getLogger(__name__)

SUITE_ORDER = (
    "gcc2d", "ellipsoid", "main_theorem", "corollary1", "small_radius",
    "lemma_shao", "h_profile", "chernoff",
)

C1_TOL = 1e-10
CONDITION_MAX_N = 64

Trial = Callable[[int, SuiteConfig, Budget], List[InequalityReport]]


def _error_lines(e: BaseException) -> List[str]:
    msg = str(e).strip() or repr(e)
    return [msg, "traceback:\n" + "".join(traceback.format_exception(type(e), e, e.__traceback__))]


def _pick(rng: np.random.Generator, kinds: tuple) -> str:
    return str(kinds[int(rng.integers(len(kinds)))])


def _body(kind: str, n: int, seed: int, key: int, scale: float = 1.0) -> Body:
    return random_body(kind, n, scale=scale, seed=derive_seed(seed, key))


# -----------------------------
# Trials: one seed -> reports
# -----------------------------


def _gcc2d(seed: int, cfg: SuiteConfig, budget: Budget) -> List[InequalityReport]:
    rng = np.random.default_rng(seed)
    kinds = ("box", "ellipsoid", "polytope")
    a = _body(_pick(rng, kinds), 2, seed, 0)
    b = _body(_pick(rng, kinds), 2, seed, 1)
    angle = float(rng.uniform(0, math.pi))
    return [
        check_gcc(a, linear_image(rotation(2, angle), b), budget, name="gcc2d",
                  parameters={"angle": angle})
    ]


def _ellipsoid(seed: int, cfg: SuiteConfig, budget: Budget) -> List[InequalityReport]:
    rng = np.random.default_rng(seed)
    a = _body(_pick(rng, ("box", "polytope", "ball")), cfg.n, seed, 0)
    b = _body("ellipsoid", cfg.n, seed, 1)
    return [check_gcc(a, b, budget, name="gcc_ellipsoid")]


def _main_theorem(seed: int, cfg: SuiteConfig, budget: Budget) -> List[InequalityReport]:
    rng = np.random.default_rng(seed)
    q = build_from_angles(random_angle_pair(cfg.n, derive_seed(seed, 2)))
    kinds = ("ball", "box", "polytope")
    a = _body(_pick(rng, kinds), cfg.n, seed, 0)
    b = _body(_pick(rng, kinds), cfg.n, seed, 1)
    return [check_main_theorem(a, b, q, budget)]


def _corollary1(seed: int, cfg: SuiteConfig, budget: Budget) -> List[InequalityReport]:
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 9))
    kinds = ("ball", "box", "polytope")
    a = _body(_pick(rng, kinds), n, seed, 0)
    b = _body(_pick(rng, kinds), n, seed, 1)
    return [check_corollary1(a, b, budget), check_constant_factor(a, b, budget)]


def _inside(kind: str, n: int, seed: int, key: int, radius: float) -> Body:
    body = _body(kind, n, seed, key)
    return scaled(body, 0.99 * radius / body.bounding_radius())


def _small_radius(seed: int, cfg: SuiteConfig, budget: Budget) -> List[InequalityReport]:
    rng = np.random.default_rng(seed)
    radius = SMALL_RADIUS_C * math.sqrt(cfg.n)
    kinds = ("ball", "box", "ellipsoid", "polytope")
    first, second = _pick(rng, kinds), _pick(rng, kinds)
    a = _inside(first, cfg.n, seed, 0, radius)
    b = _inside(second, cfg.n, seed, 1, radius)
    inner = constant_c0() * math.sqrt(cfg.n)
    a0 = _inside(first, cfg.n, seed, 0, inner)
    b0 = _inside(second, cfg.n, seed, 1, inner)
    return [check_small_radius(a, b, budget), check_small_radius_c0(a0, b0, budget)]


def _lemma_shao(seed: int, cfg: SuiteConfig, budget: Budget) -> List[InequalityReport]:
    rng = np.random.default_rng(seed)
    m_dim, n_dim = int(rng.integers(1, 3)), int(rng.integers(1, 3))
    g = rng.standard_normal((m_dim, n_dim))
    mmat = float(rng.uniform(0.1, 0.9)) * g / np.linalg.norm(g, 2)
    a = _body(_pick(rng, ("ball", "box")), m_dim, seed, 0)
    b = _body(_pick(rng, ("ball", "box")), n_dim, seed, 1)
    h = rng.standard_normal((cfg.n, cfg.n))
    c = _body(_pick(rng, ("box", "polytope", "ellipsoid")), cfg.n, seed, 2)
    return [
        check_lemma1(a, b, mmat, budget),
        check_shao(a, b, mmat, budget),
        check_anderson(c, h @ h.T / cfg.n, budget),
    ]


def _h_profile(seed: int, cfg: SuiteConfig, budget: Budget) -> List[InequalityReport]:
    rng = np.random.default_rng(seed)
    n = 2
    a = _body(_pick(rng, ("ball", "box")), n, seed, 0)
    b = _body(_pick(rng, ("ball", "box")), n, seed, 1)
    q = build_from_angles(random_angle_pair(n, derive_seed(seed, 2)))
    ys = midpoint_design(rng.normal(scale=0.3, size=(3, n)))
    props = h_property_suite(
        h_profile(a, b, q.s, q.t, ys, budget),
        minkowski_tol=budget.minkowski_tol,
        minkowski_max_iter=budget.minkowski_max_iter,
    )
    failures = sum(1 for check in props.support if not check.ok)
    support = InequalityReport.build(
        "h_support",
        n,
        Interval.point(failures),
        Interval.point(0.0),
        samples=0,
        seed=budget.seed,
        parameters={"checked": len(props.support)},
    )
    return props.reports + [support]


def _chernoff_rows(cfg: SuiteConfig) -> List[InequalityReport]:
    c0, c1 = constant_c0(), find_c1(C1_TOL)
    rows = [
        InequalityReport.build(
            "c0_below_c1", 1, Interval.point(c0), Interval(c1, c1 - C1_TOL, c1 + C1_TOL),
            samples=0, seed=cfg.seed, parameters={"c0": c0, "c1": c1},
        ),
        InequalityReport.build(
            "c1_matches_0.374", 1, Interval.point(abs(c1 - 0.374)), Interval.point(5e-4),
            samples=0, seed=cfg.seed, parameters={"c1": c1},
        ),
    ]
    worst = max(corollary2_condition(c1, n) for n in range(1, CONDITION_MAX_N + 1))
    rows.append(
        InequalityReport.build(
            "corollary2_condition", CONDITION_MAX_N, Interval.point(worst),
            # exponent error of the bisected root is at most n tol / c
            Interval.point(math.exp(CONDITION_MAX_N * C1_TOL / c1)),
            samples=0, seed=cfg.seed, parameters={"c1": c1},
        )
    )

    by_k: Dict[float, list] = {}
    for comparison in dominance_grid():
        by_k.setdefault(comparison.k, []).append(comparison)
    for k, comparisons in by_k.items():
        tightest = max(comparisons, key=lambda t: t.exact / t.bound if t.bound > 0 else 0.0)
        rows.append(
            InequalityReport.build(
                f"chernoff_dominance_k={k:g}", tightest.n, Interval.point(tightest.exact),
                Interval.point(tightest.bound), samples=0, seed=cfg.seed,
                parameters={"k": k, "grid_n": len(comparisons)},
            )
        )
    return rows


TRIALS: Dict[str, Trial] = {
    "gcc2d": _gcc2d,
    "ellipsoid": _ellipsoid,
    "main_theorem": _main_theorem,
    "corollary1": _corollary1,
    "small_radius": _small_radius,
    "lemma_shao": _lemma_shao,
    "h_profile": _h_profile,
}


def _run_trials(
    name: str, cfg: SuiteConfig, errors: List[str]
) -> List[InequalityReport]:
    trial = TRIALS[name]
    suite_index = SUITE_ORDER.index(name)
    seeds = [derive_seed(cfg.seed, suite_index, i) for i in range(cfg.trials)]

    def run(seed: int) -> List[InequalityReport]:
        budget = cfg.budget(seed)
        if cfg.workers > 1:
            budget = replace(budget, workers=1)
        try:
            return trial(seed, cfg, budget)
        except Exception as e:
            msg, trace = _error_lines(e)
            errors.extend([f"{name} trial seed={seed}: {msg}", trace])
            return []

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            batches = list(pool.map(run, seeds))
    else:
        batches = [run(seed) for seed in seeds]
    return [report for batch in batches for report in batch]


def _counts(reports: List[InequalityReport]) -> Dict[str, int]:
    counts = {v.value: 0 for v in Verdict}
    for r in reports:
        counts[r.verdict.value] += 1
    return counts


def run_suite(cfg: SuiteConfig) -> SuiteResult:
    """Run one suite (or all of them), write the CSV and a JSON run report next to it."""
    errors: List[str] = []
    reports: List[InequalityReport] = []
    try:
        validate_config(cfg)
        names = SUITE_ORDER if cfg.suite == "all" else (cfg.suite,)
        for name in names:
            logger.info("suite %s: %d trials", name, cfg.trials)
            if name == "chernoff":
                reports.extend(_chernoff_rows(cfg))
            else:
                reports.extend(_run_trials(name, cfg, errors))

        rows = write_reports(cfg.output, reports)
        result = SuiteResult(
            status="error" if errors else "ok",
            suite=cfg.suite,
            output_csv=cfg.output,
            counts=_counts(reports),
            rows=rows,
            errors=errors,
        )
    except Exception as e:
        errors.extend(_error_lines(e))
        result = SuiteResult(
            status="error",
            suite=cfg.suite,
            output_csv=cfg.output,
            counts=_counts(reports),
            rows=0,
            errors=errors,
        )

    _write_report(cfg, result)
    return result


def _write_report(cfg: SuiteConfig, result: SuiteResult) -> None:
    out = Path(cfg.output)
    report_path = out.with_suffix(out.suffix + ".report.json")
    payload = {**result.to_dict(), "config": cfg.to_dict()}
    try:
        report_path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    except OSError as e:
        logger.warning("could not write run report %s: %s", report_path, e)

