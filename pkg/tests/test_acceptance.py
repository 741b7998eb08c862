"""Acceptance suite: every criterion runs at its stated tolerance and prints
one PASS/FAIL line (run with `pytest tests/test_acceptance.py -v -s`)."""

import itertools
import math
import time

import numpy as np

from causalcost.calibration import CalibrationPoint, fit_nominal_productivity
from causalcost.cli import main as cli_main
from causalcost.estimation import exceedance_probability, quantile
from causalcost.evaluation import loocv_evaluate
from causalcost.formats import load_model, load_projects, save_model, save_projects
from causalcost.model import evaluate_overhead, overhead_bounds
from causalcost.pipeline import (
    IterationConfig,
    apply_suggestions,
    calibrate_dataset,
    pre_modeling_analysis,
    run_iteration,
)
from causalcost.sampling import (
    LATIN_HYPERCUBE,
    MONTE_CARLO,
    RandomSeed,
    SamplePlan,
    draw_uniforms,
    simulate_overhead,
    triangular_inverse_cdf,
)
from causalcost.screening import detect_outliers
from causalcost.stats import mann_whitney_exact, spearman_test
from causalcost.synthetic import SyntheticSpec, default_spec, generate_synthetic_dataset

from test_estimation import dist_from, oracle_exceedance, oracle_quantile
from test_model import random_model_ratings_draw, tri
from test_pipeline import degenerate_true_model

FULL_PLAN = SamplePlan(LATIN_HYPERCUBE, 10_000)


def _report(number: int, ok: bool, detail: str) -> None:
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {number} failed: {detail}"


def test_criterion_1_end_to_end_accuracy_and_refinement():
    started = time.monotonic()
    config = IterationConfig(plan=FULL_PLAN, seed=101, target_mmre=0.10)

    clean_spec = default_spec(seed=101)
    clean_projects, _ = generate_synthetic_dataset(clean_spec)
    clean = loocv_evaluate(clean_spec.model, clean_projects, FULL_PLAN, RandomSeed(101))
    clean_ok = clean.mmre <= 0.10

    degraded_spec = default_spec(seed=101, plant_outlier=True, plant_missing_phase=True)
    degraded_projects, truth = generate_synthetic_dataset(degraded_spec)
    first = run_iteration(degraded_spec.model, degraded_projects, config)
    suggested = {(s.kind, s.subject) for s in first.suggestions}
    named_defects = (
        ("remove_outlier", truth.defects["outlier"]) in suggested
        and ("fix_effort_scope", truth.defects["missing_phase"]) in suggested
    )
    revision = apply_suggestions(degraded_projects, first.suggestions)
    second = run_iteration(degraded_spec.model, revision.projects, config)
    improved = second.evaluation.mmre < first.evaluation.mmre
    elapsed = time.monotonic() - started

    ok = clean_ok and named_defects and improved and elapsed <= 60.0
    _report(
        1,
        ok,
        f"clean MMRE {clean.mmre:.4f} (<=0.10), degraded {first.evaluation.mmre:.4f} "
        f"-> {second.evaluation.mmre:.4f} after applying its own suggestions, "
        f"planted defects named: {named_defects}, runtime {elapsed:.1f}s (<=60s)",
    )


def test_criterion_2_driver_recovery_rate():
    trials = 50
    successes = 0
    for trial in range(trials):
        spec = default_spec(seed=1000 + trial)
        projects, truth = generate_synthetic_dataset(spec)
        pre = pre_modeling_analysis(
            spec.model, projects, IterationConfig(plan=FULL_PLAN, seed=1000 + trial)
        )
        order = [e.candidate_id for e in pre.ranking.entries]
        drivers = set(truth.driver_ids)
        decoys = set(truth.decoy_names)
        worst_driver = max(order.index(d) for d in drivers)
        best_decoy = min(order.index(d) for d in decoys)
        if worst_driver < best_decoy:
            successes += 1
    ok = successes >= math.ceil(0.9 * trials)
    _report(2, ok, f"all 5 drivers outrank all 5 decoys in {successes}/{trials} trials (need >= 45)")


def test_criterion_3_triangular_sampler():
    checks = []
    for (a, c, b) in ((0.0, 10.0, 20.0), (0.0, 2.0, 20.0)):
        params = tri(a, c, b)
        analytic = (a + c + b) / 3.0
        mc_u = draw_uniforms(SamplePlan(MONTE_CARLO, 100_000), 0, RandomSeed(3))
        mc_mean = float(np.mean(triangular_inverse_cdf(params, mc_u)))
        checks.append(abs(mc_mean - analytic) <= 0.1)
        lhs_u = draw_uniforms(SamplePlan(LATIN_HYPERCUBE, 1_000), 0, RandomSeed(3))
        lhs_mean = float(np.mean(triangular_inverse_cdf(params, lhs_u)))
        checks.append(abs(lhs_mean - analytic) <= 0.02)

    golden = triangular_inverse_cdf(tri(0, 10, 20), 0.125)
    checks.append(abs(golden - 5.0) <= 1e-12)

    def cdf(params, x):
        a, c, b = params.min, params.likely, params.max
        if x <= c:
            return (x - a) ** 2 / ((b - a) * (c - a))
        return 1.0 - (b - x) ** 2 / ((b - a) * (b - c))

    for params in (tri(0, 10, 20), tri(0, 2, 20)):
        for u in np.linspace(0.001, 0.999, 97):
            x = triangular_inverse_cdf(params, float(u))
            checks.append(abs(cdf(params, x) - u) <= 1e-12)
    _report(3, all(checks), f"{len(checks)} sampler checks at their stated tolerances")


def test_criterion_4_calibration_exactness():
    spec = SyntheticSpec(degenerate_true_model(), 0.5, project_count=12, seed=40)
    projects, _ = generate_synthetic_dataset(spec)
    calibration, _, _ = calibrate_dataset(
        spec.model, projects, SamplePlan(LATIN_HYPERCUBE, 256), RandomSeed(40)
    )
    recovery = abs(calibration.nominal_productivity - 0.5) / 0.5
    worked = fit_nominal_productivity(
        [CalibrationPoint("a", 10.0, 25.0, 0.25), CalibrationPoint("b", 20.0, 50.0, 0.25)]
    )
    ok = recovery <= 1e-9 and worked.regression_slope == 2.0
    _report(4, ok, f"noiseless recovery rel err {recovery:.2e} (<=1e-9), worked slope "
                   f"{worked.regression_slope} == 2.0 exactly")


def test_criterion_5_risk_query_oracle_equivalence():
    rng = np.random.default_rng(55)
    grid = [k / 100 for k in range(1, 100)]
    mismatches = 0
    for _ in range(100):
        n = int(rng.integers(1, 51))
        values = rng.uniform(1, 2000, size=n)
        dist = dist_from(values)
        for p in grid:
            if quantile(dist, p) != oracle_quantile(values, p):
                mismatches += 1
        midpoints = (dist.samples[:-1] + dist.samples[1:]) / 2
        for budget in midpoints:
            if exceedance_probability(dist, budget) != oracle_exceedance(values, budget):
                mismatches += 1
    _report(5, mismatches == 0,
            f"{mismatches} mismatches vs counting oracle over 100 random sample sets (exact)")


def test_criterion_6_exact_test_oracles():
    spearman = spearman_test([0, 1, 2, 3], [0.1, 0.2, 0.3, 0.4])
    ranksum = mann_whitney_exact([10, 11, 12], [5, 6, 7, 8])
    outliers = detect_outliers({"a": 10.0, "b": 10.0, "c": 10.0, "d": 11.0, "e": 50.0})
    ok = (
        spearman.p_value == 2 / 24
        and ranksum.p_value == 2 / 35
        and outliers.flagged == ("e",)
    )
    _report(6, ok, f"spearman p {spearman.p_value} == 2/24, rank-sum p {ranksum.p_value} == 2/35, "
                   f"Tukey flags {outliers.flagged} == ('e',), tolerance 0")


def test_criterion_7_cli_determinism(tmp_path):
    assert cli_main(["synth", "--out", str(tmp_path / "data.csv"), "--seed", "9",
                     "--projects", "10"]) == 0
    identical = []
    for name in ("e1.csv", "e2.csv"):
        code = cli_main([
            "estimate", "--model", str(tmp_path / "model.json"),
            "--data", str(tmp_path / "data.csv"), "--size", "25",
            "--ratings", "staff_skill_gap=1,req_volatility=2,platform_constraints=0,"
                         "customer_involvement_gap=3,tooling_gap=1",
            "--samples", "1000", "--seed", "9", "--out", str(tmp_path / name), "--no-plot",
        ])
        assert code == 0
    identical.append((tmp_path / "e1.csv").read_bytes() == (tmp_path / "e2.csv").read_bytes())

    for name in ("b1", "b2"):
        code = cli_main([
            "iterate", "--model", str(tmp_path / "model.json"),
            "--data", str(tmp_path / "data.csv"), "--samples", "500", "--seed", "9",
            "--target-mmre", "0.10", "--out", str(tmp_path / name), "--no-plot",
        ])
        assert code == 0
    for artifact in ("report.json", "summary.txt"):
        identical.append(
            (tmp_path / "b1" / artifact).read_bytes() == (tmp_path / "b2" / artifact).read_bytes()
        )
    for cdf in sorted((tmp_path / "b1" / "cdf").iterdir()):
        identical.append(cdf.read_bytes() == (tmp_path / "b2" / "cdf" / cdf.name).read_bytes())
    _report(7, all(identical),
            f"{len(identical)} repeated-run artifacts byte-identical (CDF, report, summary)")


def test_criterion_8_invariant_suites(tmp_path):
    checks = []
    rng = np.random.default_rng(88)

    # nominal-zero and monotonicity
    for _ in range(25):
        model, ratings, draw = random_model_ratings_draw(rng)
        checks.append(evaluate_overhead(model, {f: 0 for f in ratings}, draw) == 0.0)
    for _ in range(25):
        model, ratings, draw = random_model_ratings_draw(rng, nonnegative=True, all_plus_signs=True)
        base = evaluate_overhead(model, ratings, draw)
        for fid in ratings:
            levels = model.factor_map[fid].scale.level_count
            if ratings[fid] < levels:
                bumped = dict(ratings, **{fid: ratings[fid] + 1})
                checks.append(evaluate_overhead(model, bumped, draw) >= base - 1e-15)

    # corner bounds vs brute-force enumeration (<= 3 influences)
    for _ in range(25):
        model, ratings, _ = random_model_ratings_draw(rng)
        infs = model.canonical_influences()
        corners = []
        for corner in itertools.product(*[
            (inf.extreme_overhead.min, inf.extreme_overhead.max) for inf in infs
        ]):
            corners.append(evaluate_overhead(model, ratings, {i.key: v for i, v in zip(infs, corner)}))
        lo, hi = overhead_bounds(model, ratings)
        checks.append(abs(lo - min(corners)) <= 1e-12 and abs(hi - max(corners)) <= 1e-12)
        dist = simulate_overhead(model, ratings, SamplePlan(MONTE_CARLO, 64), RandomSeed(1))
        checks.append(lo - 1e-12 <= dist.samples[0] and dist.samples[-1] <= hi + 1e-12)

    # CDF duality
    dist = dist_from(rng.uniform(0, 400, size=41))
    for p in np.linspace(0.01, 1.0, 34):
        q = quantile(dist, float(p))
        checks.append(q in dist.samples and np.mean(dist.samples <= q) >= p)

    # LOOCV fold count equals n
    spec = default_spec(seed=88, project_count=10)
    projects, _ = generate_synthetic_dataset(spec)
    report = loocv_evaluate(spec.model, projects, SamplePlan(LATIN_HYPERCUBE, 200), RandomSeed(88))
    checks.append(len(report.per_project) == 10)

    # round-trip fixed points
    save_model(spec.model, tmp_path / "m1.json")
    save_model(load_model(tmp_path / "m1.json"), tmp_path / "m2.json")
    checks.append((tmp_path / "m1.json").read_bytes() == (tmp_path / "m2.json").read_bytes())
    save_projects(projects, tmp_path / "d1.csv")
    parsed = load_projects(tmp_path / "d1.csv")
    save_projects(parsed, tmp_path / "d2.csv")
    checks.append(parsed == projects)
    checks.append((tmp_path / "d1.csv").read_bytes() == (tmp_path / "d2.csv").read_bytes())

    _report(8, all(checks), f"{sum(bool(c) for c in checks)}/{len(checks)} invariant checks hold")
