"""Command-line interface.

Verbs: validate, analyze, calibrate, estimate, risk, evaluate, iterate,
synth, apply.  Every simulation-backed verb takes --samples/--method/--seed
and repeated runs with identical inputs produce byte-identical output files.

Exit codes: 0 success; 1 hard failure, or findings present under --strict;
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .estimation import estimate_cost, exceedance_probability, point_estimate, quantile
from .evaluation import loocv_evaluate
from .formats import (
    FormatError,
    load_model,
    load_projects,
    parse_ratings,
    save_model,
    save_projects,
    atomic_write_text,
)
from .model import validate_ratings
from .pipeline import (
    IterationConfig,
    apply_suggestions,
    calibrate_dataset,
    pre_modeling_analysis,
    run_iteration,
)
from .evaluation import RefinementSuggestion, SUGGESTION_KINDS
from .reports import emit_cdf, emit_report, summary_text
from .sampling import LATIN_HYPERCUBE, MONTE_CARLO, RandomSeed, SamplePlan
from .screening import validate_data
from .synthetic import default_spec, generate_synthetic_dataset

_METHOD_NAMES = {"mc": MONTE_CARLO, "lhs": LATIN_HYPERCUBE}


class UsageError(Exception):
    """Command-line usage problem (exit code 2)."""


def _add_sim_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--samples", type=int, default=10_000, help="simulation draws (default 10000)")
    parser.add_argument("--method", choices=sorted(_METHOD_NAMES), default="lhs",
                        help="sampling method (default lhs)")
    parser.add_argument("--seed", type=int, default=0, help="master random seed (default 0)")


def _add_threshold_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--theta", type=float, default=0.3,
                        help="|rho| threshold for driver selection (default 0.3)")
    parser.add_argument("--alpha", type=float, default=0.05,
                        help="p-value threshold (default 0.05)")
    parser.add_argument("--delta", type=int, default=1,
                        help="tolerated inter-expert rating spread (default 1)")
    parser.add_argument("--assoc-threshold", type=float, default=0.7,
                        help="|rho| threshold for candidate associations (default 0.7)")
    parser.add_argument("--scope", default="modal",
                        help="effort-scope policy: 'modal' or comma-separated phases")


def _plan(args) -> SamplePlan:
    return SamplePlan(_METHOD_NAMES[args.method], args.samples)


def _scope_policy(value: str):
    if value == "modal":
        return "modal"
    return frozenset(p.strip() for p in value.split(",") if p.strip())


def _config(args, target_mmre: float = 0.25) -> IterationConfig:
    return IterationConfig(
        plan=_plan(args),
        seed=RandomSeed(args.seed),
        rho_threshold=args.theta,
        p_threshold=args.alpha,
        rating_spread_threshold=args.delta,
        association_threshold=args.assoc_threshold,
        scope_policy=_scope_policy(args.scope),
        target_mmre=target_mmre,
        estimate_statistic=getattr(args, "statistic", "median"),
    )


def _write_json(path: "str | Path", document: dict) -> None:
    atomic_write_text(path, json.dumps(document, indent=2) + "\n")


def _figure_path(out: "str | Path", suffix: str = "") -> Path:
    out = Path(out)
    stem = out.stem + (f"_{suffix}" if suffix else "")
    return out.with_name(stem + ".png")


def _nominal_productivity(args, model, projects):
    if getattr(args, "productivity", None) is not None:
        if args.productivity <= 0:
            raise UsageError(f"--productivity must be positive, got {args.productivity}")
        return args.productivity
    if projects is None:
        raise UsageError("either --data (to calibrate) or --productivity is required")
    calibration, _, _ = calibrate_dataset(model, projects, _plan(args), RandomSeed(args.seed))
    return calibration.nominal_productivity


def cmd_validate(args) -> int:
    projects = load_projects(args.data)
    model = load_model(args.model) if args.model else None
    report = validate_data(projects, model, args.delta)
    if report.is_clean:
        print(f"{len(projects)} project(s), no findings")
    else:
        print(f"{len(projects)} project(s), {len(report.findings)} finding(s):")
        for finding in report.findings:
            print(f"  - {finding}")
    if args.out:
        _write_json(args.out, {
            "findings": [
                {"project_id": f.project_id, "field": f.field,
                 "category": f.category, "message": f.message}
                for f in report.findings
            ]
        })
    return 1 if (args.strict and not report.is_clean) else 0


def cmd_analyze(args) -> int:
    model = load_model(args.model)
    projects = load_projects(args.data)
    pre = pre_modeling_analysis(model, projects, _config(args))
    print(f"nominal productivity: {pre.calibration.nominal_productivity:.6g}")
    print(f"common effort scope: {', '.join(sorted(pre.scope.common_scope))}")
    if pre.scope.deviants:
        print(f"scope deviants: {', '.join(pre.scope.deviants)}")
    print("driver ranking:")
    for e in pre.ranking.entries:
        if e.rho is None:
            print(f"  {e.candidate_id:<28} undefined ({e.note})")
        else:
            marker = "*" if e.selected else " "
            print(f" {marker}{e.candidate_id:<28} rho={e.rho:+.3f}  p={e.p_value:.4f}")
    for pair in pre.associations:
        print(f"associated pair: {pair.first} ~ {pair.second} rho={pair.rho:+.3f}")
    if pre.outliers.flagged:
        print(f"productivity outliers: {', '.join(pre.outliers.flagged)}")
    for sep in pre.outliers.separators:
        groups = " vs ".join(f"{value}({len(pids)})" for value, pids in sep.partition)
        print(f"group separator: {sep.attribute} [{groups}] p={sep.p_value:.4f}")
    for cell in pre.disagreement.cells:
        print(f"expert disagreement: {cell.project_id}/{cell.factor_id} ratings {cell.ratings}")
    findings = pre.data_quality.findings
    if findings:
        print(f"data-quality findings: {len(findings)}")
        for f in findings:
            print(f"  - {f}")
    if args.out:
        _write_json(args.out, {
            "calibration": {
                "nominal_productivity": pre.calibration.nominal_productivity,
                "regression_slope": pre.calibration.regression_slope,
            },
            "effort_scope": {
                "common_scope": sorted(pre.scope.common_scope),
                "deviants": list(pre.scope.deviants),
            },
            "driver_ranking": [
                {"id": e.candidate_id, "rho": e.rho, "p_value": e.p_value,
                 "selected": e.selected, "note": e.note}
                for e in pre.ranking.entries
            ],
            "associations": [
                {"first": a.first, "second": a.second, "rho": a.rho}
                for a in pre.associations
            ],
            "outliers": {
                "flagged": list(pre.outliers.flagged),
                "lower_fence": pre.outliers.lower_fence,
                "upper_fence": pre.outliers.upper_fence,
            },
            "findings": [
                {"project_id": f.project_id, "field": f.field,
                 "category": f.category, "message": f.message}
                for f in findings
            ],
        })
        if not args.no_plot and pre.ranking.entries:
            from .plots import plot_ranking

            plot_ranking(pre.ranking, _figure_path(args.out, "ranking"), args.theta)
    return 1 if (args.strict and findings) else 0


def cmd_calibrate(args) -> int:
    model = load_model(args.model)
    projects = load_projects(args.data)
    calibration, usable, mean_cos = calibrate_dataset(
        model, projects, _plan(args), RandomSeed(args.seed), _scope_policy(args.scope)
    )
    print(f"nominal productivity: {calibration.nominal_productivity:.9g}")
    print(f"effort rate (slope): {calibration.regression_slope:.9g}")
    print(f"{'project':<12} {'mean CO':>9} {'nominal P':>11} {'residual':>11}")
    for pid in usable.project_ids:
        print(
            f"{pid:<12} {mean_cos[pid]:>9.4f} "
            f"{calibration.per_project_nominal[pid]:>11.6g} "
            f"{calibration.residuals[pid]:>11.6g}"
        )
    for pid, reason in usable.excluded:
        print(f"excluded {pid}: {reason}")
    if args.out:
        _write_json(args.out, {
            "nominal_productivity": calibration.nominal_productivity,
            "regression_slope": calibration.regression_slope,
            "per_project_nominal": {
                pid: calibration.per_project_nominal[pid] for pid in usable.project_ids
            },
            "residuals": {pid: calibration.residuals[pid] for pid in usable.project_ids},
            "mean_overheads": {pid: mean_cos[pid] for pid in usable.project_ids},
            "excluded": [{"id": pid, "reason": reason} for pid, reason in usable.excluded],
        })
    return 0


def _estimate_distribution(args):
    model = load_model(args.model)
    projects = load_projects(args.data) if args.data else None
    productivity = _nominal_productivity(args, model, projects)
    ratings = parse_ratings(args.ratings)
    problems = validate_ratings(model, ratings)
    if problems:
        raise FormatError("ratings incomplete: " + "; ".join(problems))
    dist = estimate_cost(model, ratings, args.size, productivity, _plan(args),
                         RandomSeed(args.seed))
    return dist, productivity


def cmd_estimate(args) -> int:
    dist, productivity = _estimate_distribution(args)
    print(f"nominal productivity: {productivity:.6g}")
    print(f"nominal effort: {args.size / productivity:.6g} person-hours")
    print(f"point estimate (median): {point_estimate(dist):.6g} person-hours")
    for p in (0.5, 0.7, 0.9):
        print(f"quantile p={p:.2f}: {quantile(dist, p):.6g}")
    if args.out:
        emit_cdf(dist, args.out)
        print(f"wrote CDF to {args.out}")
        if not args.no_plot:
            from .plots import plot_cdf

            figure = plot_cdf(dist, _figure_path(args.out),
                              title=f"Cost CDF (size {args.size:g})")
            print(f"wrote figure to {figure}")
    return 0


def cmd_risk(args) -> int:
    if args.budget is None and args.probability is None:
        raise UsageError("risk needs --budget and/or --probability")
    dist, productivity = _estimate_distribution(args)
    print(f"nominal productivity: {productivity:.6g}")
    if args.budget is not None:
        prob = exceedance_probability(dist, args.budget)
        print(f"probability of exceeding budget {args.budget:g}: {prob:.4f}")
    if args.probability is not None:
        if not (0 < args.probability <= 1):
            raise UsageError("--probability must lie in (0, 1]")
        value = quantile(dist, 1.0 - args.probability)
        print(
            f"budget with overrun risk at most {args.probability:g}: {value:.6g}"
        )
    if args.out:
        emit_cdf(dist, args.out)
        print(f"wrote CDF to {args.out}")
        if not args.no_plot:
            from .plots import plot_cdf

            figure = plot_cdf(
                dist,
                _figure_path(args.out),
                title="Cost CDF with risk markers",
                budget=args.budget,
                probability=None if args.probability is None else 1.0 - args.probability,
            )
            print(f"wrote figure to {figure}")
    return 0


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    projects = load_projects(args.data)
    report = loocv_evaluate(
        model, projects, _plan(args), RandomSeed(args.seed),
        scope_policy=_scope_policy(args.scope), statistic=args.statistic,
    )
    print(
        f"LOOCV over {len(report.per_project)} project(s): "
        f"MMRE {report.mmre:.4f} | MdMRE {report.mdmre:.4f} | "
        f"Pred({report.pred_threshold:g}) {report.pred:.2f} | "
        f"consistency {report.consistency:.4f}"
    )
    for row in report.per_project:
        print(
            f"  {row.project_id:<12} actual {row.actual:>10.4g}  "
            f"estimate {row.estimate:>10.4g}  MRE {row.mre:.4f}"
        )
    for pid, reason in report.excluded:
        print(f"  excluded {pid}: {reason}")
    if args.out:
        _write_json(args.out, {
            "mmre": report.mmre,
            "mdmre": report.mdmre,
            "pred": report.pred,
            "pred_threshold": report.pred_threshold,
            "consistency": report.consistency,
            "per_project": [
                {"id": r.project_id, "actual": r.actual, "estimate": r.estimate,
                 "mre": r.mre, "signed_error": r.signed_error}
                for r in report.per_project
            ],
            "excluded": [{"id": pid, "reason": reason} for pid, reason in report.excluded],
        })
        if not args.no_plot:
            from .plots import plot_accuracy

            plot_accuracy(report, _figure_path(args.out, "accuracy"))
    return 0


def cmd_iterate(args) -> int:
    model = load_model(args.model)
    projects = load_projects(args.data)
    config = _config(args, target_mmre=args.target_mmre)
    report = run_iteration(model, projects, config)
    if args.out:
        bundle = emit_report(report, args.out, config, plots=not args.no_plot)
        print(f"report bundle written to {Path(args.out)}")
        print(f"  {bundle.report_path.name}, {bundle.summary_path.name}, "
              f"{len(bundle.cdf_paths)} CDF file(s), {len(bundle.figure_paths)} figure(s)")
    print(summary_text(report, config), end="")
    return 1 if (args.strict and not report.data_quality.is_clean) else 0


def cmd_synth(args) -> int:
    out = Path(args.out)
    spec = default_spec(
        seed=RandomSeed(args.seed),
        project_count=args.projects,
        driver_count=args.drivers,
        decoy_attributes=args.decoys,
        noise_level=args.noise,
        plant_outlier=args.plant_outlier,
        plant_missing_phase=args.plant_missing_phase,
        plant_disagreeing_expert=args.plant_disagreement,
    )
    projects, truth = generate_synthetic_dataset(spec)
    save_projects(projects, out)
    model_path = Path(args.model_out) if args.model_out else out.with_name("model.json")
    save_model(spec.model, model_path)
    truth_path = Path(args.truth_out) if args.truth_out else out.with_name("truth.json")
    _write_json(truth_path, {
        "nominal_productivity": truth.nominal_productivity,
        "overheads": {pid: truth.overheads[pid] for pid in sorted(truth.overheads)},
        "driver_ids": list(truth.driver_ids),
        "decoy_names": list(truth.decoy_names),
        "defects": dict(sorted(truth.defects.items())),
    })
    print(f"wrote {len(projects)} projects to {out}")
    print(f"wrote true model to {model_path}")
    print(f"wrote ground truth to {truth_path}")
    return 0


def cmd_apply(args) -> int:
    projects = load_projects(args.data)
    try:
        document = json.loads(Path(args.report).read_text(encoding="utf-8"))
    except OSError as exc:
        raise FormatError(f"cannot read report {args.report}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{args.report}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    raw = document.get("suggestions")
    if not isinstance(raw, list):
        raise FormatError(f"{args.report}: no 'suggestions' list found")
    suggestions = [
        RefinementSuggestion(item["kind"], item["subject"], item.get("evidence", ""))
        for item in raw
    ]
    kinds = tuple(k.strip() for k in args.kinds.split(",") if k.strip())
    result = apply_suggestions(projects, suggestions, kinds)
    save_projects(result.projects, args.out)
    print(f"applied {len(result.applied)} suggestion(s); "
          f"{len(result.projects)} project(s) remain")
    for suggestion in result.applied:
        print(f"  applied [{suggestion.kind}] {suggestion.subject}")
    for suggestion, reason in result.skipped:
        print(f"  skipped [{suggestion.kind}] {suggestion.subject}: {reason}")
    print(f"wrote revised dataset to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causalcost",
        description="Causal cost-overhead modeling, simulation, and iterative refinement.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="screen a project table for data-quality findings")
    p.add_argument("--data", required=True)
    p.add_argument("--model", default=None)
    p.add_argument("--delta", type=int, default=1)
    p.add_argument("--out", default=None)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("analyze", help="pre-modeling analysis: ranking, outliers, associations")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    _add_sim_flags(p)
    _add_threshold_flags(p)
    p.add_argument("--out", default=None)
    p.add_argument("--no-plot", action="store_true")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("calibrate", help="fit nominal productivity from past projects")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    _add_sim_flags(p)
    p.add_argument("--scope", default="modal")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("estimate", help="simulate the cost distribution of a new project")
    p.add_argument("--model", required=True)
    p.add_argument("--data", default=None)
    p.add_argument("--productivity", type=float, default=None)
    p.add_argument("--size", type=float, required=True)
    p.add_argument("--ratings", required=True,
                   help="JSON file path or inline 'factor=level,factor=level'")
    _add_sim_flags(p)
    p.add_argument("--out", default=None, help="CDF CSV path")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("risk", help="budget overrun probability / budget at tolerable risk")
    p.add_argument("--model", required=True)
    p.add_argument("--data", default=None)
    p.add_argument("--productivity", type=float, default=None)
    p.add_argument("--size", type=float, required=True)
    p.add_argument("--ratings", required=True)
    p.add_argument("--budget", type=float, default=None)
    p.add_argument("--probability", type=float, default=None,
                   help="maximal tolerable overrun risk")
    _add_sim_flags(p)
    p.add_argument("--out", default=None, help="CDF CSV path")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_risk)

    p = sub.add_parser("evaluate", help="leave-one-out cross-validation of the model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    _add_sim_flags(p)
    p.add_argument("--scope", default="modal")
    p.add_argument("--statistic", choices=("median", "mean"), default="median")
    p.add_argument("--out", default=None)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("iterate", help="run one full refinement iteration")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    _add_sim_flags(p)
    _add_threshold_flags(p)
    p.add_argument("--target-mmre", type=float, default=0.25)
    p.add_argument("--statistic", choices=("median", "mean"), default="median")
    p.add_argument("--out", default=None, help="report bundle directory")
    p.add_argument("--no-plot", action="store_true")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_iterate)

    p = sub.add_parser("synth", help="generate a synthetic organization with ground truth")
    p.add_argument("--out", required=True, help="project table CSV path")
    p.add_argument("--model-out", default=None)
    p.add_argument("--truth-out", default=None)
    p.add_argument("--projects", type=int, default=16)
    p.add_argument("--drivers", type=int, default=5)
    p.add_argument("--decoys", type=int, default=5)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--plant-outlier", action="store_true")
    p.add_argument("--plant-missing-phase", action="store_true")
    p.add_argument("--plant-disagreement", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("apply", help="apply report suggestions to produce a dataset revision")
    p.add_argument("--data", required=True)
    p.add_argument("--report", required=True, help="report.json from iterate")
    p.add_argument("--kinds", default="remove_outlier,fix_effort_scope",
                   help=f"comma-separated kinds from {', '.join(SUGGESTION_KINDS)}")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_apply)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (FormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
