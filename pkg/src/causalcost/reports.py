"""Serialization of analysis results: CDF exports, report bundles, summaries.

Every emitted file is a pure function of the inputs and the seed, formatted
locale-independently, so reruns are byte-identical.  Figures are rendered
next to the delimited outputs unless plotting is disabled.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .estimation import CostDistribution
from .evaluation import EvaluationReport
from .formats import atomic_write_text
from .pipeline import IterationConfig, IterationReport
from .screening import FactorRanking

__all__ = ["ReportBundle", "emit_cdf", "report_to_dict", "summary_text", "emit_report"]


def _g9(value: float) -> str:
    return f"{value:.9g}"


def emit_cdf(dist: CostDistribution, path: "str | Path") -> Path:
    """Write (value, cumulative probability) rows, one per sample, ascending.

    Numbers carry 9 significant digits, so identical seeds give byte-identical
    files.
    """
    if len(dist) == 0:
        raise ValueError("cannot export an empty distribution")
    n = len(dist)
    lines = ["value,cum_prob"]
    for i, value in enumerate(dist.samples, start=1):
        lines.append(f"{_g9(value)},{_g9(i / n)}")
    path = Path(path)
    atomic_write_text(path, "\n".join(lines) + "\n")
    return path


def _ranking_rows(ranking: FactorRanking) -> list[dict]:
    return [
        {
            "id": e.candidate_id,
            "rho": e.rho,
            "p_value": e.p_value,
            "selected": e.selected,
            "note": e.note,
        }
        for e in ranking.entries
    ]


def _evaluation_dict(evaluation: EvaluationReport) -> dict:
    return {
        "per_project": [
            {
                "id": row.project_id,
                "actual": row.actual,
                "estimate": row.estimate,
                "mre": row.mre,
                "signed_error": row.signed_error,
            }
            for row in evaluation.per_project
        ],
        "mmre": evaluation.mmre,
        "mdmre": evaluation.mdmre,
        "pred": evaluation.pred,
        "pred_threshold": evaluation.pred_threshold,
        "consistency": evaluation.consistency,
        "excluded": [{"id": pid, "reason": reason} for pid, reason in evaluation.excluded],
    }


def _config_dict(config: IterationConfig) -> dict:
    scope = config.scope_policy
    return {
        "samples": config.plan.count,
        "method": config.plan.method,
        "seed": config.seed.master_seed,
        "rho_threshold": config.rho_threshold,
        "p_threshold": config.p_threshold,
        "rating_spread_threshold": config.rating_spread_threshold,
        "association_threshold": config.association_threshold,
        "scope_policy": scope if isinstance(scope, str) else sorted(scope),
        "target_mmre": config.target_mmre,
        "estimate_statistic": config.estimate_statistic,
        "pred_threshold": config.pred_threshold,
    }


def report_to_dict(report: IterationReport, config: IterationConfig | None = None) -> dict:
    """Machine-readable form of an iteration report (samples live in CDF files)."""
    document = {
        "config": _config_dict(config) if config is not None else None,
        "data_quality": {
            "clean": report.data_quality.is_clean,
            "findings": [
                {
                    "project_id": f.project_id,
                    "field": f.field,
                    "category": f.category,
                    "message": f.message,
                }
                for f in report.data_quality.findings
            ],
        },
        "effort_scope": {
            "common_scope": sorted(report.scope.common_scope),
            "modal_scope": sorted(report.scope.modal_scope),
            "deviants": list(report.scope.deviants),
            "totals": {pid: report.scope.totals[pid] for pid in sorted(report.scope.totals)},
        },
        "expert_disagreement": [
            {
                "project_id": c.project_id,
                "factor_id": c.factor_id,
                "spread": c.spread,
                "ratings": list(c.ratings),
                "aggregate": c.aggregate,
            }
            for c in report.disagreement.cells
        ],
        "calibration": {
            "nominal_productivity": report.calibration.nominal_productivity,
            "regression_slope": report.calibration.regression_slope,
            "per_project_nominal": {
                pid: report.calibration.per_project_nominal[pid]
                for pid in sorted(report.calibration.per_project_nominal)
            },
            "residuals": {
                pid: report.calibration.residuals[pid]
                for pid in sorted(report.calibration.residuals)
            },
        },
        "driver_ranking": _ranking_rows(report.ranking),
        "associations": [
            {"first": a.first, "second": a.second, "rho": a.rho} for a in report.associations
        ],
        "outliers": {
            "flagged": list(report.outliers.flagged),
            "lower_fence": report.outliers.lower_fence,
            "upper_fence": report.outliers.upper_fence,
            "lower_hinge": report.outliers.lower_hinge,
            "upper_hinge": report.outliers.upper_hinge,
            "group_separators": [
                {
                    "attribute": s.attribute,
                    "groups": [
                        {"value": value, "projects": list(pids)} for value, pids in s.partition
                    ],
                    "p_value": s.p_value,
                }
                for s in report.outliers.separators
            ],
            "skipped_attributes": list(report.outliers.skipped_attributes),
        },
        "evaluation": _evaluation_dict(report.evaluation),
        "suggestions": [
            {"kind": s.kind, "subject": s.subject, "evidence": s.evidence}
            for s in report.suggestions
        ],
        "stop": {"stop": report.stop.stop, "rationale": report.stop.rationale},
    }
    if config is None:
        del document["config"]
    return document


def summary_text(report: IterationReport, config: IterationConfig | None = None) -> str:
    """Human-readable one-page summary of an iteration."""
    lines: list[str] = []
    lines.append("ITERATION SUMMARY")
    lines.append("=" * 60)
    if config is not None:
        lines.append(
            f"samples={config.plan.count} method={config.plan.method} "
            f"seed={config.seed.master_seed} scope={config.scope_policy}"
        )
        lines.append("")

    findings = report.data_quality.findings
    lines.append(f"Data quality: {'no findings' if not findings else f'{len(findings)} finding(s)'}")
    for f in findings:
        lines.append(f"  - {f}")
    lines.append("")

    lines.append(
        "Effort scope: common phases "
        + (", ".join(sorted(report.scope.common_scope)) or "(none)")
    )
    if report.scope.deviants:
        lines.append("  deviating projects: " + ", ".join(report.scope.deviants))
    lines.append("")

    lines.append(f"Calibration: nominal productivity {report.calibration.nominal_productivity:.6g}")
    lines.append("")

    lines.append("Driver ranking (|rho| vs implied overhead):")
    for e in report.ranking.entries:
        if e.rho is None:
            lines.append(f"  {e.candidate_id:<28} undefined ({e.note})")
        else:
            marker = "*" if e.selected else " "
            lines.append(
                f" {marker}{e.candidate_id:<28} rho={e.rho:+.3f}  p={e.p_value:.4f}"
            )
    if report.associations:
        lines.append("Associated candidate pairs (interaction or redundancy):")
        for a in report.associations:
            lines.append(f"  {a.first} ~ {a.second}  rho={a.rho:+.3f}")
    lines.append("")

    if report.outliers.flagged:
        lines.append(
            "Productivity outliers: "
            + ", ".join(report.outliers.flagged)
            + f"  (fences [{report.outliers.lower_fence:.6g}, {report.outliers.upper_fence:.6g}])"
        )
    else:
        lines.append("Productivity outliers: none")
    for s in report.outliers.separators:
        groups = " vs ".join(f"{value}({len(pids)})" for value, pids in s.partition)
        lines.append(f"  group separator: {s.attribute} [{groups}] p={s.p_value:.4f}")
    lines.append("")

    ev = report.evaluation
    lines.append("Leave-one-out evaluation:")
    lines.append(
        f"  MMRE {ev.mmre:.4f} | MdMRE {ev.mdmre:.4f} | "
        f"Pred({ev.pred_threshold:g}) {ev.pred:.2f} | consistency {ev.consistency:.4f}"
    )
    for pid, reason in ev.excluded:
        lines.append(f"  excluded {pid}: {reason}")
    lines.append("")

    if report.suggestions:
        lines.append("Refinement suggestions:")
        for s in report.suggestions:
            lines.append(f"  [{s.kind}] {s.subject}: {s.evidence}")
    else:
        lines.append("Refinement suggestions: none")
    lines.append("")
    lines.append(f"Stop decision: {'STOP' if report.stop.stop else 'CONTINUE'} - {report.stop.rationale}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ReportBundle:
    report_path: Path
    summary_path: Path
    cdf_paths: tuple[Path, ...]
    figure_paths: tuple[Path, ...]


def emit_report(
    report: IterationReport,
    out_dir: "str | Path",
    config: IterationConfig | None = None,
    plots: bool = True,
) -> ReportBundle:
    """Write the full bundle: report.json, summary.txt, cdf/*.csv, figures/."""
    out_dir = Path(out_dir)
    report_path = out_dir / "report.json"
    atomic_write_text(report_path, json.dumps(report_to_dict(report, config), indent=2) + "\n")
    summary_path = out_dir / "summary.txt"
    atomic_write_text(summary_path, summary_text(report, config))
    cdf_paths = []
    for pid in sorted(report.fold_distributions):
        cdf_paths.append(emit_cdf(report.fold_distributions[pid], out_dir / "cdf" / f"{pid}.csv"))
    figure_paths = []
    if plots:
        from . import plots as _plots

        figure_paths.append(
            _plots.plot_accuracy(report.evaluation, out_dir / "figures" / "accuracy.png")
        )
        if report.ranking.entries:
            theta = config.rho_threshold if config is not None else 0.3
            figure_paths.append(
                _plots.plot_ranking(report.ranking, out_dir / "figures" / "driver_ranking.png", theta)
            )
        if report.fold_distributions:
            figure_paths.append(
                _plots.plot_fold_cdfs(report.fold_distributions, out_dir / "figures" / "cost_cdfs.png")
            )
    return ReportBundle(report_path, summary_path, tuple(cdf_paths), tuple(figure_paths))
