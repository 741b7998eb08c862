"""Causal cost-overhead modeling, seeded cost simulation, and iterative
model refinement for software effort estimation."""

from .calibration import (
    CalibrationPoint,
    CalibrationResult,
    ProjectRecord,
    fit_nominal_productivity,
    mean_overhead,
)
from .estimation import (
    CostDistribution,
    estimate_cost,
    exceedance_probability,
    point_estimate,
    quantile,
)
from .evaluation import (
    EvaluationReport,
    RefinementSuggestion,
    accuracy_metrics,
    compare_pre_post,
    loocv_evaluate,
    suggest_missing_drivers,
)
from .formats import (
    FormatError,
    load_model,
    load_projects,
    parse_ratings,
    save_model,
    save_projects,
)
from .model import (
    CausalModel,
    CostFactor,
    DirectInfluence,
    InteractionInfluence,
    ModelViolation,
    OrdinalScale,
    TriangularParams,
    evaluate_overhead,
    interpolation_weight,
    overhead_bounds,
    validate_model,
)
from .pipeline import (
    ApplyResult,
    IterationConfig,
    IterationReport,
    StopDecision,
    apply_suggestions,
    calibrate_dataset,
    check_stop_criterion,
    pre_modeling_analysis,
    run_iteration,
)
from .reports import ReportBundle, emit_cdf, emit_report, report_to_dict, summary_text
from .sampling import (
    LATIN_HYPERCUBE,
    MONTE_CARLO,
    OverheadDistribution,
    RandomSeed,
    SamplePlan,
    draw_uniforms,
    simulate_overhead,
    triangular_inverse_cdf,
)
from .screening import (
    DataQualityReport,
    DisagreementReport,
    EffortScope,
    FactorRanking,
    Finding,
    OutlierReport,
    assess_expert_disagreement,
    detect_factor_associations,
    detect_outliers,
    empirical_overhead,
    find_group_separators,
    harmonize_effort_scope,
    rank_cost_drivers,
    validate_data,
)
from .synthetic import (
    GroundTruth,
    SyntheticSpec,
    default_spec,
    default_true_model,
    generate_synthetic_dataset,
)

__version__ = "0.1.0"
