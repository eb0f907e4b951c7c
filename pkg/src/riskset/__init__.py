"""riskset: post-hoc set-valued classification with per-class risk control.

Given a blackbox classifier's score matrix on a labeled validation set,
the toolkit searches per-class thresholds so that the induced set
classifier's class-specific (or overall) misclassification risks sit near
user-chosen targets, and ships the baselines, concentration bounds,
synthetic generator and benchmark harness needed to study the trade-offs.
"""

from .baselines import SgrResult, label_calibrate, scrib_minus_calibrate, sgr_calibrate, sgr_evaluate
from .bench import SweepResult, ambiguity_correlation, auc_sweep, risk_report
from .bounds import TailBoundQuery, bernoulli_kl, invert_epsilon, risk_tail_bound
from .core import (
    NEG_INF,
    POS_INF,
    EvalSummary,
    LabeledDataset,
    PenaltyWeights,
    RiskTargets,
    ScoreMatrix,
    evaluate,
    excess_risk,
    membership_matrix,
    predict_set,
    summarize_sets,
)
from .errors import (
    ConfigError,
    DegenerateStatisticsError,
    DimensionError,
    DomainError,
    ReportError,
    ResourceError,
    RisksetError,
    ValidationError,
)
from .loss import CHANCE, CLASS_SPECIFIC, LABEL, OVERALL, SIZE, LossConfig, loss
from .search import (
    CalibrationResult,
    DescentResult,
    SortedColumns,
    calibrate,
    coordinate_descent,
    exhaustive_oracle,
    quicksearch,
)
from .synth import SynthSpec, generate, reference_spec

__version__ = "0.1.0"

__all__ = [
    "CHANCE",
    "CLASS_SPECIFIC",
    "LABEL",
    "NEG_INF",
    "OVERALL",
    "POS_INF",
    "SIZE",
    "CalibrationResult",
    "ConfigError",
    "DegenerateStatisticsError",
    "DescentResult",
    "DimensionError",
    "DomainError",
    "EvalSummary",
    "LabeledDataset",
    "LossConfig",
    "PenaltyWeights",
    "ReportError",
    "ResourceError",
    "RiskTargets",
    "RisksetError",
    "ScoreMatrix",
    "SgrResult",
    "SortedColumns",
    "SweepResult",
    "SynthSpec",
    "TailBoundQuery",
    "ValidationError",
    "ambiguity_correlation",
    "auc_sweep",
    "bernoulli_kl",
    "calibrate",
    "coordinate_descent",
    "evaluate",
    "excess_risk",
    "exhaustive_oracle",
    "generate",
    "invert_epsilon",
    "label_calibrate",
    "loss",
    "membership_matrix",
    "predict_set",
    "quicksearch",
    "reference_spec",
    "risk_report",
    "risk_tail_bound",
    "scrib_minus_calibrate",
    "sgr_calibrate",
    "sgr_evaluate",
    "summarize_sets",
]
