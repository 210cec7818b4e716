"""mosaiq: reward-model toolkit for interior-image aesthetic quality.

Pipeline, end to end: clean rater annotations into mean opinion
scores, turn a scored model's rating-word logits into continuous
per-dimension scores, learn Bradley-Terry fusion weights from pairwise
preferences, evaluate against MOS, and feed fused scores to Best-of-N
selection and group-relative RL rewards. A CLI (`mosaiq`) and an HTTP
service expose the same operations.
"""

from .cleaning import (
    BatchAuditResult,
    CleaningConfig,
    RaterReport,
    aggregate_mos,
    audit_batches,
    mitigate_outliers,
    rater_reliability,
    split_train_test,
)
from .fusion import (
    FitConfig,
    FitResult,
    TieMode,
    bt_gradient,
    bt_loss,
    fit_weights,
    fuse,
    fused_scores_for_pairs,
)
from .metrics import (
    MetricReport,
    RankEvalResult,
    benchmark_report,
    optimize_threshold,
    plcc,
    rank_accuracy,
    render_metric_table,
    srcc,
    threshold_grid,
)
from .model import (
    CANONICAL_DIMENSIONS,
    AnnotationRecord,
    Dimension,
    FusionWeights,
    MosRecord,
    PreferenceLabel,
    PreferencePair,
    RatingDistribution,
    RatingLevel,
    SchemaError,
    ScoreVector,
    ValidationReport,
    validate_dataset,
)
from .prompts import (
    DIMENSION_CRITERIA,
    IMAGE_TOKEN,
    PromptTemplate,
    PromptType,
    RATING_GUIDE,
    build_query,
    dimension_tag,
)
from .rewards import (
    CandidateSet,
    GrpoStep,
    RewardGroup,
    RunningRewardStats,
    best_of_n,
    grpo_advantages,
    grpo_surrogate,
    rescale_to_unit,
    reward_stats,
)
from .scoring import (
    BackendConfig,
    BackendMode,
    LogitRecord,
    OfflineLogitStore,
    Scorer,
    ScoringError,
    expected_score,
    normalize_logits,
    score_from_logits,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotationRecord",
    "BackendConfig",
    "BackendMode",
    "BatchAuditResult",
    "CANONICAL_DIMENSIONS",
    "CandidateSet",
    "CleaningConfig",
    "DIMENSION_CRITERIA",
    "Dimension",
    "FitConfig",
    "FitResult",
    "FusionWeights",
    "GrpoStep",
    "IMAGE_TOKEN",
    "LogitRecord",
    "MetricReport",
    "MosRecord",
    "OfflineLogitStore",
    "PreferenceLabel",
    "PreferencePair",
    "PromptTemplate",
    "PromptType",
    "RATING_GUIDE",
    "RankEvalResult",
    "RaterReport",
    "RatingDistribution",
    "RatingLevel",
    "RewardGroup",
    "RunningRewardStats",
    "SchemaError",
    "ScoreVector",
    "Scorer",
    "ScoringError",
    "TieMode",
    "ValidationReport",
    "aggregate_mos",
    "audit_batches",
    "benchmark_report",
    "best_of_n",
    "bt_gradient",
    "bt_loss",
    "build_query",
    "dimension_tag",
    "expected_score",
    "fit_weights",
    "fuse",
    "fused_scores_for_pairs",
    "grpo_advantages",
    "grpo_surrogate",
    "mitigate_outliers",
    "normalize_logits",
    "optimize_threshold",
    "plcc",
    "rank_accuracy",
    "rater_reliability",
    "render_metric_table",
    "rescale_to_unit",
    "reward_stats",
    "score_from_logits",
    "split_train_test",
    "srcc",
    "threshold_grid",
    "validate_dataset",
]
