from .splits import DEFAULT_FRACTIONS, SplitPlan, make_splits, split_sizes
from .metrics import (
    FoldResult,
    MetricSummary,
    WEIGHTINGS,
    accuracy,
    aggregate,
    confusion_matrix,
    fold_result,
    weighted_kappa,
    weighted_kappa_labels,
)
from .expert import (
    ExpertComparison,
    ExpertReview,
    compare_expert,
    read_expert_file,
    simulate_expert_review,
    write_expert_csv,
)
from .reporting import (
    confusion_filename,
    render_accuracy_chart,
    write_confusion_csv,
    write_results_csv,
)

__all__ = [
    "DEFAULT_FRACTIONS",
    "SplitPlan",
    "make_splits",
    "split_sizes",
    "WEIGHTINGS",
    "accuracy",
    "confusion_matrix",
    "weighted_kappa",
    "weighted_kappa_labels",
    "FoldResult",
    "fold_result",
    "MetricSummary",
    "aggregate",
    "ExpertReview",
    "ExpertComparison",
    "simulate_expert_review",
    "read_expert_file",
    "write_expert_csv",
    "compare_expert",
    "confusion_filename",
    "write_results_csv",
    "write_confusion_csv",
    "render_accuracy_chart",
]
