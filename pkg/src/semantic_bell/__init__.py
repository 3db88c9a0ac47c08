"""Semantic CHSH Bell tests on language-model backends and synthetic agents."""

__version__ = "0.1.0"

from .agents import (
    AuthError,
    Backend,
    BackendDescriptor,
    BackendKind,
    BackendUnavailable,
    LocalStrategy,
    ReplayScript,
    classify,
    complete,
    hidden_variable_outcomes,
    pr_box_sample,
    singlet_sample,
)
from .analysis import (
    correlate_benchmarks,
    distribution_stats,
    meaning_probability,
    order_effects,
    spearman,
    summarize_model,
    violation_rate,
)
from .chsh import (
    CHSHResult,
    DensityMatrix,
    EstimatorMode,
    chsh_literal,
    chsh_signed,
    density_matrix,
    expectation,
    normalize,
)
from .core import (
    MeasurementSetting,
    Outcome,
    SamplingConfig,
    SentenceTemplate,
    SettingLabel,
    TrialRecord,
    WordOrder,
    WordPair,
    default_grid,
    render_sentence,
    validate_lexicon,
)
from .protocol import GridPoint, GridResults, product_vector, run_grid, run_trial
from .store import TrialStore, append_trial, load_trials

__all__ = [
    "__version__",
    "AuthError",
    "Backend",
    "BackendDescriptor",
    "BackendKind",
    "BackendUnavailable",
    "CHSHResult",
    "DensityMatrix",
    "EstimatorMode",
    "GridPoint",
    "GridResults",
    "LocalStrategy",
    "MeasurementSetting",
    "Outcome",
    "ReplayScript",
    "SamplingConfig",
    "SentenceTemplate",
    "SettingLabel",
    "TrialRecord",
    "TrialStore",
    "WordOrder",
    "WordPair",
    "append_trial",
    "chsh_literal",
    "chsh_signed",
    "classify",
    "complete",
    "correlate_benchmarks",
    "default_grid",
    "density_matrix",
    "distribution_stats",
    "expectation",
    "hidden_variable_outcomes",
    "load_trials",
    "meaning_probability",
    "normalize",
    "order_effects",
    "pr_box_sample",
    "product_vector",
    "render_sentence",
    "run_grid",
    "run_trial",
    "singlet_sample",
    "spearman",
    "summarize_model",
    "validate_lexicon",
    "violation_rate",
]
