"""Prompt embedding optimization against a tripartite aesthetic objective."""

__version__ = "0.1.0"

from .objective import (
    adherence_term,
    cosine_similarity,
    evaluate_objective,
    normalize_aesthetic,
    preservation_term,
)
from .optimizer import (
    Algorithm,
    FailureMode,
    OptimizationTrace,
    OptimizerConfig,
    TerminationReason,
    ascent_update,
    detect_failure,
    peo_optimize,
)
from .types import (
    GeneratedImage,
    ImageFeatures,
    ObjectiveBreakdown,
    ObjectiveWeights,
    PromptEmbedding,
)

__all__ = [
    "Algorithm",
    "FailureMode",
    "GeneratedImage",
    "ImageFeatures",
    "ObjectiveBreakdown",
    "ObjectiveWeights",
    "OptimizationTrace",
    "OptimizerConfig",
    "PromptEmbedding",
    "TerminationReason",
    "__version__",
    "adherence_term",
    "ascent_update",
    "cosine_similarity",
    "detect_failure",
    "evaluate_objective",
    "normalize_aesthetic",
    "peo_optimize",
    "preservation_term",
]
