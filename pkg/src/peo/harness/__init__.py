from .experiments import (
    ExperimentKind,
    ExperimentPlan,
    ExperimentResult,
    LR_SWEEP_VALUES,
    Variant,
    WEIGHT_GRID_VALUES,
    ablation_variants,
    benchmark_variants,
    build_plan,
    derive_prompt_seed,
    get_prompt_preprocessor,
    lr_sweep_variants,
    register_prompt_preprocessor,
    optimizer_cmp_variants,
    run_experiment,
    weight_grid_variants,
)
from .metrics import (
    MetricReport,
    MetricRow,
    aggregate,
    compute_metrics,
    get_hps_scorer,
    register_hps_scorer,
)
from .prompts import PromptOrigin, PromptSet, load_prompt_set, save_prompt_set
from .reports import comparison_markdown, write_bundle
from .simplify import SIMPLIFY_QUERY, simplify_prompts

__all__ = [
    "ExperimentKind",
    "ExperimentPlan",
    "ExperimentResult",
    "LR_SWEEP_VALUES",
    "MetricReport",
    "MetricRow",
    "PromptOrigin",
    "PromptSet",
    "SIMPLIFY_QUERY",
    "Variant",
    "WEIGHT_GRID_VALUES",
    "ablation_variants",
    "aggregate",
    "benchmark_variants",
    "build_plan",
    "comparison_markdown",
    "compute_metrics",
    "derive_prompt_seed",
    "get_hps_scorer",
    "get_prompt_preprocessor",
    "load_prompt_set",
    "lr_sweep_variants",
    "register_prompt_preprocessor",
    "optimizer_cmp_variants",
    "register_hps_scorer",
    "run_experiment",
    "save_prompt_set",
    "simplify_prompts",
    "weight_grid_variants",
    "write_bundle",
]
