"""Reliable-seed mining for compositional text-to-image generation.

The package splits into a prompt corpus (catalog, corpus), a judging
protocol over a generation backend (vlm, judging, backends), the miner
itself (mining, stats), training-data curation (curation), and metrics
plus table formatting (metrics, reporting).
"""

from .backends import (
    BackendServer,
    EvalRequest,
    EvalResponse,
    GenerationRequest,
    GenerationResult,
    HealthStatus,
    RemoteBackend,
    SimulatorBackend,
    SimulatorWorld,
    WorldConfig,
    batch_evaluate,
    batch_generate,
    request_key,
    simulate_world,
)
from .catalog import BackgroundSetting, Catalog, CategoryEntry, default_catalog, load_catalog
from .corpus import (
    IN_SCOPE_QUANTITIES,
    KINDS,
    OUT_OF_SCOPE_QUANTITIES,
    RELATION_PHRASES,
    RELATIONS,
    PromptSpec,
    SpatialScene,
    build_corpus,
    build_spatial_scenes,
    compose_multi_category,
    compose_numerical,
    compose_spatial,
    load_prompts,
    parse_prompt,
    task_of,
    write_prompts,
)
from .curation import (
    MODEL_FAMILIES,
    MODES,
    CurationEntry,
    FinetuneConfig,
    curate,
    finetune_config,
    load_manifest,
    manifest_stats,
    write_manifest,
)
from .errors import (
    BackendError,
    CatalogError,
    CorpusError,
    CurationError,
    MetricsError,
    ParseError,
    PlanError,
    ProtocolError,
    QuotaShortfallError,
    RectificationError,
    RunInvalidError,
    SeedmineError,
)
from .judging import Judgment, judge_image, rectified_text
from .metrics import (
    AttentionRecord,
    AttentionSummary,
    EvalSummary,
    accuracy_mae,
    aggregate_aesthetic,
    average_maps,
    binarize_map,
    export_vectors,
    group_attention,
    load_vectors,
    recall,
    spatial_accuracy,
)
from .mining import (
    DEFAULT_SEEDS,
    DEFAULT_TOP_K,
    NUMERICAL_BUDGET,
    SPATIAL_BUDGET,
    TOP_K_ABLATION,
    MiningPlan,
    MiningReport,
    SeedScorecard,
    build_mining_plan,
    generalization_probe,
    mining_prompts,
    rank_seeds,
    run_mining,
    seeds_for_quantity_pair,
    select_top_k,
)
from .reporting import comparison_report, format_numerical_table, format_spatial_table
from .stats import chi_squared_independence, chi_squared_sf, regularized_upper_gamma
from .vlm import (
    GateVerdict,
    NumericVerdict,
    eval_quantity_clamp,
    eval_spatial_queries,
    gate_prompt,
    numerical_query,
    parse_gate,
    parse_quantity,
    parse_yes_no,
    rectify_numerical,
    rectify_spatial,
    spatial_queries,
)

__version__ = "0.1.0"

__all__ = [
    "BackendServer",
    "EvalRequest",
    "EvalResponse",
    "GenerationRequest",
    "GenerationResult",
    "HealthStatus",
    "RemoteBackend",
    "SimulatorBackend",
    "SimulatorWorld",
    "WorldConfig",
    "batch_evaluate",
    "batch_generate",
    "request_key",
    "simulate_world",
    "BackgroundSetting",
    "Catalog",
    "CategoryEntry",
    "default_catalog",
    "load_catalog",
    "IN_SCOPE_QUANTITIES",
    "KINDS",
    "OUT_OF_SCOPE_QUANTITIES",
    "RELATIONS",
    "RELATION_PHRASES",
    "PromptSpec",
    "SpatialScene",
    "build_corpus",
    "build_spatial_scenes",
    "compose_multi_category",
    "compose_numerical",
    "compose_spatial",
    "load_prompts",
    "parse_prompt",
    "task_of",
    "write_prompts",
    "MODES",
    "MODEL_FAMILIES",
    "CurationEntry",
    "FinetuneConfig",
    "curate",
    "finetune_config",
    "load_manifest",
    "manifest_stats",
    "write_manifest",
    "SeedmineError",
    "CatalogError",
    "CorpusError",
    "CurationError",
    "MetricsError",
    "ParseError",
    "PlanError",
    "ProtocolError",
    "QuotaShortfallError",
    "RectificationError",
    "RunInvalidError",
    "BackendError",
    "Judgment",
    "judge_image",
    "rectified_text",
    "AttentionRecord",
    "AttentionSummary",
    "EvalSummary",
    "accuracy_mae",
    "aggregate_aesthetic",
    "average_maps",
    "binarize_map",
    "export_vectors",
    "group_attention",
    "load_vectors",
    "recall",
    "spatial_accuracy",
    "DEFAULT_SEEDS",
    "DEFAULT_TOP_K",
    "NUMERICAL_BUDGET",
    "SPATIAL_BUDGET",
    "TOP_K_ABLATION",
    "MiningPlan",
    "MiningReport",
    "SeedScorecard",
    "build_mining_plan",
    "generalization_probe",
    "mining_prompts",
    "rank_seeds",
    "run_mining",
    "seeds_for_quantity_pair",
    "select_top_k",
    "comparison_report",
    "format_numerical_table",
    "format_spatial_table",
    "chi_squared_independence",
    "chi_squared_sf",
    "regularized_upper_gamma",
    "GateVerdict",
    "NumericVerdict",
    "eval_quantity_clamp",
    "eval_spatial_queries",
    "gate_prompt",
    "numerical_query",
    "parse_gate",
    "parse_quantity",
    "parse_yes_no",
    "rectify_numerical",
    "rectify_spatial",
    "spatial_queries",
    "__version__",
]
