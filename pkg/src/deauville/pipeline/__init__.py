"""Experiment orchestration: config parsing, staged runner, resume."""

from .config import (
    ARMS,
    AdaptSettings,
    CorpusSource,
    EvalSettings,
    ExperimentConfig,
    ExpertSettings,
    VocabSettings,
    bundled_config_path,
    config_from_mapping_or_yaml,
    derive_seed,
)
from .runner import (
    MANIFEST_FORMAT,
    STAGE_ORDER,
    RunManifest,
    read_preds_csv,
    resume,
    run_experiment,
    run_fold_job,
    write_preds_csv,
)

__all__ = [
    "ARMS",
    "AdaptSettings",
    "CorpusSource",
    "EvalSettings",
    "ExperimentConfig",
    "ExpertSettings",
    "MANIFEST_FORMAT",
    "RunManifest",
    "STAGE_ORDER",
    "VocabSettings",
    "bundled_config_path",
    "config_from_mapping_or_yaml",
    "derive_seed",
    "read_preds_csv",
    "resume",
    "run_experiment",
    "run_fold_job",
    "write_preds_csv",
]
