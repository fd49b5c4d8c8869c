"""Semi-supervised RGB-D saliency detection."""

from ._synsal import (
    ConfigError,
    DatasetEmptyError,
    FormatError,
    NonFiniteError,
    Predictor,
    adaptive_threshold,
    checkpoint_info,
    e_measure,
    evaluate_dataset,
    f_measure,
    generate_toy_dataset,
    mae,
    normalize_config,
    s_measure,
    train,
)

__all__ = [
    "ConfigError",
    "DatasetEmptyError",
    "FormatError",
    "NonFiniteError",
    "Predictor",
    "adaptive_threshold",
    "checkpoint_info",
    "e_measure",
    "evaluate_dataset",
    "f_measure",
    "generate_toy_dataset",
    "mae",
    "normalize_config",
    "s_measure",
    "train",
]
