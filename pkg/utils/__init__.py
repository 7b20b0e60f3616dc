"""Utils package for shared utilities."""
from .config import (
    DataConfig,
    DenoiserConfig,
    DiffusionConfig,
    EvalConfig,
    ModelConfig,
    RecConfig,
    TrainConfig,
    get_device,
    get_output_dir,
    parse_overrides,
    read_key_values,
)
from .errors import (
    CheckpointError,
    ConfigurationError,
    DataFormatError,
    EmptyDatasetError,
    RecError,
    TrainingDivergedError,
    UsageError,
    VocabularyError,
)
from .seeding import derive_seed, numpy_rng, seed_everything, torch_generator

__all__ = [
    "DataConfig",
    "DenoiserConfig",
    "DiffusionConfig",
    "EvalConfig",
    "ModelConfig",
    "RecConfig",
    "TrainConfig",
    "get_device",
    "get_output_dir",
    "parse_overrides",
    "read_key_values",
    "CheckpointError",
    "ConfigurationError",
    "DataFormatError",
    "EmptyDatasetError",
    "RecError",
    "TrainingDivergedError",
    "UsageError",
    "VocabularyError",
    "derive_seed",
    "numpy_rng",
    "seed_everything",
    "torch_generator",
]
