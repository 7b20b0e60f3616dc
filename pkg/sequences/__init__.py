"""Ingesta de interacciones, secuencias de longitud fija y datos sintéticos."""
from .builder import (
    NextItemExample,
    Sequence,
    build_sequences,
    build_test_examples,
    inference_prefix,
    next_item_split,
    split_leave_one_out,
    stack_sequences,
)
from .interactions import (
    DatasetHeader,
    GroupedInteractions,
    Interaction,
    Vocab,
    filter_min_interactions,
    flatten,
    load_interactions,
    read_header,
    write_interactions,
)
from .masking import MaskedBatch, cloze_mask
from .synthetic import (
    PlantedDataset,
    PlantedManifest,
    PlantedConfig,
    gen_synthetic,
    generate_synthetic,
    planted_purity,
    read_manifest,
)

__all__ = [
    "NextItemExample",
    "Sequence",
    "build_sequences",
    "build_test_examples",
    "inference_prefix",
    "next_item_split",
    "split_leave_one_out",
    "stack_sequences",
    "DatasetHeader",
    "GroupedInteractions",
    "Interaction",
    "Vocab",
    "filter_min_interactions",
    "flatten",
    "load_interactions",
    "read_header",
    "write_interactions",
    "MaskedBatch",
    "cloze_mask",
    "PlantedDataset",
    "PlantedManifest",
    "PlantedConfig",
    "gen_synthetic",
    "generate_synthetic",
    "planted_purity",
    "read_manifest",
]
