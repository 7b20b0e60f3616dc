"""Entrenamiento por etapas, checkpoints e inferencia guiada."""
from .checkpoint_manager import Checkpoint, CheckpointManager, decode_tensors, encode_tensors
from .inference import infer_for_example, infer_next_item, rank_items, score_prefixes, user_generator
from .pipeline import PipelineResult, PreparedData, continue_pipeline, load_dataset, prepare_data, train_pipeline
from .stages import (
    StageResult,
    TrainingLog,
    diffusion_pairs,
    frozen,
    sample_diffusion_inputs,
    stage1_pretrain,
    stage2_train_ldm,
    stage3_finetune,
)

__all__ = [
    "Checkpoint",
    "CheckpointManager",
    "decode_tensors",
    "encode_tensors",
    "infer_for_example",
    "infer_next_item",
    "rank_items",
    "score_prefixes",
    "user_generator",
    "PipelineResult",
    "PreparedData",
    "continue_pipeline",
    "load_dataset",
    "prepare_data",
    "train_pipeline",
    "StageResult",
    "TrainingLog",
    "diffusion_pairs",
    "frozen",
    "sample_diffusion_inputs",
    "stage1_pretrain",
    "stage2_train_ldm",
    "stage3_finetune",
]
