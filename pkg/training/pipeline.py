"""
Preparación de datos y ejecución encadenada de las tres etapas.
Lo usan el CLI y los arneses de evaluación (few-shot, barridos, ablaciones).
"""

import copy
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from diffusion import GuidanceConfig
from models import BehaviorTransferRecommender, ModelFactory
from sequences.builder import NextItemExample, Sequence, build_sequences, build_test_examples, split_leave_one_out
from sequences.interactions import GroupedInteractions, Vocab, filter_min_interactions, load_interactions, read_header
from utils.config import RecConfig
from utils.errors import EmptyDatasetError

from .checkpoint_manager import CheckpointManager
from .stages import StageResult, stage1_pretrain, stage2_train_ldm, stage3_finetune

logger = logging.getLogger(__name__)


@dataclass
class PreparedData:
    """Historial de entrenamiento, secuencias y ejemplos de test leave-one-out."""

    vocab: Vocab
    grouped: GroupedInteractions
    train_grouped: GroupedInteractions
    train_sequences: list[Sequence]
    test_examples: list[NextItemExample]


@dataclass
class PipelineResult:
    model: BehaviorTransferRecommender
    pretrained: BehaviorTransferRecommender
    stages: list[StageResult] = field(default_factory=list)


def load_dataset(path: Path, config: RecConfig) -> tuple[GroupedInteractions, Vocab]:
    """Lee cabecera + interacciones y aplica data.min_interactions."""
    vocab = read_header(path).vocab
    grouped = filter_min_interactions(load_interactions(path, vocab), config.data.min_interactions)
    if not grouped:
        raise EmptyDatasetError(f"Ningún usuario supera data.min_interactions={config.data.min_interactions}")
    return grouped, vocab


def prepare_data(grouped: GroupedInteractions, vocab: Vocab, config: RecConfig,
                 train_grouped: Optional[GroupedInteractions] = None) -> PreparedData:
    """
    Divide en leave-one-out; los prefijos de test se construyen con el historial completo.

    Args:
        train_grouped: Historial de entrenamiento ya filtrado (few-shot); por defecto la división estándar
    """
    if train_grouped is None:
        train_grouped, _ = split_leave_one_out(grouped)
    seq_len = config.data.seq_len
    test_examples, _ = build_test_examples(grouped, seq_len, vocab)
    return PreparedData(
        vocab=vocab,
        grouped=grouped,
        train_grouped=train_grouped,
        train_sequences=build_sequences(train_grouped, seq_len, vocab),
        test_examples=test_examples,
    )


def train_pipeline(data: PreparedData, config: RecConfig, out_dir: Optional[Path] = None,
                   progress: bool = False) -> PipelineResult:
    """
    Ejecuta las etapas 1-3; si hay out_dir guarda cada checkpoint y su registro.

    Returns:
        PipelineResult: Modelo final y copia del modelo tras la etapa 1
    """
    model = ModelFactory.create_recommender(data.vocab, config)
    guidance = ModelFactory.create_guidance(config)
    sequences = data.train_sequences

    def log_for(stage: int) -> Optional[Path]:
        return Path(out_dir) / f"train_stage{stage}.log" if out_dir else None

    results = [stage1_pretrain(model, sequences, config, log_for(1), progress)]
    _maybe_save(model, config, 1, out_dir)
    pretrained = copy.deepcopy(model)

    results.append(stage2_train_ldm(model, sequences, config, log_for(2), progress))
    _maybe_save(model, config, 2, out_dir)

    results.append(stage3_finetune(model, sequences, config, guidance, log_for(3), progress))
    _maybe_save(model, config, 3, out_dir)
    return PipelineResult(model=model, pretrained=pretrained, stages=results)


def continue_pipeline(model: BehaviorTransferRecommender, data: PreparedData, config: RecConfig,
                      from_stage: int, guidance: Optional[GuidanceConfig] = None,
                      progress: bool = False) -> list[StageResult]:
    """Reentrena a partir de `from_stage` (2 o 3) reutilizando las etapas anteriores."""
    guidance = guidance or ModelFactory.create_guidance(config)
    results = []
    if from_stage <= 2:
        results.append(stage2_train_ldm(model, data.train_sequences, config, progress=progress))
    results.append(stage3_finetune(model, data.train_sequences, config, guidance, progress=progress))
    return results


def _maybe_save(model: BehaviorTransferRecommender, config: RecConfig, stage: int,
                out_dir: Optional[Path]) -> None:
    if out_dir:
        CheckpointManager.save(model, config, stage, Path(out_dir))
