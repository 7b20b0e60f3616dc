"""
Evaluación estratificada por comportamiento sobre el catálogo completo.
Produce una tabla de texto y un bloque key=value legible por máquina.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence as Seq

import numpy as np
import torch

from diffusion import GuidanceConfig
from models import BehaviorTransferRecommender
from sequences.builder import NextItemExample
from training.inference import score_prefixes, user_generator
from utils.errors import EmptyDatasetError

from .metrics import ndcg_at_k, recall_at_k, target_ranks

logger = logging.getLogger(__name__)


@dataclass
class EvalReport:
    ks: tuple[int, ...]
    num_examples: int
    overall: dict[str, float]
    per_behavior: dict[int, dict[str, float]]
    behavior_counts: dict[int, int]
    config_echo: dict[str, str] = field(default_factory=dict)

    def metric(self, name: str, k: int, behavior: Optional[int] = None) -> float:
        """p. ej. metric('recall', 10) o metric('ndcg', 20, behavior=3)."""
        key = f"{name}@{k}"
        return self.overall[key] if behavior is None else self.per_behavior[behavior][key]

    def to_key_values(self) -> dict[str, str]:
        values = {"num_examples": str(self.num_examples)}
        values.update({key: repr(value) for key, value in self.overall.items()})
        for behavior in sorted(self.per_behavior):
            values[f"behavior.{behavior}.count"] = str(self.behavior_counts[behavior])
            for key, value in self.per_behavior[behavior].items():
                values[f"behavior.{behavior}.{key}"] = repr(value)
        for key, value in self.config_echo.items():
            values[f"config.{key}"] = value
        return values

    def to_text(self, behavior_names: Optional[Seq[str]] = None) -> str:
        columns = [f"{name}@{k}" for k in self.ks for name in ("recall", "ndcg")]
        header = f"{'segmento':<12}{'n':>7}" + "".join(f"{column:>12}" for column in columns)
        lines = [header, "-" * len(header)]
        lines.append(f"{'overall':<12}{self.num_examples:>7}"
                     + "".join(f"{self.overall[column]:>12.4f}" for column in columns))
        for behavior in sorted(self.per_behavior):
            label = behavior_names[behavior] if behavior_names else f"b{behavior}"
            lines.append(f"{label:<12}{self.behavior_counts[behavior]:>7}"
                         + "".join(f"{self.per_behavior[behavior][column]:>12.4f}" for column in columns))
        return "\n".join(lines)

    def write(self, path: Path, behavior_names: Optional[Seq[str]] = None) -> Path:
        """Tabla de texto seguida del bloque key=value."""
        block = "\n".join(f"{key}={value}" for key, value in self.to_key_values().items())
        Path(path).write_text(self.to_text(behavior_names) + "\n\n" + block + "\n", encoding="utf-8")
        return Path(path)


def build_report(ranks: Seq[int], behaviors: Seq[int], ks: Seq[int]) -> EvalReport:
    """Agrega Recall@K y NDCG@K global y por comportamiento."""
    ranks_arr = np.asarray(ranks, dtype=np.int64)
    behaviors_arr = np.asarray(behaviors, dtype=np.int64)

    def summarize(selected: np.ndarray) -> dict[str, float]:
        summary = {}
        for k in ks:
            summary[f"recall@{k}"] = float(np.mean([recall_at_k(int(r), k) for r in selected]))
            summary[f"ndcg@{k}"] = float(np.mean([ndcg_at_k(int(r), k) for r in selected]))
        return summary

    per_behavior, counts = {}, {}
    for behavior in sorted(set(behaviors_arr.tolist())):
        selected = ranks_arr[behaviors_arr == behavior]
        per_behavior[behavior] = summarize(selected)
        counts[behavior] = int(selected.size)
    return EvalReport(tuple(ks), int(ranks_arr.size), summarize(ranks_arr), per_behavior, counts)


@torch.no_grad()
def evaluate(model: BehaviorTransferRecommender, examples: list[NextItemExample], ks: Seq[int],
             guidance: GuidanceConfig, seed: int, use_diffusion: bool = True,
             batch_size: int = 512) -> EvalReport:
    """
    Rankea el catálogo completo para cada triple de test bajo su comportamiento objetivo.

    Args:
        model: Modelo entrenado (etapa 3, o etapa 1 con use_diffusion=False)
        examples: Triples de test
        ks: Cortes de las métricas
        guidance: Parámetros del muestreador
        seed: Semilla; cada usuario usa el flujo ("infer", user_id)
        use_diffusion: False decodifica la preferencia agnóstica directamente
        batch_size: Tamaño de lote de evaluación

    Returns:
        EvalReport: Métricas globales y por comportamiento

    Raises:
        EmptyDatasetError: Si no hay triples de test
    """
    if not examples:
        raise EmptyDatasetError("El conjunto de test está vacío")
    was_training = model.training
    model.eval()
    ranks, behaviors = [], []
    try:
        for start in range(0, len(examples), batch_size):
            chunk = examples[start:start + batch_size]
            generators = [user_generator(seed, example.user_id) for example in chunk]
            logits = score_prefixes(model, [example.prefix for example in chunk],
                                    [example.target_behavior for example in chunk],
                                    guidance, generators, use_diffusion)
            targets = torch.as_tensor([example.target_item for example in chunk], device=logits.device)
            ranks.extend(int(rank) for rank in target_ranks(logits, targets).cpu())
            behaviors.extend(example.target_behavior for example in chunk)
    finally:
        model.train(was_training)
    report = build_report(ranks, behaviors, ks)
    logger.info("evaluación (%s): %s", "difusión" if use_diffusion else "solo autoencoder",
                ", ".join(f"{key}={value:.4f}" for key, value in report.overall.items()))
    return report
