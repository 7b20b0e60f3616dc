"""Omisión de interacciones de un comportamiento objetivo (escenarios few-shot y zero-shot)."""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from models import ModelFactory
from sequences.interactions import GroupedInteractions
from training.pipeline import PreparedData, prepare_data, train_pipeline
from utils.config import RecConfig
from utils.errors import UsageError
from utils.seeding import numpy_rng

from .evaluator import EvalReport, evaluate

logger = logging.getLogger(__name__)


def few_shot_drop(train: GroupedInteractions, target_behavior: int, ratio: float,
                  seed: int) -> GroupedInteractions:
    """
    Elimina floor(ratio * n_b) interacciones del comportamiento objetivo, elegidas al azar.

    Los demás comportamientos no se tocan; los usuarios que se quedan sin historial desaparecen.

    Raises:
        UsageError: Si ratio no está en [0, 1]
    """
    if not 0.0 <= ratio <= 1.0:
        raise UsageError(f"ratio debe estar en [0, 1], no {ratio}")
    located = [(user_id, index)
               for user_id, records in train.items()
               for index, record in enumerate(records) if record.behavior_id == target_behavior]
    n_drop = math.floor(ratio * len(located))
    rng = numpy_rng(seed, "few_shot", target_behavior)
    dropped = {located[i] for i in rng.choice(len(located), size=n_drop, replace=False).tolist()}

    filtered = {}
    for user_id, records in train.items():
        kept = [record for index, record in enumerate(records) if (user_id, index) not in dropped]
        if kept:
            filtered[user_id] = kept
    logger.info("few-shot: eliminadas %d de %d interacciones del comportamiento %d",
                n_drop, len(located), target_behavior)
    return filtered


@dataclass
class FewShotRow:
    ratio: float
    report: EvalReport
    target_behavior: int

    @property
    def behavior_recall(self) -> dict[str, float]:
        return self.report.per_behavior.get(self.target_behavior, {})


def few_shot_curve(data: PreparedData, config: RecConfig, target_behavior: int,
                   ratios: list[float], out_dir: Optional[Path] = None,
                   progress: bool = False) -> list[FewShotRow]:
    """Reentrena y evalúa para cada ratio de omisión; el test no cambia."""
    rows = []
    guidance = ModelFactory.create_guidance(config)
    for ratio in ratios:
        reduced = few_shot_drop(data.train_grouped, target_behavior, ratio, config.train.seed)
        reduced_data = prepare_data(data.grouped, data.vocab, config, train_grouped=reduced)
        result = train_pipeline(reduced_data, config, progress=progress)
        report = evaluate(result.model, reduced_data.test_examples, config.eval.ks, guidance,
                          config.train.seed, batch_size=config.eval.batch_size)
        rows.append(FewShotRow(ratio, report, target_behavior))
    if out_dir:
        write_few_shot_table(rows, config.eval.ks, Path(out_dir) / f"few_shot_b{target_behavior}.txt")
    return rows


def write_few_shot_table(rows: list[FewShotRow], ks, path: Path) -> Path:
    columns = [f"{name}@{k}" for k in ks for name in ("recall", "ndcg")]
    lines = ["ratio " + " ".join(f"b_{column} all_{column}" for column in columns)]
    for row in rows:
        cells = []
        for column in columns:
            cells.append(repr(row.behavior_recall.get(column, 0.0)))
            cells.append(repr(row.report.overall[column]))
        lines.append(f"{row.ratio!r} " + " ".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return Path(path)
