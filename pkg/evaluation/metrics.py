"""Métricas de ranking con un único ítem relevante (leave-one-out)."""

import math
from typing import Optional

import torch


def target_ranks(logits: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    """
    Posición (desde 1) del ítem objetivo en el ranking de cada fila.

    Coherente con el desempate por id ascendente: cuentan los ítems con logit mayor y
    los de logit igual con id menor.
    """
    target_logits = logits.gather(1, targets.unsqueeze(1))
    ids = torch.arange(logits.shape[1], device=logits.device).unsqueeze(0)
    ahead = (logits > target_logits) | ((logits == target_logits) & (ids < targets.unsqueeze(1)))
    return ahead.sum(dim=1) + 1


def recall_at_k(rank: Optional[int], k: int) -> float:
    """1 si rank <= k; None representa un fallo explícito."""
    if rank is None:
        return 0.0
    return 1.0 if rank <= k else 0.0


def ndcg_at_k(rank: Optional[int], k: int) -> float:
    """1 / log2(rank + 1) dentro del corte; IDCG = 1."""
    if rank is None or rank > k:
        return 0.0
    return 1.0 / math.log2(rank + 1)
