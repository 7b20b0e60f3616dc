"""Enmascaramiento Cloze de ítems y comportamientos."""

from dataclasses import dataclass

import numpy as np

from utils.errors import UsageError

from .builder import Sequence
from .interactions import Vocab


@dataclass
class MaskedBatch:
    """
    Secuencias con máscaras aplicadas.

    Por secuencia: posiciones enmascaradas, ítems y comportamientos originales en esas
    posiciones, y si el comportamiento también se enmascaró.
    """

    sequences: list[Sequence]
    masked_positions: list[np.ndarray]
    target_items: list[np.ndarray]
    target_behaviors: list[np.ndarray]
    behavior_masked_flags: list[np.ndarray]

    @property
    def num_masked(self) -> int:
        return int(sum(len(positions) for positions in self.masked_positions))

    def flat_index(self) -> tuple[np.ndarray, np.ndarray]:
        """Índices (fila, posición) de todas las posiciones enmascaradas del lote."""
        rows = np.concatenate([np.full(len(p), row, dtype=np.int64)
                               for row, p in enumerate(self.masked_positions)])
        cols = np.concatenate(self.masked_positions).astype(np.int64)
        return rows, cols


def cloze_mask(sequences: list[Sequence], rho: float, sigma: float,
               rng: np.random.Generator, vocab: Vocab) -> MaskedBatch:
    """
    Enmascara cada posición real con probabilidad rho y, en las enmascaradas,
    también el comportamiento con probabilidad sigma.

    Una secuencia sin ninguna máscara recibe una posición real elegida al azar.

    Args:
        sequences: Secuencias de entrada (no se modifican)
        rho: Probabilidad de enmascarar un ítem
        sigma: Probabilidad de enmascarar además su comportamiento
        rng: Generador de numpy
        vocab: Vocabulario con los tokens reservados

    Returns:
        MaskedBatch: Copias enmascaradas y objetivos
    """
    if not 0.0 <= rho <= 1.0 or not 0.0 <= sigma <= 1.0:
        raise UsageError("rho y sigma deben estar en [0, 1]")
    if not sequences:
        raise UsageError("cloze_mask requiere al menos una secuencia")

    masked, positions, items, behaviors, flags = [], [], [], [], []
    for sequence in sequences:
        real = sequence.real_positions()
        if real.size == 0:
            raise UsageError(f"La secuencia del usuario {sequence.user_id} no tiene posiciones reales")
        chosen = real[rng.random(real.size) < rho]
        if chosen.size == 0:
            chosen = np.array([real[rng.integers(real.size)]], dtype=np.int64)
        behavior_flags = rng.random(chosen.size) < sigma

        copy = sequence.copy()
        items.append(copy.items[chosen].copy())
        behaviors.append(copy.behaviors[chosen].copy())
        copy.items[chosen] = vocab.item_mask
        copy.behaviors[chosen[behavior_flags]] = vocab.behavior_mask

        masked.append(copy)
        positions.append(chosen.astype(np.int64))
        flags.append(behavior_flags)

    return MaskedBatch(masked, positions, items, behaviors, flags)
