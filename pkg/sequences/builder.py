"""
Construcción de secuencias de longitud fija con relleno a la izquierda y
división leave-one-out para predicción del siguiente ítem.
"""

import logging
from dataclasses import dataclass

import numpy as np

from utils.errors import ConfigurationError, UsageError

from .interactions import GroupedInteractions, Interaction, Vocab

logger = logging.getLogger(__name__)


@dataclass
class Sequence:
    """Pares (ítem, comportamiento) de un usuario; el relleno ocupa un prefijo contiguo."""

    user_id: int
    items: np.ndarray
    behaviors: np.ndarray
    length_real: int

    @property
    def length(self) -> int:
        return int(self.items.shape[0])

    def real_positions(self) -> np.ndarray:
        return np.arange(self.length - self.length_real, self.length)

    def copy(self) -> "Sequence":
        return Sequence(self.user_id, self.items.copy(), self.behaviors.copy(), self.length_real)


@dataclass
class NextItemExample:
    """Prefijo con hueco final enmascarado y el par (ítem, comportamiento) retirado."""

    user_id: int
    prefix: Sequence
    target_item: int
    target_behavior: int


def build_sequences(grouped: GroupedInteractions, seq_len: int, vocab: Vocab) -> list[Sequence]:
    """
    Convierte las interacciones agrupadas en secuencias de longitud `seq_len`.

    Los usuarios con más de `seq_len` interacciones conservan las más recientes;
    los más cortos se rellenan por la izquierda con el token de pad.

    Raises:
        ConfigurationError: Si seq_len <= 0
        UsageError: Si algún usuario no tiene interacciones
    """
    if seq_len <= 0:
        raise ConfigurationError(f"La longitud de secuencia debe ser positiva, no {seq_len}")

    sequences = []
    for user_id, records in grouped.items():
        if not records:
            raise UsageError(f"El usuario {user_id} no tiene interacciones")
        sequences.append(_to_sequence(user_id, records[-seq_len:], seq_len, vocab))
    return sequences


def _to_sequence(user_id: int, records: list[Interaction], seq_len: int, vocab: Vocab) -> Sequence:
    n = len(records)
    items = np.full(seq_len, vocab.item_pad, dtype=np.int64)
    behaviors = np.full(seq_len, vocab.behavior_pad, dtype=np.int64)
    if n:
        items[seq_len - n:] = [record.item_id for record in records]
        behaviors[seq_len - n:] = [record.behavior_id for record in records]
    return Sequence(user_id, items, behaviors, n)


def split_leave_one_out(grouped: GroupedInteractions) -> tuple[GroupedInteractions, dict[int, Interaction]]:
    """
    Separa la última interacción de cada usuario como objetivo de test.

    Returns:
        tuple: (historial de entrenamiento, user_id -> interacción retenida).
            Los usuarios con una sola interacción quedan solo en entrenamiento.
    """
    train, held_out = {}, {}
    for user_id, records in grouped.items():
        if len(records) < 2:
            train[user_id] = list(records)
            continue
        train[user_id] = list(records[:-1])
        held_out[user_id] = records[-1]
    return train, held_out


def next_item_split(sequences: list[Sequence], vocab: Vocab) -> tuple[list[NextItemExample], int]:
    """
    Retira el último par real de cada secuencia y añade un hueco final (mask, mask).

    El prefijo conserva la longitud L: las interacciones restantes se desplazan una
    posición a la izquierda y la posición L-1 queda como hueco a predecir.

    Returns:
        tuple: (ejemplos, número de usuarios omitidos por tener < 2 interacciones)
    """
    examples, skipped = [], 0
    for sequence in sequences:
        if sequence.length_real < 2:
            skipped += 1
            continue
        seq_len = sequence.length
        items = np.full(seq_len, vocab.item_pad, dtype=np.int64)
        behaviors = np.full(seq_len, vocab.behavior_pad, dtype=np.int64)
        kept = sequence.length_real - 1
        items[seq_len - 1 - kept:seq_len - 1] = sequence.items[seq_len - 1 - kept:seq_len - 1]
        behaviors[seq_len - 1 - kept:seq_len - 1] = sequence.behaviors[seq_len - 1 - kept:seq_len - 1]
        items[-1] = vocab.item_mask
        behaviors[-1] = vocab.behavior_mask
        examples.append(NextItemExample(
            user_id=sequence.user_id,
            prefix=Sequence(sequence.user_id, items, behaviors, sequence.length_real),
            target_item=int(sequence.items[-1]),
            target_behavior=int(sequence.behaviors[-1]),
        ))
    if skipped:
        logger.warning("next_item_split omitió %d usuarios con menos de 2 interacciones", skipped)
    return examples, skipped


def build_test_examples(grouped: GroupedInteractions, seq_len: int, vocab: Vocab) -> tuple[list[NextItemExample], int]:
    """Triples de test leave-one-out sobre el historial completo e intacto."""
    return next_item_split(build_sequences(grouped, seq_len, vocab), vocab)


def stack_sequences(sequences: list[Sequence]) -> tuple[np.ndarray, np.ndarray]:
    """Apila las secuencias en matrices (N, L) de ítems y comportamientos."""
    items = np.stack([sequence.items for sequence in sequences])
    behaviors = np.stack([sequence.behaviors for sequence in sequences])
    return items, behaviors


def inference_prefix(user_id: int, records: list[Interaction], seq_len: int, vocab: Vocab) -> Sequence:
    """
    Prefijo para recomendar más allá del historial: las últimas L-1 interacciones
    seguidas del hueco (mask, mask) en L-1.

    Raises:
        UsageError: Si el usuario no tiene interacciones
    """
    if not records:
        raise UsageError(f"El usuario {user_id} no tiene interacciones")
    kept = records[-(seq_len - 1):] if seq_len > 1 else []
    sequence = _to_sequence(user_id, kept, seq_len - 1, vocab) if seq_len > 1 else None
    items = np.full(seq_len, vocab.item_mask, dtype=np.int64)
    behaviors = np.full(seq_len, vocab.behavior_mask, dtype=np.int64)
    if sequence is not None:
        items[:-1] = sequence.items
        behaviors[:-1] = sequence.behaviors
    return Sequence(user_id, items, behaviors, len(kept) + 1)
