"""
Diagnósticos de teoría de la información entre ítems y comportamientos.
Las probabilidades son frecuencias empíricas (sin suavizado) y las entropías en bits.
"""

from collections import Counter
from dataclasses import asdict, dataclass
from typing import Iterable

import numpy as np

from sequences.interactions import Interaction
from utils.errors import EmptyDatasetError


@dataclass
class JointCounts:
    counts: Counter
    total: int

    def item_marginal(self) -> Counter:
        marginal = Counter()
        for (item_id, _), count in self.counts.items():
            marginal[item_id] += count
        return marginal

    def behavior_marginal(self) -> Counter:
        marginal = Counter()
        for (_, behavior_id), count in self.counts.items():
            marginal[behavior_id] += count
        return marginal

    def merge(self, other: "JointCounts") -> "JointCounts":
        """Combina dos tablas parciales (conteo por fragmentos)."""
        merged = Counter(self.counts)
        merged.update(other.counts)
        return JointCounts(merged, self.total + other.total)


@dataclass
class EntropyReport:
    H_I: float
    H_B: float
    H_B_given_I: float
    H_I_given_B: float
    MI: float

    def to_key_values(self) -> dict[str, str]:
        return {key: f"{value:.6f}" for key, value in asdict(self).items()}

    def to_record(self) -> str:
        """Registro de una sola línea, legible por máquina."""
        return " ".join(f"{key}={value!r}" for key, value in asdict(self).items())


def joint_counts(interactions: Iterable[Interaction]) -> JointCounts:
    """
    Tabla exacta de frecuencias (item_id, behavior_id).

    Raises:
        EmptyDatasetError: Si no hay interacciones
    """
    counts = Counter((record.item_id, record.behavior_id) for record in interactions)
    total = sum(counts.values())
    if total == 0:
        raise EmptyDatasetError("No hay interacciones para contar")
    return JointCounts(counts, total)


def _entropy_bits(counts: Iterable[int], total: int) -> float:
    values = np.fromiter((c for c in counts if c > 0), dtype=np.float64)
    probabilities = values / total
    return float(-(probabilities * np.log2(probabilities)).sum())


def entropy_report(counts: JointCounts) -> EntropyReport:
    """
    Entropías marginales, condicionales e información mutua.

    Las condicionales se obtienen de la entropía conjunta por la regla de la cadena,
    de modo que MI = H_B - H_B|I = H_I - H_I|B por construcción.
    """
    h_joint = _entropy_bits(counts.counts.values(), counts.total)
    h_items = _entropy_bits(counts.item_marginal().values(), counts.total)
    h_behaviors = _entropy_bits(counts.behavior_marginal().values(), counts.total)

    h_b_given_i = h_joint - h_items
    h_i_given_b = h_joint - h_behaviors
    mutual_information = h_items + h_behaviors - h_joint
    return EntropyReport(
        H_I=h_items,
        H_B=h_behaviors,
        H_B_given_I=h_b_given_i,
        H_I_given_B=h_i_given_b,
        MI=mutual_information,
    )
