"""Volcado, lectura y gráfico de mapas de atención."""

from pathlib import Path
from typing import Sequence as Seq

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from sequences.builder import Sequence  # noqa: E402
from sequences.interactions import Vocab  # noqa: E402


def default_behavior_names(num_behaviors: int) -> list[str]:
    if num_behaviors == 4:
        return ["click", "fav", "cart", "buy"]
    return [f"b{index}" for index in range(num_behaviors)]


def sequence_labels(sequence: Sequence, vocab: Vocab, behavior_names: Seq[str]) -> list[str]:
    """Etiquetas `item_comportamiento` por posición (p. ej. `31_fav`)."""
    labels = []
    for item, behavior in zip(sequence.items, sequence.behaviors):
        item, behavior = int(item), int(behavior)
        if behavior == vocab.behavior_pad:
            labels.append("pad")
            continue
        item_label = "mask" if item == vocab.item_mask else str(item)
        behavior_label = "mask" if behavior == vocab.behavior_mask else behavior_names[behavior]
        labels.append(f"{item_label}_{behavior_label}")
    return labels


def write_attention_grid(matrix: np.ndarray, path: Path) -> Path:
    """Primera línea L y luego L filas de L reales (repr exacto)."""
    matrix = np.asarray(matrix, dtype=np.float64)
    lines = [str(matrix.shape[0])]
    lines.extend(" ".join(repr(float(value)) for value in row) for row in matrix)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return Path(path)


def read_attention_grid(path: Path) -> np.ndarray:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    size = int(lines[0])
    return np.array([[float(value) for value in line.split()] for line in lines[1:size + 1]])


def write_attention_legend(labels: list[str], path: Path) -> Path:
    Path(path).write_text("\n".join(labels) + "\n", encoding="utf-8")
    return Path(path)


def plot_attention_map(matrix: np.ndarray, labels: list[str], path: Path, title: str = "") -> Path:
    """Mapa de calor de la matriz de atención promediada."""
    size = len(labels)
    fig, ax = plt.subplots(figsize=(max(4, size * 0.35), max(4, size * 0.35)))
    image = ax.imshow(np.asarray(matrix), cmap="viridis")
    ax.set_xticks(range(size))
    ax.set_yticks(range(size))
    ax.set_xticklabels(labels, rotation=90, fontsize=6)
    ax.set_yticklabels(labels, fontsize=6)
    if title:
        ax.set_title(title)
    fig.colorbar(image, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
