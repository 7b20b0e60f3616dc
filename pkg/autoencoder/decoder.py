"""Decodificador del espacio latente al espacio de ítems."""

import torch
import torch.nn.functional as F
from torch import nn


class ItemDecoder(nn.Module):
    """Red de dos capas z -> q; los logits son <q, e_v> contra la tabla de ítems."""

    def __init__(self, d: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(d, d),
            nn.GELU(),
            nn.Linear(d, d),
        )

    def forward(self, z: torch.Tensor, item_table: torch.Tensor, num_items: int) -> torch.Tensor:
        """
        Args:
            z: Latentes (N, d)
            item_table: Pesos de la tabla de ítems (|V|+2, d)
            num_items: |V|; las filas de pad y máscara se excluyen

        Returns:
            torch.Tensor: Logits (N, |V|) sobre el catálogo completo
        """
        return self.net(z) @ item_table[:num_items].T


def mbae_loss(logits: torch.Tensor, target_items: torch.Tensor) -> torch.Tensor:
    """Entropía cruzada media sobre las posiciones enmascaradas."""
    return F.cross_entropy(logits, target_items)
