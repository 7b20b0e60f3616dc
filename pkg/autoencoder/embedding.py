"""Capa de embedding consciente del comportamiento."""

import torch
from torch import nn

from sequences.interactions import Vocab
from utils.errors import UsageError


class BehaviorAwareEmbedding(nn.Module):
    """
    Tablas de ítems, comportamientos y (solo en modo APE) posiciones.

    Las filas de pad son cero y no reciben gradiente; las posiciones de relleno se
    detectan por el token de comportamiento y producen vectores nulos.
    """

    def __init__(self, vocab: Vocab, seq_len: int, d: int, position_mode: str,
                 include_behavior_in_input: bool = True):
        super().__init__()
        self.vocab = vocab
        self.position_mode = position_mode
        self.include_behavior_in_input = include_behavior_in_input
        self.item_table = nn.Embedding(vocab.item_table_size, d, padding_idx=vocab.item_pad)
        self.behavior_table = nn.Embedding(vocab.behavior_table_size, d, padding_idx=vocab.behavior_pad)
        self.position_table = nn.Embedding(seq_len, d) if position_mode == "ape" else None
        self.reset_parameters()

    def reset_parameters(self) -> None:
        tables = [(self.item_table, self.vocab.item_pad), (self.behavior_table, self.vocab.behavior_pad)]
        for table, pad in tables:
            nn.init.normal_(table.weight, std=0.02)
            with torch.no_grad():
                table.weight[pad].zero_()
        if self.position_table is not None:
            nn.init.normal_(self.position_table.weight, std=0.02)

    def padding_mask(self, behaviors: torch.Tensor) -> torch.Tensor:
        """True en las posiciones de relleno."""
        return behaviors == self.vocab.behavior_pad

    def forward(self, items: torch.Tensor, behaviors: torch.Tensor) -> torch.Tensor:
        """
        Args:
            items: (B, L) tokens de ítem
            behaviors: (B, L) tokens de comportamiento

        Returns:
            torch.Tensor: H de forma (B, L, d)

        Raises:
            UsageError: Si algún token cae fuera de su tabla
        """
        if items.min() < 0 or items.max() >= self.vocab.item_table_size:
            raise UsageError("Token de ítem fuera del rango de la tabla de embeddings")
        if behaviors.min() < 0 or behaviors.max() >= self.vocab.behavior_table_size:
            raise UsageError("Token de comportamiento fuera del rango de la tabla de embeddings")

        hidden = self.item_table(items)
        if self.position_mode == "ape" or self.include_behavior_in_input:
            hidden = hidden + self.behavior_table(behaviors)
        if self.position_table is not None:
            positions = torch.arange(items.shape[-1], device=items.device)
            hidden = hidden + self.position_table(positions)
        keep = (~self.padding_mask(behaviors)).unsqueeze(-1).to(hidden.dtype)
        return hidden * keep
