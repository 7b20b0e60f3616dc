"""Codificador Transformer bidireccional con normalización previa."""

from dataclasses import dataclass
from typing import Optional

import torch
from torch import nn

from sequences.interactions import Vocab
from utils.config import ModelConfig

from .attention import MultiHeadSelfAttention
from .embedding import BehaviorAwareEmbedding
from .rotary import BehaviorModulation


@dataclass
class LatentPreference:
    """
    Vector latente en el espacio unificado de preferencias.

    behavior es None cuando el token de comportamiento en la posición de extracción
    era la máscara (preferencia agnóstica).
    """

    z: torch.Tensor
    behavior: Optional[int]

    @property
    def is_agnostic(self) -> bool:
        return self.behavior is None


class EncoderLayer(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        d = config.d
        self.attention_norm = nn.LayerNorm(d)
        self.attention = MultiHeadSelfAttention(d, config.heads, config.position_mode,
                                                config.rope_base, config.dropout)
        self.ffn_norm = nn.LayerNorm(d)
        self.ffn = nn.Sequential(
            nn.Linear(d, config.ffn_mult * d),
            nn.GELU(),
            nn.Linear(config.ffn_mult * d, d),
        )
        self.dropout = nn.Dropout(config.dropout)

    def forward(self, hidden: torch.Tensor, padding_mask: torch.Tensor,
                behavior_scales: Optional[torch.Tensor]) -> tuple[torch.Tensor, torch.Tensor]:
        attended, weights = self.attention(self.attention_norm(hidden), padding_mask, behavior_scales)
        hidden = hidden + self.dropout(attended)
        hidden = hidden + self.dropout(self.ffn(self.ffn_norm(hidden)))
        keep = (~padding_mask).unsqueeze(-1).to(hidden.dtype)
        return hidden * keep, weights


class MultiBehaviorEncoder(nn.Module):
    """Embedding + l capas de atención; devuelve los estados ocultos de la última capa."""

    def __init__(self, vocab: Vocab, seq_len: int, config: ModelConfig):
        super().__init__()
        self.vocab = vocab
        self.seq_len = seq_len
        self.config = config
        self.embedding = BehaviorAwareEmbedding(vocab, seq_len, config.d, config.position_mode,
                                                config.include_behavior_in_input)
        self.behavior_modulation = (BehaviorModulation(config.d, config.heads, config.d_k)
                                    if config.position_mode == "barope" else None)
        self.input_dropout = nn.Dropout(config.dropout)
        self.layers = nn.ModuleList([EncoderLayer(config) for _ in range(config.layers)])
        self.final_norm = nn.LayerNorm(config.d)

    def forward(self, items: torch.Tensor, behaviors: torch.Tensor) -> tuple[torch.Tensor, list[torch.Tensor]]:
        """
        Args:
            items: (B, L)
            behaviors: (B, L)

        Returns:
            tuple: (estados ocultos (B, L, d), pesos de atención por capa)
        """
        padding_mask = self.embedding.padding_mask(behaviors)
        hidden = self.input_dropout(self.embedding(items, behaviors))

        behavior_scales = None
        if self.behavior_modulation is not None:
            behavior_scales = self.behavior_modulation(self.embedding.behavior_table(behaviors))

        attention = []
        for layer in self.layers:
            hidden, weights = layer(hidden, padding_mask, behavior_scales)
            attention.append(weights)

        keep = (~padding_mask).unsqueeze(-1).to(hidden.dtype)
        return self.final_norm(hidden) * keep, attention
