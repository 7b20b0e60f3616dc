"""Atención multi-cabeza bidireccional con esquema posicional intercambiable."""

import math
from typing import Optional

import torch
from torch import nn

from utils.errors import UsageError

from .rotary import barope_transform, rope_transform, rotary_frequencies


class MultiHeadSelfAttention(nn.Module):
    """
    softmax((Q W^Q)(K W^K)^T / sqrt(d_k)) (V W^V), concatenado y proyectado con W^O.

    El esquema posicional se aplica solo a las filas de Q y K; V no se toca.
    """

    def __init__(self, d: int, heads: int, position_mode: str, rope_base: float = 10000.0,
                 dropout: float = 0.0):
        super().__init__()
        self.d = d
        self.heads = heads
        self.d_k = d // heads
        self.position_mode = position_mode
        self.rope_base = rope_base
        self.w_q = nn.Linear(d, d, bias=False)
        self.w_k = nn.Linear(d, d, bias=False)
        self.w_v = nn.Linear(d, d, bias=False)
        self.w_o = nn.Linear(d, d, bias=False)
        self.attn_dropout = nn.Dropout(dropout)

    def _split(self, x: torch.Tensor) -> torch.Tensor:
        batch, length, _ = x.shape
        return x.view(batch, length, self.heads, self.d_k).transpose(1, 2)

    def forward(self, hidden: torch.Tensor, padding_mask: torch.Tensor,
                behavior_scales: Optional[torch.Tensor] = None) -> tuple[torch.Tensor, torch.Tensor]:
        """
        Args:
            hidden: (B, L, d)
            padding_mask: (B, L), True en relleno
            behavior_scales: (B, L, heads, d_k/2), requerido en modo barope

        Returns:
            tuple: (salida (B, L, d) con filas de relleno a cero, pesos (B, heads, L, L))

        Raises:
            UsageError: Si alguna secuencia es completamente relleno
        """
        if bool((~padding_mask).sum(dim=-1).eq(0).any()):
            raise UsageError("softmax indefinido: secuencia sin ningún token real")

        batch, length, _ = hidden.shape
        q = self._split(self.w_q(hidden))
        k = self._split(self.w_k(hidden))
        v = self._split(self.w_v(hidden))

        if self.position_mode in ("rope", "barope"):
            positions = torch.arange(length, device=hidden.device)
            theta = rotary_frequencies(self.d_k, self.rope_base, hidden.dtype, hidden.device)
            if self.position_mode == "barope":
                if behavior_scales is None:
                    raise UsageError("El modo barope requiere factores de comportamiento")
                scales = behavior_scales.transpose(1, 2)
                q = barope_transform(q, positions, scales, theta)
                k = barope_transform(k, positions, scales, theta)
            else:
                q = rope_transform(q, positions, theta)
                k = rope_transform(k, positions, theta)

        logits = q @ k.transpose(-2, -1) / math.sqrt(self.d_k)
        logits = logits.masked_fill(padding_mask[:, None, None, :], float("-inf"))
        weights = torch.softmax(logits, dim=-1)

        context = self.attn_dropout(weights) @ v
        context = context.transpose(1, 2).reshape(batch, length, self.d)
        keep = (~padding_mask).unsqueeze(-1).to(hidden.dtype)
        return self.w_o(context) * keep, weights
