"""
Autoencoder multi-comportamiento: codificador con atención bidireccional y
decodificador al catálogo completo de ítems.
"""

from typing import Optional

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from sequences.builder import NextItemExample, Sequence, stack_sequences
from sequences.interactions import Vocab
from utils.config import ModelConfig
from utils.errors import UsageError

from .decoder import ItemDecoder
from .encoder import LatentPreference, MultiBehaviorEncoder


class MultiBehaviorAutoEncoder(nn.Module):
    def __init__(self, vocab: Vocab, seq_len: int, config: ModelConfig):
        super().__init__()
        self.vocab = vocab
        self.seq_len = seq_len
        self.config = config
        self.encoder = MultiBehaviorEncoder(vocab, seq_len, config)
        self.decoder = ItemDecoder(config.d)

    def encoder_parameters(self):
        return self.encoder.parameters()

    def decoder_parameters(self):
        return self.decoder.parameters()

    def encode(self, items: torch.Tensor, behaviors: torch.Tensor,
               rows: torch.Tensor, cols: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """
        Codifica un lote y extrae latentes en las posiciones (rows[i], cols[i]).

        Returns:
            tuple: (estados ocultos (B, L, d), latentes (N, d))

        Raises:
            UsageError: Si alguna posición de extracción es relleno
        """
        if bool((behaviors[rows, cols] == self.vocab.behavior_pad).any()):
            raise UsageError("No se puede extraer un latente en una posición de relleno")
        hidden, _ = self.encoder(items, behaviors)
        return hidden, hidden[rows, cols]

    def encode_sequence(self, sequence: Sequence, positions: list[int]) -> tuple[torch.Tensor, list[LatentPreference]]:
        """
        Versión de una sola secuencia; cada latente lleva su contexto
        (comportamiento visible o agnóstico).
        """
        device = self.device
        items = torch.as_tensor(sequence.items, device=device).unsqueeze(0)
        behaviors = torch.as_tensor(sequence.behaviors, device=device).unsqueeze(0)
        cols = torch.as_tensor(positions, dtype=torch.long, device=device)
        rows = torch.zeros_like(cols)
        hidden, latents = self.encode(items, behaviors, rows, cols)

        preferences = []
        for latent, position in zip(latents, positions):
            token = int(sequence.behaviors[position])
            behavior = None if token == self.vocab.behavior_mask else token
            preferences.append(LatentPreference(latent, behavior))
        return hidden[0], preferences

    def decode(self, z: torch.Tensor) -> torch.Tensor:
        """Logits (N, |V|) para latentes (N, d)."""
        return self.decoder(z, self.encoder.embedding.item_table.weight, self.vocab.num_items)

    def forward(self, items: torch.Tensor, behaviors: torch.Tensor,
                rows: torch.Tensor, cols: torch.Tensor) -> torch.Tensor:
        _, latents = self.encode(items, behaviors, rows, cols)
        return self.decode(latents)

    @property
    def device(self) -> torch.device:
        return self.encoder.embedding.item_table.weight.device

    @torch.no_grad()
    def attention_maps(self, sequence: Sequence) -> torch.Tensor:
        """
        Media sobre capas y cabezas de las matrices de atención post-softmax.

        Las filas de relleno se devuelven a cero.

        Returns:
            torch.Tensor: Matriz (L, L)
        """
        was_training = self.training
        self.eval()
        try:
            items = torch.as_tensor(sequence.items, device=self.device).unsqueeze(0)
            behaviors = torch.as_tensor(sequence.behaviors, device=self.device).unsqueeze(0)
            _, attention = self.encoder(items, behaviors)
        finally:
            self.train(was_training)

        averaged = torch.stack(attention).mean(dim=(0, 2))[0]
        keep = (behaviors[0] != self.vocab.behavior_pad).unsqueeze(-1).to(averaged.dtype)
        return averaged * keep


def with_slot_behavior(prefix: Sequence, behavior: int) -> Sequence:
    """Copia del prefijo con el comportamiento `behavior` visible en el hueco final."""
    visible = prefix.copy()
    visible.behaviors[-1] = behavior
    return visible


@torch.no_grad()
def preference_similarity(model: MultiBehaviorAutoEncoder, examples: list[NextItemExample],
                          batch_size: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """
    Similitud coseno entre la preferencia agnóstica y cada preferencia específica
    en el hueco de predicción.

    Returns:
        tuple: (matriz usuarios x comportamientos, media por comportamiento)
    """
    if not examples:
        raise UsageError("preference_similarity requiere al menos un ejemplo")
    model.eval()
    num_behaviors = model.vocab.num_behaviors
    slot = model.seq_len - 1
    rows_out = []
    for start in range(0, len(examples), batch_size):
        chunk = examples[start:start + batch_size]
        agnostic = _slot_latents(model, [example.prefix for example in chunk], slot)
        per_behavior = [
            _slot_latents(model, [with_slot_behavior(example.prefix, b) for example in chunk], slot)
            for b in range(num_behaviors)
        ]
        similarity = torch.stack([F.cosine_similarity(agnostic, specific, dim=-1)
                                  for specific in per_behavior], dim=-1)
        rows_out.append(similarity.cpu().numpy())
    matrix = np.concatenate(rows_out)
    return matrix, matrix.mean(axis=0)


def _slot_latents(model: MultiBehaviorAutoEncoder, sequences: list[Sequence], slot: int,
                  device: Optional[torch.device] = None) -> torch.Tensor:
    items, behaviors = stack_sequences(sequences)
    device = device or model.device
    items_t = torch.as_tensor(items, device=device)
    behaviors_t = torch.as_tensor(behaviors, device=device)
    rows = torch.arange(len(sequences), device=device)
    cols = torch.full_like(rows, slot)
    _, latents = model.encode(items_t, behaviors_t, rows, cols)
    return latents
