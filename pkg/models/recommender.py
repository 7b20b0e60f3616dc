"""
Contenedor del modelo completo: autoencoder, denoiser y calendario de ruido.
Expone los grupos de parámetros que cada etapa de entrenamiento congela o actualiza.
"""

from typing import Optional

import torch
from torch import nn

from autoencoder import MultiBehaviorAutoEncoder
from diffusion import GuidanceConfig, NoiseSchedule, sample
from sequences.builder import Sequence, stack_sequences


class BehaviorTransferRecommender(nn.Module):
    def __init__(self, autoencoder: MultiBehaviorAutoEncoder, denoiser: nn.Module,
                 schedule: NoiseSchedule):
        super().__init__()
        self.autoencoder = autoencoder
        self.denoiser = denoiser
        self.schedule = schedule

    @property
    def vocab(self):
        return self.autoencoder.vocab

    @property
    def seq_len(self) -> int:
        return self.autoencoder.seq_len

    @property
    def null_behavior(self) -> int:
        return self.vocab.num_behaviors

    @property
    def device(self) -> torch.device:
        return self.autoencoder.device

    @property
    def dtype(self) -> torch.dtype:
        return self.autoencoder.encoder.embedding.item_table.weight.dtype

    def parameter_groups(self) -> dict[str, list[nn.Parameter]]:
        """Grupos 'encoder', 'decoder' y 'denoiser'."""
        return {
            "encoder": list(self.autoencoder.encoder_parameters()),
            "decoder": list(self.autoencoder.decoder_parameters()),
            "denoiser": list(self.denoiser.parameters()),
        }

    def slot_latents(self, sequences: list[Sequence]) -> torch.Tensor:
        """Latentes en la última posición (el hueco a predecir) de cada secuencia."""
        items, behaviors = stack_sequences(sequences)
        items_t = torch.as_tensor(items, device=self.device)
        behaviors_t = torch.as_tensor(behaviors, device=self.device)
        rows = torch.arange(len(sequences), device=self.device)
        cols = torch.full_like(rows, self.seq_len - 1)
        _, latents = self.autoencoder.encode(items_t, behaviors_t, rows, cols)
        return latents

    def transfer(self, z_agnostic: torch.Tensor, behavior: torch.Tensor, guidance: GuidanceConfig,
                 z_T: Optional[torch.Tensor] = None,
                 generator: Optional[torch.Generator] = None) -> torch.Tensor:
        """Preferencia agnóstica -> preferencia específica de `behavior` por DDIM guiado."""
        return sample(z_T, z_agnostic, behavior, self.denoiser, self.schedule, guidance,
                      self.null_behavior, generator)
