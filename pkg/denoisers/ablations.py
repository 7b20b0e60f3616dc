"""Denoisers de ablación con la misma firma que MCGLN: MLP y AdaLN."""

import torch
from torch import nn

from utils.errors import ConfigurationError

from .conditioning import TimestepEmbedder
from .mcgln import MCGLNDenoiser


class MLPDenoiser(nn.Module):
    """Red sobre la concatenación [z_t; z_agn; e_t; e_b]."""

    def __init__(self, d: int, num_behaviors: int, hidden_mult: int = 2):
        super().__init__()
        hidden = hidden_mult * d
        self.d = d
        self.num_behaviors = num_behaviors
        self.time_embed = TimestepEmbedder(d)
        self.behavior_cond_table = nn.Embedding(num_behaviors + 1, d)
        self.net = nn.Sequential(
            nn.Linear(4 * d, hidden),
            nn.SiLU(),
            nn.Linear(hidden, hidden),
            nn.SiLU(),
            nn.Linear(hidden, d),
        )
        nn.init.zeros_(self.net[-1].weight)
        nn.init.zeros_(self.net[-1].bias)

    @property
    def null_behavior(self) -> int:
        return self.num_behaviors

    def forward(self, z_t: torch.Tensor, t: torch.Tensor, z_agnostic: torch.Tensor,
                behavior: torch.Tensor) -> torch.Tensor:
        features = torch.cat([z_t, z_agnostic, self.time_embed(t), self.behavior_cond_table(behavior)], dim=-1)
        return self.net(features)


class AdaLNDenoiser(MCGLNDenoiser):
    """MCGLN sin enrutado: la mezcla de expertos pasa a ser una única red."""

    def __init__(self, d: int, num_behaviors: int, depth: int = 2, hidden_mult: int = 2):
        super().__init__(d, num_behaviors, depth=depth, m_s=1, m_p=0,
                         hidden_mult=hidden_mult, routed=False)


def ablation_denoisers(kind: str, d: int, num_behaviors: int, depth: int = 2,
                       hidden_mult: int = 2) -> nn.Module:
    """
    Crea una variante de ablación.

    Raises:
        ConfigurationError: Si el tipo no es 'mlp' ni 'adaln'
    """
    kind = kind.lower()
    if kind == "mlp":
        return MLPDenoiser(d, num_behaviors, hidden_mult)
    if kind == "adaln":
        return AdaLNDenoiser(d, num_behaviors, depth, hidden_mult)
    raise ConfigurationError(f"Tipo de denoiser de ablación desconocido: {kind}")
