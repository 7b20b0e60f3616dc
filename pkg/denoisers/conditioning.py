"""Embeddings de paso temporal y red de modulación adaptativa."""

import math

import torch
from torch import nn


def sinusoidal_features(t: torch.Tensor, d: int, max_period: float = 10000.0) -> torch.Tensor:
    """
    d/2 pares (sin, cos) intercalados a frecuencias geométricas.

    Args:
        t: Pasos (N,)
        d: Dimensión de salida (par)

    Returns:
        torch.Tensor: (N, d); en t = 0 vale (0, 1, 0, 1, ...)
    """
    half = d // 2
    freqs = torch.exp(-math.log(max_period) * torch.arange(half, dtype=torch.float64) / half)
    args = t.to(torch.float64).unsqueeze(-1) * freqs.to(t.device)
    features = torch.stack((torch.sin(args), torch.cos(args)), dim=-1).flatten(-2)
    if d % 2:
        features = torch.cat([features, torch.zeros_like(features[..., :1])], dim=-1)
    return features


class TimestepEmbedder(nn.Module):
    """Características sinusoidales seguidas de una pequeña red."""

    def __init__(self, d: int):
        super().__init__()
        self.d = d
        self.mlp = nn.Sequential(
            nn.Linear(d, d),
            nn.SiLU(),
            nn.Linear(d, d),
        )

    def forward(self, t: torch.Tensor) -> torch.Tensor:
        dtype = self.mlp[0].weight.dtype
        return self.mlp(sinusoidal_features(t, self.d).to(dtype))


class ModulationNet(nn.Module):
    """
    (e_t + e_b) -> (alpha_s, beta_s, gamma_s, alpha_t', beta_t', gamma_t').

    La última capa se inicializa a cero: las seis salidas son nulas al empezar.
    """

    def __init__(self, d: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.SiLU(),
            nn.Linear(d, 6 * d),
        )
        nn.init.zeros_(self.net[1].weight)
        nn.init.zeros_(self.net[1].bias)

    def forward(self, condition: torch.Tensor) -> tuple[torch.Tensor, ...]:
        return self.net(condition).chunk(6, dim=-1)
