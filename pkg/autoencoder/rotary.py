"""
Codificaciones posicionales rotatorias: RoPE y su variante con escalado por comportamiento.

Cada par consecutivo (x_2j, x_2j+1) se rota un ángulo m * theta_j; en la variante con
comportamiento, ambos componentes del par se multiplican además por un factor positivo
h_j(b). Un escalado real por par conmuta con la rotación del par, así que el producto
interno entre posiciones m y n sigue dependiendo solo de m - n.
"""

from typing import Optional

import torch
import torch.nn.functional as F
from torch import nn


def rotary_frequencies(d_k: int, base: float = 10000.0,
                       dtype: torch.dtype = torch.float32,
                       device: Optional[torch.device] = None) -> torch.Tensor:
    """theta_j = base^(-2j/d_k) para j = 0..d_k/2-1."""
    exponents = torch.arange(0, d_k, 2, dtype=dtype, device=device) / d_k
    return base ** (-exponents)


def rope_transform(x: torch.Tensor, positions: torch.Tensor, theta: torch.Tensor) -> torch.Tensor:
    """
    Rota cada par consecutivo de la última dimensión.

    Args:
        x: Tensor (..., d_k) con d_k par
        positions: Posiciones difundibles contra x[..., 0]
        theta: Frecuencias (d_k/2,)

    Returns:
        torch.Tensor: Tensor rotado con la misma forma que x
    """
    if x.shape[-1] % 2 != 0:
        raise ValueError("La última dimensión debe ser par para la rotación por pares")
    angles = positions.to(x.dtype).unsqueeze(-1) * theta.to(x.dtype)
    cos, sin = torch.cos(angles), torch.sin(angles)
    x_even, x_odd = x[..., 0::2], x[..., 1::2]
    rotated_even = x_even * cos - x_odd * sin
    rotated_odd = x_even * sin + x_odd * cos
    return torch.stack((rotated_even, rotated_odd), dim=-1).flatten(-2)


def barope_transform(x: torch.Tensor, positions: torch.Tensor, scales: torch.Tensor,
                     theta: torch.Tensor) -> torch.Tensor:
    """
    RoPE seguido del escalado por pares dependiente del comportamiento.

    Args:
        x: Tensor (..., d_k)
        positions: Posiciones difundibles contra x[..., 0]
        scales: Factores positivos (..., d_k/2), uno por par rotado
        theta: Frecuencias (d_k/2,)
    """
    return rope_transform(x, positions, theta) * scales.repeat_interleave(2, dim=-1)


class BehaviorModulation(nn.Module):
    """
    Red h(.) que transforma el embedding de un comportamiento en d_k/2 factores
    estrictamente positivos por cabeza (salida softplus).
    """

    def __init__(self, d: int, heads: int, d_k: int):
        super().__init__()
        self.heads = heads
        self.pairs = d_k // 2
        self.net = nn.Sequential(
            nn.Linear(d, d),
            nn.GELU(),
            nn.Linear(d, heads * self.pairs),
        )
        # Con identity=True emite exactamente 1 (degenera en RoPE)
        self.identity = False

    def forward(self, behavior_embeddings: torch.Tensor) -> torch.Tensor:
        """
        Args:
            behavior_embeddings: (..., d)

        Returns:
            torch.Tensor: Factores (..., heads, d_k/2)
        """
        shape = behavior_embeddings.shape[:-1] + (self.heads, self.pairs)
        if self.identity:
            return torch.ones(shape, dtype=behavior_embeddings.dtype, device=behavior_embeddings.device)
        return F.softplus(self.net(behavior_embeddings)).reshape(shape)
