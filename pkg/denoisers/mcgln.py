"""
Denoiser de normalización guiada por múltiples condiciones.

Cada bloque inyecta la preferencia agnóstica concatenándola con z_t, modula con
escala/desplazamiento/compuerta obtenidos de e_t + e_b y enruta por comportamiento
en una mezcla de expertos compartidos y privados.
"""

import torch
from torch import nn

from .conditioning import ModulationNet, TimestepEmbedder
from .experts import BehaviorMoE, Expert


class MCGLNBlock(nn.Module):
    """
    x_hat = x + alpha_s * MLP(Proj(LN([x; z_agn])) * gamma_s + beta_s)
    out   = x_hat + alpha_t' * MoE(LN(x_hat) * gamma_t' + beta_t', b)

    Con routed=False la mezcla se sustituye por una sola red (variante AdaLN).
    """

    def __init__(self, d: int, num_behaviors: int, m_s: int = 1, m_p: int = 1,
                 hidden_mult: int = 2, routed: bool = True):
        super().__init__()
        hidden = hidden_mult * d
        self.routed = routed
        self.condition_norm = nn.LayerNorm(2 * d, elementwise_affine=False)
        self.condition_proj = nn.Linear(2 * d, d)
        self.condition_mlp = Expert(d, hidden)
        self.hidden_norm = nn.LayerNorm(d, elementwise_affine=False)
        self.moe = BehaviorMoE(d, hidden, num_behaviors, m_s, m_p) if routed else Expert(d, hidden)
        self.modulation = ModulationNet(d)

    def forward(self, x: torch.Tensor, z_agnostic: torch.Tensor, condition: torch.Tensor,
                behavior: torch.Tensor) -> torch.Tensor:
        alpha_s, beta_s, gamma_s, alpha_t, beta_t, gamma_t = self.modulation(condition)

        projected = self.condition_proj(self.condition_norm(torch.cat([x, z_agnostic], dim=-1)))
        x_hat = x + alpha_s * self.condition_mlp(projected * gamma_s + beta_s)

        inner = self.hidden_norm(x_hat) * gamma_t + beta_t
        branch = self.moe(inner, behavior) if self.routed else self.moe(inner)
        return x_hat + alpha_t * branch


class MCGLNDenoiser(nn.Module):
    """eps_theta(z_t, t, z_agn, b): `depth` bloques y una cabeza lineal inicializada a cero."""

    def __init__(self, d: int, num_behaviors: int, depth: int = 2, m_s: int = 1, m_p: int = 1,
                 hidden_mult: int = 2, routed: bool = True):
        super().__init__()
        self.d = d
        self.num_behaviors = num_behaviors
        self.time_embed = TimestepEmbedder(d)
        # Fila num_behaviors = condición nula aprendida
        self.behavior_cond_table = nn.Embedding(num_behaviors + 1, d)
        self.blocks = nn.ModuleList([
            MCGLNBlock(d, num_behaviors, m_s, m_p, hidden_mult, routed) for _ in range(depth)
        ])
        self.head = nn.Linear(d, d)
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

    @property
    def null_behavior(self) -> int:
        return self.num_behaviors

    def condition(self, t: torch.Tensor, behavior: torch.Tensor) -> torch.Tensor:
        return self.time_embed(t) + self.behavior_cond_table(behavior)

    def modulation(self, t: torch.Tensor, behavior: torch.Tensor, block: int = 0) -> tuple[torch.Tensor, ...]:
        """Los seis vectores de modulación de un bloque."""
        return self.blocks[block].modulation(self.condition(t, behavior))

    def forward(self, z_t: torch.Tensor, t: torch.Tensor, z_agnostic: torch.Tensor,
                behavior: torch.Tensor) -> torch.Tensor:
        condition = self.condition(t, behavior)
        x = z_t
        for block in self.blocks:
            x = block(x, z_agnostic, condition, behavior)
        return self.head(x)
