"""Calendario de ruido y proceso directo en forma cerrada."""

from dataclasses import dataclass
from typing import Union

import torch

from utils.errors import ConfigurationError, UsageError

TimeIndex = Union[int, torch.Tensor]


@dataclass
class NoiseSchedule:
    """
    Coeficientes indexados por t = 0..T; la entrada 0 es el estado limpio
    (alpha_bar[0] = 1, beta[0] = 0, sigma[0] = 0).
    """

    T: int
    beta: torch.Tensor
    alpha: torch.Tensor
    alpha_bar: torch.Tensor
    sigma: torch.Tensor

    def gather(self, values: torch.Tensor, t: TimeIndex, like: torch.Tensor) -> torch.Tensor:
        """Coeficiente en t, con forma difundible contra `like` (lote en la primera dimensión)."""
        if isinstance(t, int):
            return values[t].to(like.dtype)
        selected = values.to(like.device)[t.long()].to(like.dtype)
        return selected.reshape(selected.shape + (1,) * (like.dim() - selected.dim()))

    def check(self, t: TimeIndex, low: int = 1) -> None:
        bad = (t < low or t > self.T) if isinstance(t, int) else bool(((t < low) | (t > self.T)).any())
        if bad:
            raise UsageError(f"t fuera de rango [{low}, {self.T}]")


def make_schedule(T: int, beta_start: float = 1e-4, beta_end: float = 0.02,
                  kind: str = "linear") -> NoiseSchedule:
    """
    Construye el calendario lineal de beta (extremos incluidos) en doble precisión.

    Raises:
        ConfigurationError: Si los extremos o T son inválidos
    """
    if kind != "linear":
        raise ConfigurationError(f"Tipo de calendario no soportado: {kind}")
    if T < 1:
        raise ConfigurationError("T debe ser >= 1")
    if not 0.0 < beta_start <= beta_end < 1.0:
        raise ConfigurationError("Se requiere 0 < beta_start <= beta_end < 1")

    betas = torch.linspace(beta_start, beta_end, T, dtype=torch.float64)
    beta = torch.cat([torch.zeros(1, dtype=torch.float64), betas])
    alpha = 1.0 - beta
    alpha_bar = torch.cumprod(alpha, dim=0)

    sigma = torch.zeros(T + 1, dtype=torch.float64)
    # Desviación posterior de DDPM; sigma_1 = 0 porque alpha_bar_0 = 1
    sigma[1:] = torch.sqrt((1.0 - alpha_bar[:-1]) / (1.0 - alpha_bar[1:]) * beta[1:])
    return NoiseSchedule(T=T, beta=beta, alpha=alpha, alpha_bar=alpha_bar, sigma=sigma)


def forward_sample(z_0: torch.Tensor, t: TimeIndex, epsilon: torch.Tensor,
                   schedule: NoiseSchedule) -> torch.Tensor:
    """z_t = sqrt(alpha_bar_t) z_0 + sqrt(1 - alpha_bar_t) epsilon."""
    if z_0.shape != epsilon.shape:
        raise UsageError("z_0 y epsilon deben tener la misma forma")
    schedule.check(t)
    alpha_bar = schedule.gather(schedule.alpha_bar, t, z_0)
    return alpha_bar.sqrt() * z_0 + (1.0 - alpha_bar).sqrt() * epsilon
