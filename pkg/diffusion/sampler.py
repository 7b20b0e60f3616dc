"""
Pasos de reversión DDPM (referencia) y DDIM (determinista, con saltos), guía sin
clasificador y el muestreador completo condicionado por la preferencia agnóstica.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import torch

from utils.errors import ConfigurationError, UsageError

from .schedule import NoiseSchedule, TimeIndex

# denoise(z_t, t, z_agnostic, behavior) -> eps_hat; behavior usa el id nulo = |B|
Denoiser = Callable[[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor], torch.Tensor]


@dataclass
class GuidanceConfig:
    omega: float = 1.0
    null_prob: float = 0.2
    stride: int = 20

    def validate(self, T: int) -> None:
        if self.omega < 0:
            raise ConfigurationError("omega debe ser >= 0")
        if not 0.0 <= self.null_prob <= 1.0:
            raise ConfigurationError("null_prob debe estar en [0, 1]")
        if not 1 <= self.stride <= T or T % self.stride != 0:
            raise ConfigurationError(f"El salto {self.stride} debe dividir a T={T}")


def ddpm_step(z_t: torch.Tensor, t: TimeIndex, eps_hat: torch.Tensor,
              schedule: NoiseSchedule, epsilon: torch.Tensor) -> torch.Tensor:
    """z_{t-1} = (z_t - (1-alpha_t)/sqrt(1-alpha_bar_t) eps_hat) / sqrt(alpha_t) + sigma_t epsilon."""
    schedule.check(t)
    alpha = schedule.gather(schedule.alpha, t, z_t)
    alpha_bar = schedule.gather(schedule.alpha_bar, t, z_t)
    sigma = schedule.gather(schedule.sigma, t, z_t)
    mean = (z_t - (1.0 - alpha) / (1.0 - alpha_bar).sqrt() * eps_hat) / alpha.sqrt()
    return mean + sigma * epsilon


def ddim_step(z_t: torch.Tensor, t: int, t_prev: int, eps_hat: torch.Tensor,
              schedule: NoiseSchedule) -> torch.Tensor:
    """
    Paso determinista t -> t_prev:
    sqrt(ab_prev / ab_t) (z_t - sqrt(1 - ab_t) eps_hat) + sqrt(1 - ab_prev) eps_hat.
    """
    if not 0 <= t_prev < t <= schedule.T:
        raise UsageError(f"Se requiere 0 <= t_prev < t <= T (t={t}, t_prev={t_prev})")
    alpha_bar = schedule.alpha_bar[t].to(z_t.dtype)
    alpha_bar_prev = schedule.alpha_bar[t_prev].to(z_t.dtype)
    z_0_hat = (z_t - (1.0 - alpha_bar).sqrt() * eps_hat) / alpha_bar.sqrt()
    return alpha_bar_prev.sqrt() * z_0_hat + (1.0 - alpha_bar_prev).sqrt() * eps_hat


def cfg_combine(eps_cond: torch.Tensor, eps_uncond: torch.Tensor, omega: float) -> torch.Tensor:
    """eps* = (1 + omega) eps_cond - omega eps_uncond."""
    if omega == 0:
        return eps_cond
    return (1.0 + omega) * eps_cond - omega * eps_uncond


def strided_timesteps(T: int, stride: int) -> list[int]:
    """Rejilla {T, T - stride, ..., stride, 0}."""
    if not 1 <= stride <= T or T % stride != 0:
        raise ConfigurationError(f"El salto {stride} debe dividir a T={T}")
    return list(range(T, -1, -stride))


def sample(z_T: Optional[torch.Tensor], z_agnostic: torch.Tensor, behavior: torch.Tensor,
           denoiser: Denoiser, schedule: NoiseSchedule, guidance: GuidanceConfig,
           null_behavior: int, generator: Optional[torch.Generator] = None) -> torch.Tensor:
    """
    Transfiere la preferencia agnóstica a la específica de `behavior` con DDIM.

    La condición agnóstica se pasa a ambas ramas de la guía; solo la rama
    incondicional recibe el comportamiento nulo.

    Args:
        z_T: Ruido inicial (N, d); si es None se muestrea de N(0, I) con `generator`
        z_agnostic: Preferencias agnósticas (N, d)
        behavior: Comportamientos objetivo (N,)
        denoiser: Predictor de ruido
        schedule: Calendario de ruido
        guidance: omega y salto temporal
        null_behavior: Id del comportamiento nulo
        generator: Generador para z_T

    Returns:
        torch.Tensor: z_0 (N, d)
    """
    guidance.validate(schedule.T)
    if z_T is None:
        z_T = torch.randn(z_agnostic.shape, generator=generator, dtype=z_agnostic.dtype).to(z_agnostic.device)

    grid = strided_timesteps(schedule.T, guidance.stride)
    null = torch.full_like(behavior, null_behavior)
    z = z_T
    for t, t_prev in zip(grid[:-1], grid[1:]):
        t_batch = torch.full((z.shape[0],), t, dtype=torch.long, device=z.device)
        eps_cond = denoiser(z, t_batch, z_agnostic, behavior)
        if guidance.omega == 0:
            eps_hat = eps_cond
        else:
            eps_uncond = denoiser(z, t_batch, z_agnostic, null)
            eps_hat = cfg_combine(eps_cond, eps_uncond, guidance.omega)
        z = ddim_step(z, t, t_prev, eps_hat, schedule)
    return z


def ddpm_sample(z_T: torch.Tensor, z_agnostic: torch.Tensor, behavior: torch.Tensor,
                denoiser: Denoiser, schedule: NoiseSchedule, omega: float,
                null_behavior: int, generator: Optional[torch.Generator] = None) -> torch.Tensor:
    """Muestreador ancestral de referencia, un paso por t = T..1."""
    null = torch.full_like(behavior, null_behavior)
    z = z_T
    for t in range(schedule.T, 0, -1):
        t_batch = torch.full((z.shape[0],), t, dtype=torch.long, device=z.device)
        eps_hat = cfg_combine(denoiser(z, t_batch, z_agnostic, behavior),
                              denoiser(z, t_batch, z_agnostic, null), omega)
        noise = torch.randn(z.shape, generator=generator, dtype=z.dtype).to(z.device)
        z = ddpm_step(z, t, eps_hat, schedule, noise)
    return z
