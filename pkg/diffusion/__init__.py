"""Difusión latente: calendario, proceso directo y muestreadores."""
from .sampler import (
    GuidanceConfig,
    cfg_combine,
    ddim_step,
    ddpm_sample,
    ddpm_step,
    sample,
    strided_timesteps,
)
from .schedule import NoiseSchedule, forward_sample, make_schedule

__all__ = [
    "GuidanceConfig",
    "cfg_combine",
    "ddim_step",
    "ddpm_sample",
    "ddpm_step",
    "sample",
    "strided_timesteps",
    "NoiseSchedule",
    "forward_sample",
    "make_schedule",
]
