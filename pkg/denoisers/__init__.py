"""Denoisers condicionados para la difusión latente."""
from .ablations import AdaLNDenoiser, MLPDenoiser, ablation_denoisers
from .conditioning import ModulationNet, TimestepEmbedder, sinusoidal_features
from .experts import BehaviorMoE, Expert, gate
from .mcgln import MCGLNBlock, MCGLNDenoiser

__all__ = [
    "AdaLNDenoiser",
    "MLPDenoiser",
    "ablation_denoisers",
    "ModulationNet",
    "TimestepEmbedder",
    "sinusoidal_features",
    "BehaviorMoE",
    "Expert",
    "gate",
    "MCGLNBlock",
    "MCGLNDenoiser",
]
