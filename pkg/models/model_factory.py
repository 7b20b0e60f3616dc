"""
Model factory for creating pre-configured recommender components.
Simplifica la construcción de autoencoder, denoiser y modelo completo a partir de la configuración.
"""

from typing import Optional

import torch
from torch import nn

from autoencoder import MultiBehaviorAutoEncoder
from denoisers import MCGLNDenoiser, ablation_denoisers
from diffusion import GuidanceConfig, NoiseSchedule, make_schedule
from sequences.interactions import Vocab
from utils.config import RecConfig
from utils.errors import ConfigurationError
from utils.seeding import derive_seed

from .recommender import BehaviorTransferRecommender


class ModelFactory:
    """Factory para crear los componentes del recomendador."""

    @staticmethod
    def create_autoencoder(vocab: Vocab, config: RecConfig) -> MultiBehaviorAutoEncoder:
        """
        Crea el autoencoder multi-comportamiento.

        Args:
            vocab: Vocabulario con |V| y |B|
            config: Configuración completa (usa data.seq_len y la sección model)

        Returns:
            MultiBehaviorAutoEncoder: Autoencoder sin entrenar
        """
        return MultiBehaviorAutoEncoder(vocab, config.data.seq_len, config.model)

    @staticmethod
    def create_denoiser(num_behaviors: int, config: RecConfig) -> nn.Module:
        """
        Crea el denoiser indicado en denoiser.kind.

        Args:
            num_behaviors: |B|; el comportamiento nulo es la fila |B|
            config: Configuración completa

        Returns:
            nn.Module: Denoiser con firma (z_t, t, z_agn, behavior)

        Raises:
            ConfigurationError: Si el tipo es desconocido
        """
        settings = config.denoiser
        d = config.model.d
        if settings.kind == "mcgln":
            return MCGLNDenoiser(d, num_behaviors, depth=settings.depth, m_s=settings.m_s,
                                 m_p=settings.m_p, hidden_mult=settings.hidden_mult)
        if settings.kind in ("mlp", "adaln"):
            return ablation_denoisers(settings.kind, d, num_behaviors, settings.depth, settings.hidden_mult)
        raise ConfigurationError(f"denoiser.kind desconocido: {settings.kind}")

    @staticmethod
    def create_schedule(config: RecConfig) -> NoiseSchedule:
        diffusion = config.diffusion
        return make_schedule(diffusion.T, diffusion.beta_start, diffusion.beta_end, diffusion.schedule)

    @staticmethod
    def create_guidance(config: RecConfig) -> GuidanceConfig:
        diffusion = config.diffusion
        return GuidanceConfig(omega=diffusion.omega, null_prob=diffusion.null_prob, stride=diffusion.stride)

    @staticmethod
    def create_recommender(vocab: Vocab, config: RecConfig, seed: Optional[int] = None,
                           dtype: torch.dtype = torch.float32,
                           device: Optional[str] = None) -> BehaviorTransferRecommender:
        """
        Crea el modelo completo con una inicialización reproducible.

        Args:
            vocab: Vocabulario
            config: Configuración validada
            seed: Semilla de inicialización (por defecto train.seed)
            dtype: torch.float32 o torch.float64 (comprobaciones de gradiente)
            device: Dispositivo destino (por defecto train.device)

        Returns:
            BehaviorTransferRecommender: Modelo listo para la etapa 1
        """
        seed = config.train.seed if seed is None else seed
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(derive_seed(seed, "init"))
            autoencoder = ModelFactory.create_autoencoder(vocab, config)
            denoiser = ModelFactory.create_denoiser(vocab.num_behaviors, config)
        model = BehaviorTransferRecommender(autoencoder, denoiser, ModelFactory.create_schedule(config))
        return model.to(device=device or config.train.device, dtype=dtype)
