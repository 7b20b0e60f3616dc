"""Inferencia guiada: prefijo + comportamiento objetivo -> ranking del catálogo completo."""

import logging
from typing import Optional

import torch

from diffusion import GuidanceConfig
from models import BehaviorTransferRecommender
from sequences.builder import NextItemExample, Sequence
from utils.errors import UsageError
from utils.seeding import torch_generator

logger = logging.getLogger(__name__)


def rank_items(logits: torch.Tensor, k: int) -> torch.Tensor:
    """Top-k por logit descendente; los empates se resuelven por id de ítem ascendente."""
    order = torch.sort(logits, dim=-1, descending=True, stable=True).indices
    return order[..., :k]


def _check_behavior(model: BehaviorTransferRecommender, behavior: int) -> None:
    if not 0 <= behavior < model.vocab.num_behaviors:
        raise UsageError(f"Comportamiento desconocido: {behavior} "
                         f"(se esperaba 0..{model.vocab.num_behaviors - 1})")


@torch.no_grad()
def score_prefixes(model: BehaviorTransferRecommender, prefixes: list[Sequence], behaviors: list[int],
                   guidance: GuidanceConfig, generators: Optional[list[torch.Generator]] = None,
                   use_diffusion: bool = True) -> torch.Tensor:
    """
    Logits (N, |V|) para cada prefijo bajo su comportamiento objetivo.

    Con use_diffusion=False se decodifica directamente la preferencia agnóstica.
    Cada fila usa su propio generador para z_T.
    """
    for behavior in behaviors:
        _check_behavior(model, behavior)
    z_agn = model.slot_latents(prefixes)
    if not use_diffusion:
        return model.autoencoder.decode(z_agn)

    if generators is None:
        z_T = None
    else:
        z_T = torch.cat([torch.randn((1, z_agn.shape[-1]), generator=generator, dtype=z_agn.dtype)
                         for generator in generators]).to(z_agn.device)
    target = torch.as_tensor(behaviors, device=z_agn.device)
    return model.autoencoder.decode(model.transfer(z_agn, target, guidance, z_T=z_T))


def infer_next_item(prefix: Sequence, behavior: int, model: BehaviorTransferRecommender,
                    guidance: GuidanceConfig, k: int,
                    generator: Optional[torch.Generator] = None) -> list[int]:
    """
    Recomienda los k ítems más probables para `behavior`.

    Args:
        prefix: Secuencia con el hueco final (mask, mask) en L-1
        behavior: Comportamiento objetivo
        model: Modelo entrenado
        guidance: omega y salto del muestreador
        k: Longitud de la lista; se recorta a |V| con un aviso
        generator: Generador para z_T

    Returns:
        list[int]: Ids de ítem ordenados

    Raises:
        UsageError: Si el comportamiento es desconocido o k < 1
    """
    _check_behavior(model, behavior)
    if k < 1:
        raise UsageError("k debe ser >= 1")
    num_items = model.vocab.num_items
    if k > num_items:
        logger.warning("k=%d supera el catálogo (%d ítems); se recorta", k, num_items)
        k = num_items
    was_training = model.training
    model.eval()
    try:
        logits = score_prefixes(model, [prefix], [behavior], guidance,
                                None if generator is None else [generator])
    finally:
        model.train(was_training)
    return [int(item) for item in rank_items(logits[0], k)]


def user_generator(seed: int, user_id: int) -> torch.Generator:
    return torch_generator(seed, "infer", user_id)


def infer_for_example(example: NextItemExample, behavior: int, model: BehaviorTransferRecommender,
                      guidance: GuidanceConfig, k: int, seed: int) -> list[int]:
    """infer_next_item con el flujo aleatorio del usuario derivado de la semilla."""
    return infer_next_item(example.prefix, behavior, model, guidance, k, user_generator(seed, example.user_id))
