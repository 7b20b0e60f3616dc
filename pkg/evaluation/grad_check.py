"""
Comprobación de gradientes por diferencias finitas centrales en doble precisión.

Cada selector construye un módulo pequeño (d = 8) y una pérdida escalar; se compara el
gradiente analítico con (L(p + h) - L(p - h)) / 2h sobre una submuestra determinista
de coordenadas de cada grupo de parámetros.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable

import torch
import torch.nn.functional as F
from torch import nn

from autoencoder import BehaviorModulation, ItemDecoder, MultiBehaviorAutoEncoder, MultiHeadSelfAttention, mbae_loss
from denoisers import MCGLNBlock, MCGLNDenoiser
from sequences.interactions import Vocab
from utils.config import ModelConfig
from utils.errors import UsageError
from utils.seeding import numpy_rng

logger = logging.getLogger(__name__)

STEP = 1e-5
D = 8


@dataclass
class GradCheckReport:
    selector: str
    tolerance: float
    max_errors: dict[str, float] = field(default_factory=dict)

    @property
    def max_error(self) -> float:
        return max(self.max_errors.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance

    def to_text(self) -> str:
        lines = [f"{group}\t{error:.3e}" for group, error in self.max_errors.items()]
        lines.append(f"max\t{self.max_error:.3e}\t{'OK' if self.passed else 'FALLO'} (tol {self.tolerance:.1e})")
        return "\n".join(lines)


@dataclass
class Problem:
    """
    Módulo, pérdida y grupos de parámetros a comprobar.

    active_rows restringe las tablas de embedding a las filas que el lote usa
    (clave: id del parámetro); el resto de filas tiene gradiente nulo.
    """

    module: nn.Module
    loss: Callable[[], torch.Tensor]
    groups: dict[str, list[nn.Parameter]]
    active_rows: dict[int, list[int]] = field(default_factory=dict)

    def coordinates(self, group: str) -> list[tuple[int, int]]:
        """Pares (índice de parámetro, índice plano) candidatos del grupo."""
        coordinates = []
        for p_index, param in enumerate(self.groups[group]):
            rows = self.active_rows.get(id(param))
            if rows is None:
                coordinates.extend((p_index, flat) for flat in range(param.numel()))
                continue
            width = param.shape[-1]
            coordinates.extend((p_index, row * width + col) for row in rows for col in range(width))
        return coordinates


def _randomize(module: nn.Module, generator: torch.Generator, std: float = 0.3) -> None:
    # Las capas inicializadas a cero anularían los gradientes de las demás
    with torch.no_grad():
        for param in module.parameters():
            param.copy_(torch.randn(param.shape, generator=generator, dtype=param.dtype) * std)


def _linear_problem(generator: torch.Generator) -> Problem:
    module = nn.Linear(4, 2).double()
    # Parámetros nulos: L(p ± h) = ±h g
    nn.init.zeros_(module.weight)
    nn.init.zeros_(module.bias)
    x = torch.randn(3, 4, generator=generator, dtype=torch.float64)
    weights = torch.randn(3, 2, generator=generator, dtype=torch.float64)
    return Problem(module, lambda: (module(x) * weights).sum(),
                   {"weight": [module.weight], "bias": [module.bias]})


def _attention_problem(generator: torch.Generator) -> Problem:
    heads = 2
    attention = MultiHeadSelfAttention(D, heads, "barope").double()
    modulation = BehaviorModulation(D, heads, D // heads).double()
    module = nn.ModuleDict({"attention": attention, "modulation": modulation})
    _randomize(module, generator)
    hidden = torch.randn(2, 5, D, generator=generator, dtype=torch.float64)
    behavior_embeddings = torch.randn(2, 5, D, generator=generator, dtype=torch.float64)
    padding = torch.zeros(2, 5, dtype=torch.bool)
    padding[1, :2] = True
    target = torch.randn(2, 5, D, generator=generator, dtype=torch.float64)

    def loss() -> torch.Tensor:
        out, _ = attention(hidden, padding, modulation(behavior_embeddings))
        return ((out - target) ** 2).mean()

    groups = {name: [getattr(attention, name).weight] for name in ("w_q", "w_k", "w_v", "w_o")}
    groups["modulation"] = list(modulation.parameters())
    return Problem(module, loss, groups)


def _decoder_problem(generator: torch.Generator) -> Problem:
    num_items = 6
    decoder = ItemDecoder(D).double()
    table = nn.Parameter(torch.randn(num_items + 2, D, generator=generator, dtype=torch.float64))
    module = nn.ModuleDict({"decoder": decoder})
    module.register_parameter("item_table", table)
    z = torch.randn(4, D, generator=generator, dtype=torch.float64)
    targets = torch.tensor([0, 3, 5, 1])
    return Problem(module, lambda: F.cross_entropy(decoder(z, table, num_items), targets),
                   {"decoder_in": list(decoder.net[0].parameters()),
                    "decoder_out": list(decoder.net[2].parameters()),
                    "item_table": [table]})


def _mcgln_block_problem(generator: torch.Generator) -> Problem:
    num_behaviors = 3
    block = MCGLNBlock(D, num_behaviors, m_s=1, m_p=1).double()
    _randomize(block, generator)
    x = torch.randn(6, D, generator=generator, dtype=torch.float64)
    z_agn = torch.randn(6, D, generator=generator, dtype=torch.float64)
    condition = torch.randn(6, D, generator=generator, dtype=torch.float64)
    behavior = torch.tensor([0, 1, 2, 3, 0, 3])
    epsilon = torch.randn(6, D, generator=generator, dtype=torch.float64)
    return Problem(block, lambda: ((epsilon - block(x, z_agn, condition, behavior)) ** 2).mean(),
                   {"condition_proj": list(block.condition_proj.parameters()),
                    "condition_mlp": list(block.condition_mlp.parameters()),
                    "shared_experts": list(block.moe.shared_experts.parameters()),
                    "private_experts": list(block.moe.private_experts.parameters()),
                    "gate": list(block.moe.gate.parameters()),
                    "modulation": list(block.modulation.parameters())})


def _denoiser_problem(generator: torch.Generator) -> Problem:
    num_behaviors = 2
    denoiser = MCGLNDenoiser(D, num_behaviors, depth=2).double()
    _randomize(denoiser, generator)
    z_t = torch.randn(4, D, generator=generator, dtype=torch.float64)
    z_agn = torch.randn(4, D, generator=generator, dtype=torch.float64)
    t = torch.tensor([1, 5, 10, 20])
    behavior = torch.tensor([0, 1, 2, 1])
    epsilon = torch.randn(4, D, generator=generator, dtype=torch.float64)
    return Problem(denoiser, lambda: ((epsilon - denoiser(z_t, t, z_agn, behavior)) ** 2).mean(),
                   {"time_embed": list(denoiser.time_embed.parameters()),
                    "behavior_cond_table": [denoiser.behavior_cond_table.weight],
                    "blocks": list(denoiser.blocks.parameters()),
                    "head": list(denoiser.head.parameters())})


def _autoencoder_problem(generator: torch.Generator) -> Problem:
    vocab = Vocab(num_items=7, num_behaviors=2)
    config = ModelConfig(d=D, heads=2, layers=1, dropout=0.0, position_mode="barope")
    model = MultiBehaviorAutoEncoder(vocab, 5, config).double()
    items = torch.tensor([[vocab.item_pad, 1, vocab.item_mask, 3, 4],
                          [0, 2, 5, vocab.item_mask, 6]])
    behaviors = torch.tensor([[vocab.behavior_pad, 0, 1, 1, 0],
                              [1, 0, 0, vocab.behavior_mask, 1]])
    rows, cols = torch.tensor([0, 1]), torch.tensor([2, 3])
    targets = torch.tensor([2, 4])

    encoder = model.encoder
    embedding = encoder.embedding
    attention = [param for layer in encoder.layers for param in layer.attention.parameters()]
    feedforward = [param for layer in encoder.layers
                   for module in (layer.attention_norm, layer.ffn_norm, layer.ffn)
                   for param in module.parameters()]
    feedforward.extend(encoder.final_norm.parameters())

    # Las filas de pad no reciben gradiente
    item_rows = sorted({int(token) for token in items.unique()} - {vocab.item_pad})
    behavior_rows = sorted({int(token) for token in behaviors.unique()} - {vocab.behavior_pad})
    return Problem(model, lambda: mbae_loss(model(items, behaviors, rows, cols), targets),
                   {"embeddings": [embedding.item_table.weight, embedding.behavior_table.weight],
                    "attention": attention,
                    "behavior_modulation": list(encoder.behavior_modulation.parameters()),
                    "feedforward": feedforward,
                    "decoder": list(model.decoder_parameters())},
                   active_rows={id(embedding.item_table.weight): item_rows,
                                id(embedding.behavior_table.weight): behavior_rows})


SELECTORS: dict[str, Callable[[torch.Generator], Problem]] = {
    "linear": _linear_problem,
    "barope_attention": _attention_problem,
    "decoder": _decoder_problem,
    "mcgln_block": _mcgln_block_problem,
    "denoiser": _denoiser_problem,
    "mbae": _autoencoder_problem,
}


def grad_check(selector: str, tolerance: float = 1e-4, seed: int = 0,
               samples_per_group: int = 12) -> GradCheckReport:
    """
    Error relativo máximo |a - n| / max(|a|, |n|, 1e-3) por grupo de parámetros.

    Raises:
        UsageError: Si el selector es desconocido
    """
    if selector not in SELECTORS:
        raise UsageError(f"Selector desconocido '{selector}'; opciones: {sorted(SELECTORS)}")
    generator = torch.Generator().manual_seed(seed)
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        problem = SELECTORS[selector](generator)
    problem.module.eval()

    problem.module.zero_grad()
    problem.loss().backward()

    report = GradCheckReport(selector, tolerance)
    for group, params in problem.groups.items():
        coordinates = problem.coordinates(group)
        rng = numpy_rng(seed, "grad_check", selector, group)
        picks = rng.choice(len(coordinates), size=min(samples_per_group, len(coordinates)), replace=False)
        worst = 0.0
        for pick in sorted(picks.tolist()):
            p_index, flat = coordinates[pick]
            param = params[p_index]
            analytic = float(param.grad.reshape(-1)[flat]) if param.grad is not None else 0.0
            numeric = _central_difference(problem.loss, param, flat)
            error = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-3)
            worst = max(worst, error)
        report.max_errors[group] = worst
    logger.info("grad-check %s: error máximo %.3e", selector, report.max_error)
    return report


@torch.no_grad()
def _central_difference(loss: Callable[[], torch.Tensor], param: nn.Parameter, flat: int) -> float:
    view = param.data.view(-1)
    original = view[flat].item()
    view[flat] = original + STEP
    plus = loss().item()
    view[flat] = original - STEP
    minus = loss().item()
    view[flat] = original
    return (plus - minus) / (2 * STEP)
