"""
Las tres etapas de entrenamiento:
1. Autoencoder con la tarea Cloze.
2. Denoiser latente con el autoencoder congelado (guía sin clasificador).
3. Ajuste del decodificador con predicción del siguiente ítem sobre latentes muestreados.
"""

import logging
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn
from tqdm import tqdm

from autoencoder import mbae_loss, with_slot_behavior
from diffusion import GuidanceConfig, NoiseSchedule, forward_sample
from models import BehaviorTransferRecommender
from sequences.builder import NextItemExample, Sequence, next_item_split, stack_sequences
from sequences.masking import cloze_mask
from utils.config import RecConfig
from utils.errors import EmptyDatasetError, TrainingDivergedError
from utils.seeding import derive_seed, numpy_rng, torch_generator

logger = logging.getLogger(__name__)


@dataclass
class StageResult:
    """Pérdida y métrica por época."""

    stage: int
    losses: list[float] = field(default_factory=list)
    metrics: list[float] = field(default_factory=list)


class TrainingLog:
    """Registro de texto plano `epoch loss metric` por etapa."""

    def __init__(self, path: Optional[Path], metric_name: str):
        self.path = Path(path) if path else None
        self.metric_name = metric_name
        self._handle = None

    def __enter__(self) -> "TrainingLog":
        if self.path:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._handle = self.path.open("w", encoding="utf-8")
            self._handle.write(f"# epoch loss {self.metric_name}\n")
        return self

    def record(self, epoch: int, loss: float, metric: float) -> None:
        if self._handle:
            self._handle.write(f"{epoch} {loss!r} {metric!r}\n")

    def __exit__(self, *exc_info) -> None:
        if self._handle:
            self._handle.close()
            self._handle = None


@contextmanager
def frozen(*modules: nn.Module) -> Iterator[None]:
    """Congela los parámetros de los módulos y los pone en modo evaluación mientras dura el bloque."""
    saved = [(param, param.requires_grad) for module in modules for param in module.parameters()]
    modes = [(module, module.training) for module in modules]
    for param, _ in saved:
        param.requires_grad_(False)
    for module in modules:
        module.eval()
    try:
        yield
    finally:
        for param, flag in saved:
            param.requires_grad_(flag)
        for module, mode in modes:
            module.train(mode)


def make_optimizer(parameters, config: RecConfig) -> torch.optim.Optimizer:
    return torch.optim.AdamW(parameters, lr=config.train.learning_rate,
                             weight_decay=config.train.weight_decay)


def _batches(count: int, batch_size: int, rng: np.random.Generator) -> Iterator[np.ndarray]:
    order = rng.permutation(count)
    for start in range(0, count, batch_size):
        yield order[start:start + batch_size]


def _check_finite(loss: torch.Tensor, stage: int, epoch: int) -> None:
    if not torch.isfinite(loss):
        raise TrainingDivergedError(f"Pérdida no finita ({loss.item()}) en la etapa {stage}, época {epoch}; "
                                    "prueba a reducir train.learning_rate")


def stage1_pretrain(model: BehaviorTransferRecommender, sequences: list[Sequence], config: RecConfig,
                    log_path: Optional[Path] = None, progress: bool = False) -> StageResult:
    """
    Entrena codificador y decodificador con entropía cruzada sobre lotes Cloze.

    Args:
        model: Modelo completo (solo se actualiza el autoencoder)
        sequences: Secuencias de entrenamiento
        config: Configuración (rho, sigma, épocas, optimizador)
        log_path: Archivo del registro de entrenamiento (opcional)
        progress: Mostrar barra de tqdm

    Returns:
        StageResult: Pérdida media y precisión top-1 enmascarada por época

    Raises:
        EmptyDatasetError: Si no hay secuencias
        TrainingDivergedError: Si la pérdida deja de ser finita
    """
    if not sequences:
        raise EmptyDatasetError("La etapa 1 requiere al menos una secuencia")
    train = config.train
    torch.manual_seed(derive_seed(train.seed, "stage", 1))
    rng = numpy_rng(train.seed, "stage", 1)
    autoencoder = model.autoencoder
    vocab = model.vocab
    device = model.device
    optimizer = make_optimizer(autoencoder.parameters(), config)
    result = StageResult(stage=1)

    autoencoder.train()
    with TrainingLog(log_path, "masked_accuracy") as training_log:
        for epoch in tqdm(range(1, train.stage1_epochs + 1), desc="Etapa 1", disable=not progress):
            total_loss, total_correct, total_masked = 0.0, 0, 0
            for batch_index in _batches(len(sequences), train.batch_size, rng):
                masked = cloze_mask([sequences[i] for i in batch_index], train.rho, train.sigma, rng, vocab)
                items, behaviors = stack_sequences(masked.sequences)
                rows, cols = masked.flat_index()
                targets = torch.as_tensor(np.concatenate(masked.target_items), device=device)

                logits = autoencoder(torch.as_tensor(items, device=device),
                                     torch.as_tensor(behaviors, device=device),
                                     torch.as_tensor(rows, device=device),
                                     torch.as_tensor(cols, device=device))
                loss = mbae_loss(logits, targets)
                _check_finite(loss, 1, epoch)

                optimizer.zero_grad()
                loss.backward()
                optimizer.step()

                total_loss += loss.item() * len(targets)
                total_correct += int((logits.argmax(dim=-1) == targets).sum())
                total_masked += len(targets)

            epoch_loss = total_loss / total_masked
            accuracy = total_correct / total_masked
            result.losses.append(epoch_loss)
            result.metrics.append(accuracy)
            training_log.record(epoch, epoch_loss, accuracy)
            logger.info("etapa 1 época %d: loss=%.4f acc=%.4f", epoch, epoch_loss, accuracy)
    return result


def sample_diffusion_inputs(n: int, d: int, schedule: NoiseSchedule, null_prob: float,
                            generator: torch.Generator,
                            dtype: torch.dtype = torch.float32) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """
    t uniforme en {1..T}, ruido gaussiano y máscara de condición nula.

    Returns:
        tuple: (t (n,), epsilon (n, d), null_mask (n,))
    """
    t = torch.randint(1, schedule.T + 1, (n,), generator=generator)
    epsilon = torch.randn((n, d), generator=generator, dtype=dtype)
    null_mask = torch.rand((n,), generator=generator) < null_prob
    return t, epsilon, null_mask


@torch.no_grad()
def diffusion_pairs(model: BehaviorTransferRecommender, sequences: list[Sequence],
                    examples: list[NextItemExample], rho: float,
                    rng: np.random.Generator) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """
    Pares (z_agn, z_b) con el mismo contexto salvo el token de comportamiento.

    Se usan posiciones Cloze (con el comportamiento visible o enmascarado) y el hueco
    final de los prefijos de siguiente ítem.

    Returns:
        tuple: (z_agnostic (N, d), z_specific (N, d), behaviors (N,))
    """
    vocab = model.vocab
    device = model.device
    autoencoder = model.autoencoder
    agnostic, specific, targets = [], [], []

    if sequences:
        masked = cloze_mask(sequences, rho, 0.0, rng, vocab)
        rows, cols = (torch.as_tensor(index, device=device) for index in masked.flat_index())
        items, behaviors = stack_sequences(masked.sequences)
        hidden_behaviors = behaviors.copy()
        for row, positions in enumerate(masked.masked_positions):
            hidden_behaviors[row, positions] = vocab.behavior_mask
        items_t = torch.as_tensor(items, device=device)
        _, z_b = autoencoder.encode(items_t, torch.as_tensor(behaviors, device=device), rows, cols)
        _, z_agn = autoencoder.encode(items_t, torch.as_tensor(hidden_behaviors, device=device), rows, cols)
        specific.append(z_b)
        agnostic.append(z_agn)
        targets.append(torch.as_tensor(np.concatenate(masked.target_behaviors), device=device))

    if examples:
        prefixes = [example.prefix for example in examples]
        visible = [with_slot_behavior(example.prefix, example.target_behavior) for example in examples]
        agnostic.append(model.slot_latents(prefixes))
        specific.append(model.slot_latents(visible))
        targets.append(torch.as_tensor([example.target_behavior for example in examples], device=device))

    return torch.cat(agnostic), torch.cat(specific), torch.cat(targets)


def stage2_train_ldm(model: BehaviorTransferRecommender, sequences: list[Sequence], config: RecConfig,
                     log_path: Optional[Path] = None, progress: bool = False) -> StageResult:
    """
    Entrena el denoiser con el autoencoder congelado.

    Por par: t ~ U{1..T}, z_t por el proceso directo, comportamiento sustituido por el
    nulo con probabilidad null_prob y pérdida ||epsilon - eps_hat||^2.

    Returns:
        StageResult: Pérdida de ruido media por época (la métrica es la fracción nula)
    """
    if not sequences:
        raise EmptyDatasetError("La etapa 2 requiere al menos una secuencia")
    train, diffusion = config.train, config.diffusion
    torch.manual_seed(derive_seed(train.seed, "stage", 2))
    rng = numpy_rng(train.seed, "stage", 2)
    generator = torch_generator(train.seed, "stage", 2)
    examples, _ = next_item_split(sequences, model.vocab)
    examples_by_user = {example.user_id: example for example in examples}
    denoiser = model.denoiser
    optimizer = make_optimizer(denoiser.parameters(), config)
    device = model.device
    result = StageResult(stage=2)

    with frozen(model.autoencoder), TrainingLog(log_path, "null_fraction") as training_log:
        denoiser.train()
        for epoch in tqdm(range(1, train.stage2_epochs + 1), desc="Etapa 2", disable=not progress):
            total_loss, total_pairs, total_null = 0.0, 0, 0
            for batch_index in _batches(len(sequences), train.batch_size, rng):
                batch = [sequences[i] for i in batch_index]
                batch_examples = [examples_by_user[s.user_id] for s in batch if s.user_id in examples_by_user]
                z_agn, z_b, behaviors = diffusion_pairs(model, batch, batch_examples, train.rho, rng)

                t, epsilon, null_mask = sample_diffusion_inputs(len(z_b), z_b.shape[-1], model.schedule,
                                                                diffusion.null_prob, generator, z_b.dtype)
                t, epsilon, null_mask = t.to(device), epsilon.to(device), null_mask.to(device)
                condition = torch.where(null_mask, torch.full_like(behaviors, model.null_behavior), behaviors)

                z_t = forward_sample(z_b, t, epsilon, model.schedule)
                loss = F.mse_loss(denoiser(z_t, t, z_agn, condition), epsilon)
                _check_finite(loss, 2, epoch)

                optimizer.zero_grad()
                loss.backward()
                optimizer.step()

                total_loss += loss.item() * len(z_b)
                total_pairs += len(z_b)
                total_null += int(null_mask.sum())

            epoch_loss = total_loss / total_pairs
            null_fraction = total_null / total_pairs
            result.losses.append(epoch_loss)
            result.metrics.append(null_fraction)
            training_log.record(epoch, epoch_loss, null_fraction)
            logger.info("etapa 2 época %d: eps_loss=%.5f null=%.3f", epoch, epoch_loss, null_fraction)
    return result


def stage3_finetune(model: BehaviorTransferRecommender, sequences: list[Sequence], config: RecConfig,
                    guidance: GuidanceConfig, log_path: Optional[Path] = None,
                    progress: bool = False) -> StageResult:
    """
    Ajusta solo el decodificador sobre preferencias específicas muestreadas.

    z_T se muestrea de nuevo para cada ejemplo en cada época; el muestreo no propaga gradiente.

    Returns:
        StageResult: Pérdida y precisión top-1 del siguiente ítem por época

    Raises:
        EmptyDatasetError: Si ningún usuario tiene al menos dos interacciones
    """
    examples, _ = next_item_split(sequences, model.vocab)
    if not examples:
        raise EmptyDatasetError("La etapa 3 requiere usuarios con al menos dos interacciones")
    train = config.train
    torch.manual_seed(derive_seed(train.seed, "stage", 3))
    rng = numpy_rng(train.seed, "stage", 3)
    generator = torch_generator(train.seed, "stage", 3)
    decoder = model.autoencoder.decoder
    optimizer = make_optimizer(decoder.parameters(), config)
    device = model.device
    result = StageResult(stage=3)

    with frozen(model.autoencoder.encoder, model.denoiser), TrainingLog(log_path, "next_item_accuracy") as training_log:
        decoder.train()
        for epoch in tqdm(range(1, train.stage3_epochs + 1), desc="Etapa 3", disable=not progress):
            total_loss, total_correct, total = 0.0, 0, 0
            for batch_index in _batches(len(examples), train.batch_size, rng):
                batch = [examples[i] for i in batch_index]
                behaviors = torch.as_tensor([example.target_behavior for example in batch], device=device)
                targets = torch.as_tensor([example.target_item for example in batch], device=device)
                with torch.no_grad():
                    z_agn = model.slot_latents([example.prefix for example in batch])
                    z_T = torch.randn(z_agn.shape, generator=generator, dtype=z_agn.dtype).to(device)
                    z_b = model.transfer(z_agn, behaviors, guidance, z_T=z_T)

                logits = model.autoencoder.decode(z_b)
                loss = F.cross_entropy(logits, targets)
                _check_finite(loss, 3, epoch)

                optimizer.zero_grad()
                loss.backward()
                optimizer.step()

                total_loss += loss.item() * len(batch)
                total_correct += int((logits.argmax(dim=-1) == targets).sum())
                total += len(batch)

            epoch_loss = total_loss / total
            accuracy = total_correct / total
            result.losses.append(epoch_loss)
            result.metrics.append(accuracy)
            training_log.record(epoch, epoch_loss, accuracy)
            logger.info("etapa 3 época %d: loss=%.4f acc=%.4f", epoch, epoch_loss, accuracy)
    return result


def smoothed(values: list[float], window: int = 3) -> list[float]:
    """Media móvil simple, usada para comprobar la tendencia de la pérdida."""
    if window < 1:
        raise ValueError("window debe ser >= 1")
    return [float(np.mean(values[max(0, i - window + 1):i + 1])) for i in range(len(values))]

