"""
Checkpoint manager for the staged recommender.
Centraliza el formato en disco (manifiesto key=value + blob binario versionado) y los
context managers que cargan o guardan el modelo de cada etapa.

Formato del blob (little-endian):
    magic   8 bytes  b"MBRECKPT"
    version uint32
    count   uint32
    por tensor, ordenados por nombre:
        name_len uint16, name utf-8
        dtype    uint8  (1 = float32, 2 = float64, 3 = int64)
        ndim     uint8, dims uint32 * ndim
        datos    bytes crudos en orden C
"""

import logging
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

import numpy as np
import torch

from models import BehaviorTransferRecommender, ModelFactory
from sequences.interactions import Vocab
from utils.config import RecConfig
from utils.errors import CheckpointError, ConfigurationError

logger = logging.getLogger(__name__)

MAGIC = b"MBRECKPT"
FORMAT_VERSION = 1

_DTYPE_CODES = {
    torch.float32: (1, np.dtype("<f4")),
    torch.float64: (2, np.dtype("<f8")),
    torch.int64: (3, np.dtype("<i8")),
}
_CODE_DTYPES = {code: (torch_dtype, np_dtype) for torch_dtype, (code, np_dtype) in _DTYPE_CODES.items()}


@dataclass
class Checkpoint:
    """Manifiesto en texto plano y tensores por nombre."""

    manifest: dict[str, str]
    tensors: dict[str, torch.Tensor]

    @property
    def stage(self) -> int:
        return int(self.manifest["stage"])


@dataclass
class CheckpointPaths:
    manifest: Path
    blob: Path


def checkpoint_paths(directory: Path, stage: int) -> CheckpointPaths:
    directory = Path(directory)
    return CheckpointPaths(directory / f"stage{stage}.manifest", directory / f"stage{stage}.bin")


def encode_tensors(tensors: dict[str, torch.Tensor]) -> bytes:
    """Serializa los tensores en el layout binario documentado en el módulo."""
    chunks = [MAGIC, np.array([FORMAT_VERSION, len(tensors)], dtype="<u4").tobytes()]
    for name in sorted(tensors):
        tensor = tensors[name].detach().cpu().contiguous()
        if tensor.dtype not in _DTYPE_CODES:
            raise CheckpointError(f"dtype no soportado en '{name}': {tensor.dtype}")
        code, np_dtype = _DTYPE_CODES[tensor.dtype]
        encoded_name = name.encode("utf-8")
        chunks.append(np.array([len(encoded_name)], dtype="<u2").tobytes())
        chunks.append(encoded_name)
        chunks.append(np.array([code, tensor.dim()], dtype="u1").tobytes())
        chunks.append(np.array(tensor.shape, dtype="<u4").tobytes())
        chunks.append(tensor.numpy().astype(np_dtype, copy=False).tobytes(order="C"))
    return b"".join(chunks)


def decode_tensors(payload: bytes) -> dict[str, torch.Tensor]:
    """
    Inversa de encode_tensors.

    Raises:
        CheckpointError: Si el blob está truncado, la versión no coincide o el magic es inválido
    """
    view = memoryview(payload)
    offset = 0

    def take(size: int) -> memoryview:
        nonlocal offset
        if offset + size > len(view):
            raise CheckpointError("Blob de checkpoint truncado")
        chunk = view[offset:offset + size]
        offset += size
        return chunk

    if bytes(take(len(MAGIC))) != MAGIC:
        raise CheckpointError("El archivo no es un checkpoint válido")
    version, count = np.frombuffer(take(8), dtype="<u4")
    if int(version) != FORMAT_VERSION:
        raise CheckpointError(f"Versión de checkpoint no soportada: {int(version)}")

    tensors = {}
    for _ in range(int(count)):
        name_len = int(np.frombuffer(take(2), dtype="<u2")[0])
        name = bytes(take(name_len)).decode("utf-8")
        code, ndim = (int(value) for value in np.frombuffer(take(2), dtype="u1"))
        if code not in _CODE_DTYPES:
            raise CheckpointError(f"Código de dtype desconocido {code} en '{name}'")
        shape = tuple(int(dim) for dim in np.frombuffer(take(4 * ndim), dtype="<u4"))
        torch_dtype, np_dtype = _CODE_DTYPES[code]
        size = int(np.prod(shape, dtype=np.int64)) * np_dtype.itemsize
        array = np.frombuffer(take(size), dtype=np_dtype).reshape(shape)
        tensors[name] = torch.from_numpy(array.astype(np_dtype.newbyteorder("="), copy=True)).to(torch_dtype)
    if offset != len(view):
        raise CheckpointError("Bytes sobrantes al final del checkpoint")
    return tensors


def build_manifest(model: BehaviorTransferRecommender, config: RecConfig, stage: int) -> dict[str, str]:
    """Metadatos: etapa, vocabulario, dimensiones, configuración completa y formas de los tensores."""
    vocab = model.vocab
    manifest = {
        "format_version": str(FORMAT_VERSION),
        "stage": str(stage),
        "num_items": str(vocab.num_items),
        "num_behaviors": str(vocab.num_behaviors),
        "seq_len": str(model.seq_len),
        "d": str(config.model.d),
        "dtype": str(model.dtype).replace("torch.", ""),
    }
    for key, value in config.to_key_values().items():
        manifest[f"config.{key}"] = value
    for name, tensor in sorted(model.state_dict().items()):
        manifest[f"shape.{name}"] = ",".join(str(dim) for dim in tensor.shape)
    return manifest


def write_manifest(path: Path, manifest: dict[str, str]) -> Path:
    lines = [f"{key}={value}" for key, value in manifest.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return Path(path)


def read_manifest(path: Path) -> dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"No existe el manifiesto {path}")
    manifest = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise CheckpointError(f"Línea de manifiesto inválida en {path}: {line!r}")
        manifest[key] = value
    return manifest


def _parse_shape(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part)


class CheckpointManager:
    """Gestor centralizado para guardar y cargar checkpoints por etapa."""

    @staticmethod
    def save(model: BehaviorTransferRecommender, config: RecConfig, stage: int,
             directory: Path) -> CheckpointPaths:
        """
        Guarda el modelo completo de una etapa.

        Args:
            model: Modelo a guardar
            config: Configuración efectiva con la que se entrenó
            stage: Etapa completada (1, 2 o 3)
            directory: Directorio de salida

        Returns:
            CheckpointPaths: Rutas del manifiesto y del blob
        """
        paths = checkpoint_paths(directory, stage)
        paths.manifest.parent.mkdir(parents=True, exist_ok=True)
        write_manifest(paths.manifest, build_manifest(model, config, stage))
        paths.blob.write_bytes(encode_tensors(model.state_dict()))
        logger.info("Checkpoint de la etapa %d guardado en %s", stage, paths.blob)
        return paths

    @staticmethod
    def read(manifest_path: Path) -> Checkpoint:
        """Lee manifiesto y blob (el blob es el hermano .bin del manifiesto)."""
        manifest_path = Path(manifest_path)
        if manifest_path.suffix != ".manifest":
            manifest_path = manifest_path.with_suffix(".manifest")
        manifest = read_manifest(manifest_path)
        blob_path = manifest_path.with_suffix(".bin")
        if not blob_path.is_file():
            raise CheckpointError(f"No existe el blob {blob_path}")
        return Checkpoint(manifest, decode_tensors(blob_path.read_bytes()))

    @staticmethod
    def load(manifest_path: Path, min_stage: int = 1,
             device: Optional[str] = None) -> tuple[BehaviorTransferRecommender, RecConfig, int]:
        """
        Reconstruye el modelo desde un checkpoint verificando todas las formas.

        Args:
            manifest_path: Ruta del manifiesto (o del blob)
            min_stage: Etapa mínima exigida
            device: Dispositivo destino

        Returns:
            tuple: (modelo, configuración guardada, etapa)

        Raises:
            CheckpointError: Si faltan tensores, las formas no coinciden o la etapa es insuficiente
        """
        checkpoint = CheckpointManager.read(manifest_path)
        manifest = checkpoint.manifest
        if checkpoint.stage < min_stage:
            raise CheckpointError(f"Se requiere un checkpoint de la etapa >= {min_stage}, "
                                  f"encontrado etapa {checkpoint.stage}")
        try:
            config = RecConfig.from_key_values({key[len("config."):]: value
                                                for key, value in manifest.items()
                                                if key.startswith("config.")})
            config.validate()
            vocab = Vocab(int(manifest["num_items"]), int(manifest["num_behaviors"]))
        except (ConfigurationError, KeyError, ValueError) as exc:
            raise CheckpointError(f"Manifiesto incompatible: {exc}") from exc

        dtype = getattr(torch, manifest.get("dtype", "float32"))
        model = ModelFactory.create_recommender(vocab, config, dtype=dtype, device="cpu")
        expected = model.state_dict()

        if set(expected) != set(checkpoint.tensors):
            missing = sorted(set(expected) - set(checkpoint.tensors))
            extra = sorted(set(checkpoint.tensors) - set(expected))
            raise CheckpointError(f"Tensores incompatibles; faltan {missing}, sobran {extra}")
        for name, tensor in checkpoint.tensors.items():
            declared = _parse_shape(manifest.get(f"shape.{name}", ""))
            if tuple(tensor.shape) != declared or tuple(expected[name].shape) != declared:
                raise CheckpointError(f"Forma incompatible para '{name}': blob {tuple(tensor.shape)}, "
                                      f"manifiesto {declared}, modelo {tuple(expected[name].shape)}")
        model.load_state_dict(checkpoint.tensors, strict=True)
        model.to(device or config.train.device)
        return model, config, checkpoint.stage

    @staticmethod
    @contextmanager
    def open_checkpoint(manifest_path: Path, min_stage: int = 1,
                        device: Optional[str] = None) -> Iterator[tuple[BehaviorTransferRecommender, RecConfig]]:
        """
        Carga un checkpoint en modo evaluación.

        Yields:
            tuple: (modelo, configuración)
        """
        model, config, stage = CheckpointManager.load(manifest_path, min_stage, device)
        model.eval()
        logger.info("Checkpoint cargado (etapa %d) desde %s", stage, manifest_path)
        try:
            yield model, config
        finally:
            model.train()

    @staticmethod
    @contextmanager
    def recording_stage(model: BehaviorTransferRecommender, config: RecConfig, stage: int,
                        directory: Path) -> Iterator[CheckpointPaths]:
        """
        Ejecuta una etapa y guarda el checkpoint solo si termina sin errores.

        Yields:
            CheckpointPaths: Rutas donde quedará el checkpoint
        """
        paths = checkpoint_paths(directory, stage)
        yield paths
        CheckpointManager.save(model, config, stage, directory)
