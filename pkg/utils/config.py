"""
Módulo para cargar y validar la configuración del recomendador.
Centraliza los valores por defecto, el archivo key=value y las variables de entorno
para poder reutilizarlos en todos los scripts.
"""

import dataclasses
import os
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from dotenv import load_dotenv

from .errors import ConfigurationError

POSITION_MODES = ("ape", "rope", "barope")
DENOISER_KINDS = ("mlp", "adaln", "mcgln")
SCHEDULE_KINDS = ("linear",)


@dataclass
class DataConfig:
    seq_len: int = 50
    min_interactions: int = 1
    behavior_names: tuple[str, ...] = ()


@dataclass
class ModelConfig:
    d: int = 64
    heads: int = 2
    layers: int = 2
    dropout: float = 0.1
    position_mode: str = "barope"
    include_behavior_in_input: bool = True
    rope_base: float = 10000.0
    ffn_mult: int = 4

    @property
    def d_k(self) -> int:
        return self.d // self.heads


@dataclass
class DiffusionConfig:
    T: int = 200
    beta_start: float = 1e-4
    beta_end: float = 0.02
    schedule: str = "linear"
    omega: float = 1.0
    null_prob: float = 0.2
    stride: int = 20


@dataclass
class DenoiserConfig:
    kind: str = "mcgln"
    depth: int = 2
    m_s: int = 1
    m_p: int = 1
    hidden_mult: int = 2


@dataclass
class TrainConfig:
    stage1_epochs: int = 200
    stage2_epochs: int = 100
    stage3_epochs: int = 20
    batch_size: int = 256
    learning_rate: float = 2e-3
    weight_decay: float = 0.01
    rho: float = 0.2
    sigma: float = 0.2
    seed: int = 42
    device: str = "cpu"


@dataclass
class EvalConfig:
    ks: tuple[int, ...] = (10, 20)
    batch_size: int = 512


@dataclass
class RecConfig:
    """Configuración completa; cada atributo es una sección `seccion.clave`."""

    data: DataConfig = field(default_factory=DataConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    diffusion: DiffusionConfig = field(default_factory=DiffusionConfig)
    denoiser: DenoiserConfig = field(default_factory=DenoiserConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    @classmethod
    def from_sources(cls,
                     config_path: Optional[str] = None,
                     overrides: Optional[dict[str, str]] = None) -> "RecConfig":
        """
        Construye la configuración efectiva: defaults < archivo < overrides.

        Si no se indica archivo se consulta MBREC_CONFIG (cargando .env).

        Args:
            config_path: Ruta del archivo key=value (opcional)
            overrides: Pares `seccion.clave` -> valor en texto (opcional)

        Returns:
            RecConfig: Configuración validada

        Raises:
            ConfigurationError: Si alguna clave o valor es inválido
        """
        load_dotenv()
        config = cls()
        config_path = config_path or os.getenv("MBREC_CONFIG")
        if config_path:
            config.apply(read_key_values(config_path))
        if overrides:
            config.apply(overrides)
        config.validate()
        return config

    def apply(self, values: dict[str, str]) -> None:
        """Aplica pares `seccion.clave=valor` sobre la configuración actual."""
        for dotted_key, raw_value in values.items():
            section_name, _, key = dotted_key.partition(".")
            section = getattr(self, section_name, None)
            if not key or section is None or not dataclasses.is_dataclass(section):
                raise ConfigurationError(f"Sección desconocida en la clave '{dotted_key}'")
            field_types = typing.get_type_hints(type(section))
            if key not in field_types:
                raise ConfigurationError(f"Clave desconocida: '{dotted_key}'")
            setattr(section, key, _coerce(raw_value, field_types[key], dotted_key))

    def copy(self) -> "RecConfig":
        return RecConfig.from_key_values(self.to_key_values())

    @classmethod
    def from_key_values(cls, values: dict[str, str]) -> "RecConfig":
        config = cls()
        config.apply(values)
        return config

    def to_key_values(self) -> dict[str, str]:
        """Todas las claves efectivas, en orden estable."""
        rendered = {}
        for section_field in dataclasses.fields(self):
            section = getattr(self, section_field.name)
            for item in dataclasses.fields(section):
                rendered[f"{section_field.name}.{item.name}"] = _render(getattr(section, item.name))
        return rendered

    def write(self, path: Path) -> None:
        """Escribe el eco de configuración resuelta."""
        lines = [f"{key}={value}" for key, value in self.to_key_values().items()]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    def validate(self) -> None:
        """Comprueba los invariantes de todas las secciones."""
        model, diffusion, denoiser, train = self.model, self.diffusion, self.denoiser, self.train

        if self.data.seq_len <= 0:
            raise ConfigurationError("data.seq_len debe ser positivo")
        if model.d <= 0 or model.heads <= 0 or model.d % model.heads != 0:
            raise ConfigurationError("model.d debe ser divisible por model.heads")
        if model.d_k % 2 != 0:
            raise ConfigurationError("La dimensión por cabeza (d/heads) debe ser par")
        if model.layers < 1:
            raise ConfigurationError("model.layers debe ser >= 1")
        if not 0.0 <= model.dropout < 1.0:
            raise ConfigurationError("model.dropout debe estar en [0, 1)")
        if model.position_mode not in POSITION_MODES:
            raise ConfigurationError(f"model.position_mode debe ser uno de {POSITION_MODES}")
        if diffusion.schedule not in SCHEDULE_KINDS:
            raise ConfigurationError(f"diffusion.schedule debe ser uno de {SCHEDULE_KINDS}")
        if diffusion.T < 1:
            raise ConfigurationError("diffusion.T debe ser >= 1")
        if not 0.0 < diffusion.beta_start <= diffusion.beta_end < 1.0:
            raise ConfigurationError("Se requiere 0 < beta_start <= beta_end < 1")
        if not 1 <= diffusion.stride <= diffusion.T or diffusion.T % diffusion.stride != 0:
            raise ConfigurationError("diffusion.stride debe dividir a diffusion.T")
        if diffusion.omega < 0:
            raise ConfigurationError("diffusion.omega debe ser >= 0")
        if not 0.0 <= diffusion.null_prob <= 1.0:
            raise ConfigurationError("diffusion.null_prob debe estar en [0, 1]")
        if denoiser.kind not in DENOISER_KINDS:
            raise ConfigurationError(f"denoiser.kind debe ser uno de {DENOISER_KINDS}")
        if denoiser.depth < 1 or denoiser.m_s < 1 or denoiser.m_p < 0:
            raise ConfigurationError("denoiser.depth y denoiser.m_s deben ser >= 1, m_p >= 0")
        for name in ("rho", "sigma"):
            if not 0.0 <= getattr(train, name) <= 1.0:
                raise ConfigurationError(f"train.{name} debe estar en [0, 1]")
        if train.batch_size < 1 or train.learning_rate <= 0:
            raise ConfigurationError("train.batch_size y train.learning_rate deben ser positivos")
        if not self.eval.ks or any(k < 1 for k in self.eval.ks):
            raise ConfigurationError("eval.ks debe contener enteros positivos")


def read_key_values(path: str) -> dict[str, str]:
    """
    Lee un archivo key=value (comentarios con #, líneas vacías ignoradas).

    Raises:
        ConfigurationError: Si el archivo no existe o una línea no contiene '='
    """
    config_file = Path(path)
    if not config_file.is_file():
        raise ConfigurationError(f"No existe el archivo de configuración: {path}")

    values = {}
    for number, line in enumerate(config_file.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigurationError(f"{path}:{number}: se esperaba 'clave=valor'")
        values[key.strip()] = value.strip()
    return values


def parse_overrides(pairs: Optional[list[str]]) -> dict[str, str]:
    """Convierte ['model.d=32', ...] en un diccionario."""
    overrides = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep:
            raise ConfigurationError(f"Override inválido '{pair}', se esperaba seccion.clave=valor")
        overrides[key.strip()] = value.strip()
    return overrides


def get_output_dir(explicit: Optional[str] = None) -> Path:
    """
    Obtiene el directorio de salida: argumento, MBREC_OUTPUT_DIR o ./outputs.

    Returns:
        Path: Directorio creado si no existía
    """
    load_dotenv()
    output_dir = Path(explicit or os.getenv("MBREC_OUTPUT_DIR") or "outputs")
    output_dir.mkdir(parents=True, exist_ok=True)
    return output_dir


def get_device(config: RecConfig) -> str:
    """Dispositivo torch: MBREC_DEVICE si está definido, si no train.device."""
    load_dotenv()
    return os.getenv("MBREC_DEVICE") or config.train.device


def _coerce(raw: Any, target: Any, key: str) -> Any:
    if not isinstance(raw, str):
        return raw
    try:
        if target is bool:
            lowered = raw.lower()
            if lowered not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return lowered in ("true", "1", "yes")
        if target in (int, float, str):
            return target(raw)
        if typing.get_origin(target) is tuple:
            inner = typing.get_args(target)[0]
            return tuple(inner(part.strip()) for part in raw.split(",") if part.strip())
    except ValueError as exc:
        raise ConfigurationError(f"Valor inválido para '{key}': {raw!r}") from exc
    raise ConfigurationError(f"Tipo no soportado para '{key}'")


def _render(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(part) for part in value)
    return repr(value) if isinstance(value, float) else str(value)
