"""
Generador de conjuntos de datos sintéticos con verdad plantada.

Cada usuario pertenece a un arquetipo; para cada (arquetipo, comportamiento) existe un
clúster disjunto de ítems y cada interacción toma un ítem de su clúster.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from utils.errors import ConfigurationError, DataFormatError
from utils.seeding import numpy_rng

from .interactions import DatasetHeader, GroupedInteractions, Interaction, write_interactions

logger = logging.getLogger(__name__)


@dataclass
class PlantedConfig:
    num_users: int = 500
    num_items: int = 200
    num_behaviors: int = 4
    archetypes: int = 5
    seq_len_range: tuple[int, int] = (8, 30)
    behavior_frequencies: Optional[tuple[float, ...]] = None
    cluster_size: int = 10
    seed: int = 7

    def frequencies(self) -> np.ndarray:
        if self.behavior_frequencies is None:
            return np.full(self.num_behaviors, 1.0 / self.num_behaviors)
        return np.asarray(self.behavior_frequencies, dtype=np.float64)

    def validate(self) -> None:
        """
        Raises:
            ConfigurationError: Si los tamaños o las frecuencias no son coherentes
        """
        for name in ("num_users", "num_items", "num_behaviors", "archetypes", "cluster_size"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} debe ser positivo")
        low, high = self.seq_len_range
        if not 1 <= low <= high:
            raise ConfigurationError("seq_len_range debe cumplir 1 <= min <= max")
        freqs = self.frequencies()
        if freqs.shape != (self.num_behaviors,) or np.any(freqs < 0) or abs(freqs.sum() - 1.0) > 1e-12:
            raise ConfigurationError("behavior_frequencies debe ser un vector de probabilidad sobre los comportamientos")
        if self.archetypes * self.num_behaviors * self.cluster_size > self.num_items:
            raise ConfigurationError(
                "Asignación de clústeres inviable: archetypes * num_behaviors * cluster_size > num_items"
            )


@dataclass
class PlantedManifest:
    """Verdad plantada: arquetipo de cada usuario y tabla de clústeres."""

    params: PlantedConfig
    user_archetypes: dict[int, int]
    clusters: dict[tuple[int, int], tuple[int, ...]] = field(default_factory=dict)

    def cluster_for(self, user_id: int, behavior_id: int) -> tuple[int, ...]:
        return self.clusters[(self.user_archetypes[user_id], behavior_id)]


@dataclass
class PlantedDataset:
    interactions: list[Interaction]
    manifest: PlantedManifest

    @property
    def header(self) -> DatasetHeader:
        params = self.manifest.params
        return DatasetHeader(params.num_users, params.num_items, params.num_behaviors)


def generate_synthetic(params: PlantedConfig) -> PlantedDataset:
    """
    Genera las interacciones plantadas de forma determinista a partir de la semilla.

    Returns:
        PlantedDataset: Interacciones (ordenadas por usuario y tiempo) y manifiesto
    """
    params.validate()
    rng = numpy_rng(params.seed, "data")

    permutation = rng.permutation(params.num_items)
    clusters = {}
    for archetype in range(params.archetypes):
        for behavior in range(params.num_behaviors):
            start = (archetype * params.num_behaviors + behavior) * params.cluster_size
            block = permutation[start:start + params.cluster_size]
            clusters[(archetype, behavior)] = tuple(int(item) for item in sorted(block))

    freqs = params.frequencies()
    low, high = params.seq_len_range
    user_archetypes, interactions = {}, []
    for user_id in range(params.num_users):
        archetype = int(rng.integers(params.archetypes))
        user_archetypes[user_id] = archetype
        length = int(rng.integers(low, high + 1))
        behaviors = rng.choice(params.num_behaviors, size=length, p=freqs)
        picks = rng.integers(params.cluster_size, size=length)
        for timestamp, (behavior, pick) in enumerate(zip(behaviors, picks)):
            item = clusters[(archetype, int(behavior))][int(pick)]
            interactions.append(Interaction(user_id, item, int(behavior), timestamp))

    logger.info("Generadas %d interacciones sintéticas para %d usuarios", len(interactions), params.num_users)
    return PlantedDataset(interactions, PlantedManifest(params, user_archetypes, clusters))


def gen_synthetic(params: PlantedConfig, path: Path) -> tuple[Path, Path]:
    """
    Genera el conjunto sintético y lo escribe en disco.

    Args:
        params: Parámetros del generador
        path: Ruta del archivo TSV de interacciones

    Returns:
        tuple: (archivo de interacciones, archivo de manifiesto); la cabecera se
            escribe junto al archivo de interacciones
    """
    dataset = generate_synthetic(params)
    data_path = write_interactions(path, dataset.interactions, dataset.header)
    manifest_path = write_manifest(Path(path).with_suffix(".manifest"), dataset.manifest)
    return data_path, manifest_path


def write_manifest(path: Path, manifest: PlantedManifest) -> Path:
    params = manifest.params
    lines = [
        f"num_users={params.num_users}",
        f"num_items={params.num_items}",
        f"num_behaviors={params.num_behaviors}",
        f"archetypes={params.archetypes}",
        f"seq_len_min={params.seq_len_range[0]}",
        f"seq_len_max={params.seq_len_range[1]}",
        "behavior_frequencies=" + ",".join(repr(float(f)) for f in params.frequencies()),
        f"cluster_size={params.cluster_size}",
        f"seed={params.seed}",
    ]
    for (archetype, behavior), items in sorted(manifest.clusters.items()):
        lines.append(f"cluster {archetype} {behavior} " + " ".join(str(item) for item in items))
    for user_id, archetype in sorted(manifest.user_archetypes.items()):
        lines.append(f"user {user_id} {archetype}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return Path(path)


def read_manifest(path: Path) -> PlantedManifest:
    """
    Lee un manifiesto escrito por write_manifest.

    Raises:
        DataFormatError: Si alguna línea no sigue el formato
    """
    values, clusters, archetypes = {}, {}, {}
    for number, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        try:
            if parts[0] == "cluster":
                clusters[(int(parts[1]), int(parts[2]))] = tuple(int(item) for item in parts[3:])
            elif parts[0] == "user":
                archetypes[int(parts[1])] = int(parts[2])
            else:
                key, sep, value = line.partition("=")
                if not sep:
                    raise ValueError(line)
                values[key.strip()] = value.strip()
        except (ValueError, IndexError) as exc:
            raise DataFormatError(f"manifiesto mal formado: {line!r}", number) from exc

    try:
        params = PlantedConfig(
            num_users=int(values["num_users"]),
            num_items=int(values["num_items"]),
            num_behaviors=int(values["num_behaviors"]),
            archetypes=int(values["archetypes"]),
            seq_len_range=(int(values["seq_len_min"]), int(values["seq_len_max"])),
            behavior_frequencies=tuple(float(f) for f in values["behavior_frequencies"].split(",")),
            cluster_size=int(values["cluster_size"]),
            seed=int(values["seed"]),
        )
    except (KeyError, ValueError) as exc:
        raise DataFormatError(f"manifiesto incompleto: {exc}") from exc
    return PlantedManifest(params, archetypes, clusters)


def planted_purity(grouped: GroupedInteractions, manifest: PlantedManifest) -> float:
    """Fracción de interacciones cuyo ítem pertenece a su clúster plantado."""
    total = hits = 0
    for user_id, records in grouped.items():
        for record in records:
            total += 1
            hits += record.item_id in manifest.cluster_for(user_id, record.behavior_id)
    return hits / total if total else 0.0
