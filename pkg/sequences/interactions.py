"""
Lectura y escritura de registros de interacciones multi-comportamiento.

Formato: texto UTF-8, una interacción por línea con cuatro enteros separados por
tabulador `user_id item_id behavior_id timestamp`, y un archivo de cabecera hermano
(`<nombre>.header`, key=value) que declara num_users, num_items y num_behaviors.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from utils.errors import DataFormatError, EmptyDatasetError, VocabularyError

logger = logging.getLogger(__name__)

GroupedInteractions = dict[int, list["Interaction"]]


@dataclass(frozen=True)
class Vocab:
    """Tamaños de vocabulario y tokens reservados añadidos tras cada vocabulario."""

    num_items: int
    num_behaviors: int

    def __post_init__(self):
        if self.num_items < 1 or self.num_behaviors < 1:
            raise VocabularyError("num_items y num_behaviors deben ser positivos")

    @property
    def item_pad(self) -> int:
        return self.num_items

    @property
    def item_mask(self) -> int:
        return self.num_items + 1

    @property
    def behavior_pad(self) -> int:
        return self.num_behaviors

    @property
    def behavior_mask(self) -> int:
        return self.num_behaviors + 1

    @property
    def item_table_size(self) -> int:
        return self.num_items + 2

    @property
    def behavior_table_size(self) -> int:
        return self.num_behaviors + 2


@dataclass(frozen=True)
class DatasetHeader:
    num_users: int
    num_items: int
    num_behaviors: int

    @property
    def vocab(self) -> Vocab:
        return Vocab(self.num_items, self.num_behaviors)


@dataclass(frozen=True)
class Interaction:
    user_id: int
    item_id: int
    behavior_id: int
    timestamp: int
    line_number: int = 0


def header_path_for(path: Path) -> Path:
    """Ruta del archivo de cabecera hermano de un archivo de interacciones."""
    return Path(path).with_suffix(".header")


def read_header(path: Path) -> DatasetHeader:
    """
    Lee la cabecera key=value de un conjunto de datos.

    Args:
        path: Ruta del archivo de interacciones o de la propia cabecera

    Returns:
        DatasetHeader: Tamaños declarados

    Raises:
        DataFormatError: Si falta una clave o un valor no es entero
    """
    path = Path(path)
    header_file = path if path.suffix == ".header" else header_path_for(path)
    if not header_file.is_file():
        raise DataFormatError(f"No existe la cabecera {header_file}")

    values = {}
    for number, line in enumerate(header_file.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise DataFormatError("se esperaba clave=valor en la cabecera", number)
        values[key.strip()] = value.strip()

    try:
        return DatasetHeader(
            num_users=int(values["num_users"]),
            num_items=int(values["num_items"]),
            num_behaviors=int(values["num_behaviors"]),
        )
    except KeyError as exc:
        raise DataFormatError(f"Falta la clave {exc.args[0]} en {header_file}") from exc
    except ValueError as exc:
        raise DataFormatError(f"Valor no entero en {header_file}: {exc}") from exc


def write_header(path: Path, header: DatasetHeader) -> Path:
    header_file = header_path_for(path)
    header_file.write_text(
        f"num_users={header.num_users}\n"
        f"num_items={header.num_items}\n"
        f"num_behaviors={header.num_behaviors}\n",
        encoding="utf-8",
    )
    return header_file


def load_interactions(path: Path, vocab: Optional[Vocab] = None) -> GroupedInteractions:
    """
    Carga un archivo de interacciones agrupado por usuario.

    Cada grupo se ordena por (timestamp, número de línea); los ids se validan contra
    el vocabulario (el de la cabecera si no se indica otro).

    Args:
        path: Archivo TSV de interacciones
        vocab: Vocabulario contra el que validar (opcional)

    Returns:
        GroupedInteractions: user_id -> interacciones ordenadas, usuarios en orden ascendente

    Raises:
        DataFormatError: Línea mal formada (incluye el número de línea)
        VocabularyError: Id fuera de rango
        EmptyDatasetError: Archivo sin interacciones
    """
    path = Path(path)
    if vocab is None:
        vocab = read_header(path).vocab

    grouped: dict[int, list[Interaction]] = defaultdict(list)
    with path.open(encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise DataFormatError(f"se esperaban 4 campos, hay {len(fields)}", number)
            try:
                user_id, item_id, behavior_id, timestamp = (int(field) for field in fields)
            except ValueError as exc:
                raise DataFormatError(f"entero inválido: {line!r}", number) from exc
            if min(user_id, item_id, behavior_id, timestamp) < 0:
                raise DataFormatError("los ids y timestamps deben ser no negativos", number)
            if item_id >= vocab.num_items:
                raise VocabularyError(f"línea {number}: item_id {item_id} >= {vocab.num_items}")
            if behavior_id >= vocab.num_behaviors:
                raise VocabularyError(
                    f"línea {number}: behavior_id {behavior_id} >= {vocab.num_behaviors}"
                )
            grouped[user_id].append(Interaction(user_id, item_id, behavior_id, timestamp, number))

    if not grouped:
        raise EmptyDatasetError(f"{path} no contiene interacciones")

    for user_interactions in grouped.values():
        user_interactions.sort(key=lambda record: (record.timestamp, record.line_number))

    logger.info("Cargadas %d interacciones de %d usuarios desde %s",
                sum(len(group) for group in grouped.values()), len(grouped), path)
    return {user_id: grouped[user_id] for user_id in sorted(grouped)}


def write_interactions(path: Path, interactions: Iterable[Interaction], header: DatasetHeader) -> Path:
    """Escribe interacciones en formato TSV junto con su cabecera."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for record in interactions:
            handle.write(f"{record.user_id}\t{record.item_id}\t{record.behavior_id}\t{record.timestamp}\n")
    write_header(path, header)
    return path


def flatten(grouped: GroupedInteractions) -> list[Interaction]:
    """Interacciones de todos los usuarios, por usuario y en orden temporal."""
    return [record for user_id in grouped for record in grouped[user_id]]


def filter_min_interactions(grouped: GroupedInteractions, min_count: int) -> GroupedInteractions:
    """Descarta usuarios con menos de `min_count` interacciones."""
    kept = {user_id: group for user_id, group in grouped.items() if len(group) >= min_count}
    dropped = len(grouped) - len(kept)
    if dropped:
        logger.info("Filtro min_interactions=%d descartó %d usuarios", min_count, dropped)
    return kept
