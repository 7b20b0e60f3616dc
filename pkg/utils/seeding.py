"""
Derivación de semillas y generadores aleatorios.
Toda la aleatoriedad del proyecto parte de una única semilla y de claves de flujo.
"""

import hashlib
import random

import numpy as np
import torch


def derive_seed(seed: int, *keys) -> int:
    """
    Deriva una semilla de 63 bits estable a partir de la semilla base y claves de flujo.

    Args:
        seed: Semilla base de la ejecución
        *keys: Claves del flujo, p. ej. ("infer", user_id)

    Returns:
        int: Semilla derivada, idéntica entre procesos y plataformas
    """
    payload = "/".join(str(part) for part in (seed, *keys)).encode("utf-8")
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "little") & ((1 << 63) - 1)


def numpy_rng(seed: int, *keys) -> np.random.Generator:
    """Generador de numpy para el flujo (seed, *keys)."""
    return np.random.default_rng(derive_seed(seed, *keys))


def torch_generator(seed: int, *keys) -> torch.Generator:
    """Generador de torch (CPU) para el flujo (seed, *keys)."""
    generator = torch.Generator()
    generator.manual_seed(derive_seed(seed, *keys))
    return generator


def seed_everything(seed: int) -> None:
    """Fija las semillas globales y activa algoritmos deterministas."""
    random.seed(seed)
    np.random.seed(derive_seed(seed, "numpy") % (2**32))
    torch.manual_seed(derive_seed(seed, "torch"))
    torch.use_deterministic_algorithms(True, warn_only=True)
