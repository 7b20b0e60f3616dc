import os
from pathlib import Path

import pytest

from sequences import PlantedConfig, Vocab, build_sequences, generate_synthetic
from utils import RecConfig

ROOT = Path(__file__).resolve().parents[1]
SAMPLE_FILES = ROOT / "sample_files"


def pytest_collection_modifyitems(config, items):
    if os.getenv("MBREC_RUN_SLOW") == "1":
        return
    skip_slow = pytest.mark.skip(reason="definir MBREC_RUN_SLOW=1 para las ejecuciones de aceptación")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch):
    for key in ("MBREC_CONFIG", "MBREC_OUTPUT_DIR", "MBREC_DEVICE"):
        monkeypatch.delenv(key, raising=False)


@pytest.fixture
def toy_data() -> Path:
    return SAMPLE_FILES / "toy.tsv"


@pytest.fixture
def toy_config_path() -> Path:
    return SAMPLE_FILES / "toy.cfg"


@pytest.fixture
def tiny_config() -> RecConfig:
    """Modelo y entrenamiento mínimos para pruebas rápidas."""
    return RecConfig.from_key_values({
        "data.seq_len": "8",
        "model.d": "16",
        "model.heads": "2",
        "model.layers": "1",
        "model.dropout": "0.0",
        "diffusion.T": "20",
        "diffusion.stride": "5",
        "denoiser.depth": "1",
        "train.stage1_epochs": "2",
        "train.stage2_epochs": "2",
        "train.stage3_epochs": "1",
        "train.batch_size": "8",
        "train.seed": "3",
        "eval.ks": "1,5",
    })


@pytest.fixture
def small_planted():
    params = PlantedConfig(num_users=24, num_items=40, num_behaviors=3, archetypes=2,
                         seq_len_range=(3, 9), cluster_size=4, seed=11)
    return generate_synthetic(params)


@pytest.fixture
def small_grouped(small_planted):
    grouped = {}
    for record in small_planted.interactions:
        grouped.setdefault(record.user_id, []).append(record)
    return grouped


@pytest.fixture
def small_vocab(small_planted) -> Vocab:
    return small_planted.header.vocab


@pytest.fixture
def small_sequences(small_grouped, small_vocab):
    return build_sequences(small_grouped, 8, small_vocab)
