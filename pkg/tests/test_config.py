import pytest

from utils import ConfigurationError, RecConfig, derive_seed, get_output_dir, numpy_rng, parse_overrides


def test_defaults_follow_reference_hyperparameters():
    config = RecConfig.from_sources()
    assert config.model.d == 64
    assert config.data.seq_len == 50
    assert config.train.learning_rate == pytest.approx(2e-3)
    assert config.train.batch_size == 256
    assert config.diffusion.null_prob == pytest.approx(0.2)
    assert config.denoiser.depth == 2
    assert config.eval.ks == (10, 20)


def test_precedence_defaults_file_overrides(tmp_path):
    config_file = tmp_path / "run.cfg"
    config_file.write_text("# comentario\nmodel.d=32\n\ndiffusion.T=100\n", encoding="utf-8")
    config = RecConfig.from_sources(str(config_file), {"model.d": "16"})
    assert config.model.d == 16
    assert config.diffusion.T == 100
    assert config.model.heads == 2


def test_config_path_from_environment(tmp_path, monkeypatch):
    config_file = tmp_path / "env.cfg"
    config_file.write_text("train.rho=0.4\n", encoding="utf-8")
    monkeypatch.setenv("MBREC_CONFIG", str(config_file))
    assert RecConfig.from_sources().train.rho == pytest.approx(0.4)


@pytest.mark.parametrize("overrides", [
    {"model.unknown": "1"},
    {"nosection.d": "1"},
    {"model.d": "abc"},
    {"model.position_mode": "sinusoidal"},
    {"diffusion.stride": "30"},
    {"train.rho": "1.5"},
    {"model.d": "30", "model.heads": "4"},
])
def test_invalid_values_raise_configuration_error(overrides):
    with pytest.raises(ConfigurationError):
        RecConfig.from_sources(overrides=overrides)


def test_key_values_round_trip_is_stable(tmp_path):
    config = RecConfig.from_sources(overrides={"eval.ks": "5,10", "model.include_behavior_in_input": "false"})
    rendered = config.to_key_values()
    assert rendered["eval.ks"] == "5,10"
    assert rendered["model.include_behavior_in_input"] == "false"
    assert RecConfig.from_key_values(rendered).to_key_values() == rendered

    path = tmp_path / "resolved_config.cfg"
    config.write(path)
    assert path.read_text(encoding="utf-8").splitlines()[0].startswith("data.seq_len=")


def test_parse_overrides_rejects_missing_equals():
    assert parse_overrides(["model.d=8", "train.seed = 3"]) == {"model.d": "8", "train.seed": "3"}
    with pytest.raises(ConfigurationError):
        parse_overrides(["model.d"])


def test_output_dir_falls_back_to_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("MBREC_OUTPUT_DIR", str(tmp_path / "env_out"))
    assert get_output_dir() == tmp_path / "env_out"
    assert (tmp_path / "env_out").is_dir()
    assert get_output_dir(str(tmp_path / "explicit")) == tmp_path / "explicit"


def test_seed_streams_are_stable_and_distinct():
    assert derive_seed(7, "data") == derive_seed(7, "data")
    assert derive_seed(7, "infer", 1) != derive_seed(7, "infer", 2)
    assert 0 <= derive_seed(123, "stage", 1) < 2**63
    assert numpy_rng(5, "x").integers(1000) == numpy_rng(5, "x").integers(1000)
