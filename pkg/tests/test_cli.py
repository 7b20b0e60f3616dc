from pathlib import Path

import pytest

from run_pipeline import run
from utils import read_key_values

SAMPLE_FILES = Path(__file__).resolve().parents[1] / "sample_files"

TOY_DATA = str(SAMPLE_FILES / "toy.tsv")
TOY_CONFIG = str(SAMPLE_FILES / "toy.cfg")


def _run(command, out_dir, *extra):
    return run([command, "--out", str(out_dir), "--quiet", "--log-level", "WARNING", *extra])


@pytest.fixture(scope="module")
def trained_dir(tmp_path_factory):
    out_dir = tmp_path_factory.mktemp("toy_run")
    for command in ("pretrain", "train-diffusion", "finetune"):
        assert _run(command, out_dir, "--data", TOY_DATA, "--config", TOY_CONFIG) == 0
    return out_dir


def test_help_and_unknown_commands(capsys):
    assert run(["help"]) == 0
    assert "gen-data" in capsys.readouterr().out
    assert run(["frobnicate"]) == 2
    assert run([]) == 0


def test_gen_data_writes_dataset_and_manifest(tmp_path):
    status = _run("gen-data", tmp_path, "--users", "20", "--items", "30", "--behaviors", "2",
                  "--archetypes", "2", "--cluster-size", "3", "--min-len", "3", "--max-len", "6",
                  "--seed", "1")
    assert status == 0
    for suffix in (".tsv", ".header", ".manifest"):
        assert (tmp_path / f"synthetic{suffix}").is_file()
    assert read_key_values(str(tmp_path / "synthetic.header"))["num_items"] == "30"


def test_entropy_report(tmp_path):
    assert _run("entropy", tmp_path, "--data", TOY_DATA) == 0
    values = read_key_values(str(tmp_path / "entropy.txt"))
    assert set(values) >= {"H_I", "H_B", "H_B_given_I", "H_I_given_B", "MI"}


def test_staged_training_writes_checkpoints_and_logs(trained_dir):
    for stage in (1, 2, 3):
        assert (trained_dir / f"stage{stage}.manifest").is_file()
        assert (trained_dir / f"stage{stage}.bin").is_file()
        assert (trained_dir / f"train_stage{stage}.log").read_text().startswith("# epoch loss")
    resolved = read_key_values(str(trained_dir / "resolved_config.cfg"))
    assert resolved["model.d"] == "16"
    assert resolved["diffusion.T"] == "20"


def test_infer_is_reproducible(trained_dir):
    output = trained_dir / "infer_u0_b1.txt"
    assert _run("infer", trained_dir, "--data", TOY_DATA, "--user", "0", "--behavior", "1", "--k", "5") == 0
    first = output.read_text()
    assert _run("infer", trained_dir, "--data", TOY_DATA, "--user", "0", "--behavior", "1", "--k", "5") == 0
    assert output.read_text() == first
    ranked = [int(line.split("\t")[1]) for line in first.splitlines()]
    assert len(ranked) == 5 and len(set(ranked)) == 5


def test_infer_rejects_unknown_behavior_and_user(trained_dir):
    assert _run("infer", trained_dir, "--data", TOY_DATA, "--user", "0", "--behavior", "7") == 2
    assert _run("infer", trained_dir, "--data", TOY_DATA, "--user", "99", "--behavior", "0") == 2


def test_evaluate_writes_report(trained_dir):
    assert _run("evaluate", trained_dir, "--data", TOY_DATA) == 0
    text = (trained_dir / "eval_report.txt").read_text()
    assert "recall@1=" in text and "ndcg@5=" in text
    assert "config.model.position_mode=barope" in text
    assert _run("evaluate", trained_dir, "--data", TOY_DATA, "--no-diffusion") == 0


def test_attention_dump_and_similarity(trained_dir):
    assert _run("attn-dump", trained_dir, "--data", TOY_DATA, "--user", "1") == 0
    for suffix in (".grid", ".labels", ".png"):
        assert (trained_dir / f"attention_u1_barope{suffix}").is_file()
    assert _run("similarity", trained_dir, "--data", TOY_DATA) == 0
    assert "users=" in (trained_dir / "similarity.txt").read_text()


def test_grad_check_command(tmp_path):
    assert _run("grad-check", tmp_path, "--module", "linear") == 0
    assert "[linear]" in (tmp_path / "grad_check.txt").read_text()


def test_errors_map_to_exit_codes(tmp_path):
    assert _run("pretrain", tmp_path, "--data", TOY_DATA, "--set", "model.d=15") == 2
    assert _run("train-diffusion", tmp_path, "--data", TOY_DATA, "--config", TOY_CONFIG) == 1
    assert _run("entropy", tmp_path, "--data", str(tmp_path / "missing.tsv")) == 1


def test_resolved_config_records_overrides(tmp_path):
    assert _run("entropy", tmp_path, "--data", TOY_DATA, "--seed", "9", "--set", "eval.ks=3") == 0
    resolved = read_key_values(str(tmp_path / "resolved_config.cfg"))
    assert resolved["train.seed"] == "9"
    assert resolved["eval.ks"] == "3"


def test_missing_interactions_file_beside_header_exits_cleanly(tmp_path, capsys):
    (tmp_path / "orphan.header").write_text((SAMPLE_FILES / "toy.header").read_text(), encoding="utf-8")
    assert _run("entropy", tmp_path, "--data", str(tmp_path / "orphan.tsv")) == 1
    assert "❌" in capsys.readouterr().out


def test_global_seed_follows_resolved_config(tmp_path, monkeypatch):
    seeds = []
    monkeypatch.setattr("run_pipeline.seed_everything", seeds.append)
    assert _run("entropy", tmp_path, "--data", TOY_DATA, "--set", "train.seed=11") == 0
    assert seeds == [11]


def test_sweep_rejects_non_numeric_values(tmp_path):
    assert _run("sweep", tmp_path, "--data", TOY_DATA, "--config", TOY_CONFIG,
                "--axis", "omega", "--values", "1,dos") == 2
