import numpy as np
import pytest

from sequences import (
    DatasetHeader,
    Interaction,
    PlantedConfig,
    Sequence,
    Vocab,
    build_sequences,
    cloze_mask,
    filter_min_interactions,
    gen_synthetic,
    generate_synthetic,
    inference_prefix,
    load_interactions,
    next_item_split,
    planted_purity,
    read_header,
    read_manifest,
    split_leave_one_out,
    write_interactions,
)
from utils import ConfigurationError, DataFormatError, EmptyDatasetError, UsageError, VocabularyError

VOCAB = Vocab(num_items=10, num_behaviors=4)


def _write(tmp_path, body: str, header=DatasetHeader(3, 10, 4)):
    path = tmp_path / "data.tsv"
    path.write_text(body, encoding="utf-8")
    (tmp_path / "data.header").write_text(
        f"num_users={header.num_users}\nnum_items={header.num_items}\nnum_behaviors={header.num_behaviors}\n",
        encoding="utf-8")
    return path


def test_reserved_tokens_sit_after_the_vocabulary():
    assert (VOCAB.item_pad, VOCAB.item_mask) == (10, 11)
    assert (VOCAB.behavior_pad, VOCAB.behavior_mask) == (4, 5)
    assert VOCAB.item_table_size == 12


def test_load_sorts_by_timestamp_then_line(tmp_path):
    path = _write(tmp_path, "1\t3\t0\t20\n1\t4\t1\t10\n0\t2\t2\t5\n1\t5\t3\t10\n")
    grouped = load_interactions(path)
    assert list(grouped) == [0, 1]
    assert [record.item_id for record in grouped[1]] == [4, 5, 3]


@pytest.mark.parametrize("body, error, line", [
    ("0\t1\t0\n", DataFormatError, 1),
    ("0\t1\t0\t1\n0\tx\t0\t2\n", DataFormatError, 2),
])
def test_malformed_lines_report_line_number(tmp_path, body, error, line):
    with pytest.raises(error) as excinfo:
        load_interactions(_write(tmp_path, body))
    assert excinfo.value.line_number == line


def test_out_of_range_ids_and_empty_files(tmp_path):
    with pytest.raises(VocabularyError):
        load_interactions(_write(tmp_path, "0\t10\t0\t1\n"))
    with pytest.raises(VocabularyError):
        load_interactions(_write(tmp_path, "0\t1\t4\t1\n"))
    with pytest.raises(EmptyDatasetError):
        load_interactions(_write(tmp_path, "\n"))


def test_write_then_read_header(tmp_path):
    records = [Interaction(0, 1, 2, 0), Interaction(0, 3, 1, 1)]
    path = write_interactions(tmp_path / "out.tsv", records, DatasetHeader(1, 10, 4))
    assert read_header(path) == DatasetHeader(1, 10, 4)
    assert [r.item_id for r in load_interactions(path)[0]] == [1, 3]


def _records(user_id, pairs):
    return [Interaction(user_id, item, behavior, t) for t, (item, behavior) in enumerate(pairs)]


def test_build_sequences_left_pads_and_truncates():
    grouped = {0: _records(0, [(1, 0), (2, 1)]), 1: _records(1, [(i, i % 4) for i in range(7)])}
    short, long_ = build_sequences(grouped, 5, VOCAB)
    assert short.items.tolist() == [10, 10, 10, 1, 2]
    assert short.behaviors.tolist() == [4, 4, 4, 0, 1]
    assert short.length_real == 2
    assert long_.items.tolist() == [2, 3, 4, 5, 6]
    assert long_.length_real == 5
    with pytest.raises(ConfigurationError):
        build_sequences(grouped, 0, VOCAB)


def test_next_item_split_masks_the_final_slot():
    grouped = {0: _records(0, [(1, 0), (2, 1), (3, 2)]), 1: _records(1, [(4, 3)])}
    examples, skipped = next_item_split(build_sequences(grouped, 5, VOCAB), VOCAB)
    assert skipped == 1
    (example,) = examples
    assert example.prefix.items.tolist() == [10, 10, 1, 2, 11]
    assert example.prefix.behaviors.tolist() == [4, 4, 0, 1, 5]
    assert (example.target_item, example.target_behavior) == (3, 2)


def test_split_leave_one_out_keeps_single_interaction_users_in_train():
    grouped = {0: _records(0, [(1, 0), (2, 1)]), 1: _records(1, [(4, 3)])}
    train, held_out = split_leave_one_out(grouped)
    assert [r.item_id for r in train[0]] == [1]
    assert held_out[0].item_id == 2
    assert 1 in train and 1 not in held_out


def test_inference_prefix_appends_slot_after_full_history():
    prefix = inference_prefix(0, _records(0, [(i, i % 4) for i in range(6)]), 4, VOCAB)
    assert prefix.items.tolist() == [3, 4, 5, 11]
    assert prefix.behaviors.tolist() == [3, 0, 1, 5]


def test_cloze_mask_positions_and_targets(small_sequences, small_vocab):
    rng = np.random.default_rng(0)
    batch = cloze_mask(small_sequences, 0.5, 1.0, rng, small_vocab)
    for original, masked, positions, items in zip(small_sequences, batch.sequences,
                                                   batch.masked_positions, batch.target_items):
        assert len(positions) >= 1
        assert set(positions.tolist()) <= set(original.real_positions().tolist())
        assert (masked.items[positions] == small_vocab.item_mask).all()
        assert (masked.behaviors[positions] == small_vocab.behavior_mask).all()
        assert (items == original.items[positions]).all()
    rows, cols = batch.flat_index()
    assert len(rows) == len(cols) == batch.num_masked


def test_cloze_mask_forces_one_position_and_validates(small_sequences, small_vocab):
    batch = cloze_mask(small_sequences, 0.0, 0.0, np.random.default_rng(1), small_vocab)
    assert all(len(p) == 1 for p in batch.masked_positions)
    assert not any(flags.any() for flags in batch.behavior_masked_flags)
    with pytest.raises(UsageError):
        cloze_mask(small_sequences, 1.2, 0.0, np.random.default_rng(1), small_vocab)


def test_synthetic_is_deterministic_and_pure(tmp_path):
    params = PlantedConfig(num_users=30, num_items=50, num_behaviors=2, archetypes=3, cluster_size=5, seed=4)
    first, second = generate_synthetic(params), generate_synthetic(params)
    assert first.interactions == second.interactions

    data_path, manifest_path = gen_synthetic(params, tmp_path / "planted.tsv")
    manifest = read_manifest(manifest_path)
    assert manifest.clusters == first.manifest.clusters
    assert planted_purity(load_interactions(data_path), manifest) == 1.0


def test_synthetic_rejects_infeasible_clusters():
    with pytest.raises(ConfigurationError):
        generate_synthetic(PlantedConfig(num_items=10, archetypes=2, num_behaviors=2, cluster_size=5 + 1))


def test_filter_min_interactions():
    grouped = {0: _records(0, [(1, 0)]), 1: _records(1, [(1, 0), (2, 1)])}
    assert list(filter_min_interactions(grouped, 2)) == [1]


def test_cloze_mask_fraction_converges_to_rho():
    vocab = Vocab(num_items=50, num_behaviors=2)
    rng = np.random.default_rng(3)
    sequences = [Sequence(user, rng.integers(50, size=10), rng.integers(2, size=10), 10) for user in range(4000)]
    batch = cloze_mask(sequences, 0.3, 0.0, np.random.default_rng(0), vocab)
    # Una posición forzada cuando ninguna sale elegida: E = 0.3 + 0.7^10 / 10
    expected = 0.3 + 0.7 ** 10 / 10
    assert abs(batch.num_masked / (10 * len(sequences)) - expected) < 0.01


def test_cloze_mask_with_unit_rho_masks_every_real_position(small_sequences, small_vocab):
    batch = cloze_mask(small_sequences, 1.0, 0.0, np.random.default_rng(2), small_vocab)
    for original, masked, positions in zip(small_sequences, batch.sequences, batch.masked_positions):
        assert positions.tolist() == original.real_positions().tolist()
        assert (masked.items[original.real_positions()] == small_vocab.item_mask).all()


def test_synthetic_behavior_frequencies_match_configuration():
    params = PlantedConfig(num_users=5000, seq_len_range=(20, 20), behavior_frequencies=(0.7, 0.1, 0.1, 0.1))
    dataset = generate_synthetic(params)
    behaviors = np.array([record.behavior_id for record in dataset.interactions])
    assert behaviors.size == 100_000
    empirical = np.bincount(behaviors, minlength=4) / behaviors.size
    assert np.all(np.abs(empirical - np.array([0.7, 0.1, 0.1, 0.1])) <= 0.01)
