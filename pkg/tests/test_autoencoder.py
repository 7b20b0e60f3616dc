import numpy as np
import pytest
import torch

from autoencoder import ItemDecoder, MultiBehaviorAutoEncoder, mbae_loss, preference_similarity, with_slot_behavior
from autoencoder.attention_io import plot_attention_map, read_attention_grid, sequence_labels, write_attention_grid
from sequences import Sequence, Vocab, next_item_split
from utils import UsageError
from utils.config import ModelConfig

VOCAB = Vocab(num_items=9, num_behaviors=3)


def _model(mode="barope", **kwargs) -> MultiBehaviorAutoEncoder:
    torch.manual_seed(0)
    return MultiBehaviorAutoEncoder(VOCAB, 6, ModelConfig(d=16, heads=2, layers=2, dropout=0.0,
                                                          position_mode=mode, **kwargs)).eval()


def _sequence(items, behaviors, user_id=0):
    return Sequence(user_id, np.array(items), np.array(behaviors), sum(b != VOCAB.behavior_pad for b in behaviors))


@pytest.mark.parametrize("mode", ["ape", "rope", "barope"])
def test_padding_is_neutral(mode):
    model = _model(mode)
    pad_i, pad_b = VOCAB.item_pad, VOCAB.behavior_pad
    base = _sequence([pad_i, pad_i, 1, 2, VOCAB.item_mask, 4], [pad_b, pad_b, 0, 1, 2, 0])
    altered = base.copy()
    altered.items[:2] = [5, 7]  # tokens ocultos bajo relleno de comportamiento
    hidden_a, (latent_a,) = model.encode_sequence(base, [4])
    hidden_b, (latent_b,) = model.encode_sequence(altered, [4])
    assert torch.allclose(latent_a.z, latent_b.z)
    assert torch.all(hidden_a[:2] == 0)


def test_agnostic_latent_differs_from_behavior_specific():
    model = _model()
    agnostic = _sequence([1, 2, 3, 4, 5, VOCAB.item_mask], [0, 1, 2, 0, 1, VOCAB.behavior_mask])
    _, (z_agn,) = model.encode_sequence(agnostic, [5])
    _, (z_b,) = model.encode_sequence(with_slot_behavior(agnostic, 2), [5])
    assert z_agn.is_agnostic and z_b.behavior == 2
    assert not torch.allclose(z_agn.z, z_b.z)


def test_encode_rejects_padding_position():
    model = _model()
    sequence = _sequence([VOCAB.item_pad, 1, 2, 3, 4, 5], [VOCAB.behavior_pad, 0, 1, 2, 0, 1])
    with pytest.raises(UsageError):
        model.encode_sequence(sequence, [0])


def test_decode_covers_catalog_and_loss_is_finite():
    model = _model()
    z = torch.randn(4, 16)
    logits = model.decode(z)
    assert logits.shape == (4, VOCAB.num_items)
    loss = mbae_loss(logits, torch.tensor([0, 1, 2, 8]))
    assert torch.isfinite(loss)


def test_uniform_logits_give_log_catalog_loss():
    logits = torch.zeros(3, VOCAB.num_items)
    assert float(mbae_loss(logits, torch.tensor([0, 4, 8]))) == pytest.approx(np.log(VOCAB.num_items))


def test_attention_maps_zero_padding_rows(tmp_path):
    model = _model("ape")
    sequence = _sequence([VOCAB.item_pad, 1, 2, 3, 4, 5], [VOCAB.behavior_pad, 0, 1, 2, 0, 1])
    matrix = model.attention_maps(sequence)
    assert matrix.shape == (6, 6)
    assert torch.all(matrix[0] == 0)
    assert torch.allclose(matrix[1:].sum(-1), torch.ones(5))

    grid = write_attention_grid(matrix.numpy(), tmp_path / "map.grid")
    np.testing.assert_array_equal(read_attention_grid(grid), matrix.numpy().astype(np.float64))
    labels = sequence_labels(sequence, VOCAB, ["click", "fav", "buy"])
    assert labels[:3] == ["pad", "1_click", "2_fav"]
    assert plot_attention_map(matrix.numpy(), labels, tmp_path / "map.png").is_file()


def test_preference_similarity_shapes(small_sequences, small_vocab):
    model = MultiBehaviorAutoEncoder(small_vocab, 8, ModelConfig(d=16, heads=2, layers=1, dropout=0.0))
    examples, _ = next_item_split(small_sequences, small_vocab)
    matrix, means = preference_similarity(model, examples, batch_size=5)
    assert matrix.shape == (len(examples), small_vocab.num_behaviors)
    assert np.all(np.abs(matrix) <= 1 + 1e-6)
    np.testing.assert_allclose(means, matrix.mean(axis=0))


def test_confident_target_drives_loss_to_zero():
    logits = torch.tensor([[30.0, 0.0, 0.0]], dtype=torch.float64)
    assert mbae_loss(logits, torch.tensor([0])) < 1e-12


def test_batch_loss_is_mean_of_position_losses():
    logits = torch.tensor([[2.0, 0.5, -1.0], [0.0, 1.0, 3.0]], dtype=torch.float64)
    targets = torch.tensor([1, 2])
    a = mbae_loss(logits[:1], targets[:1])
    b = mbae_loss(logits[1:], targets[1:])
    assert torch.allclose(mbae_loss(logits, targets), (a + b) / 2)


def test_decode_against_axis_items_and_positive_scaling_keeps_ranking():
    decoder = ItemDecoder(3).double()
    decoder.net = torch.nn.Identity()
    table = torch.cat([torch.eye(3, dtype=torch.float64), torch.zeros(2, 3, dtype=torch.float64)])
    z = torch.tensor([[1.0, 0.0, 0.0]], dtype=torch.float64)
    assert decoder(z, table, 3).tolist() == [[1.0, 0.0, 0.0]]

    z = torch.tensor([[0.3, -0.2, 0.9]], dtype=torch.float64)
    logits = decoder(z, table, 3)
    scaled = decoder(4.0 * z, table, 3)
    assert torch.allclose(scaled, 4.0 * logits)
    assert torch.equal(torch.argsort(scaled, descending=True), torch.argsort(logits, descending=True))


def test_eval_mode_encode_is_bit_identical():
    model = MultiBehaviorAutoEncoder(VOCAB, 6, ModelConfig(d=16, heads=2, layers=2, dropout=0.3,
                                                           position_mode="barope")).eval()
    items = torch.tensor([[VOCAB.item_pad, 1, 2, 3, VOCAB.item_mask, 5]])
    behaviors = torch.tensor([[VOCAB.behavior_pad, 0, 1, 2, VOCAB.behavior_mask, 0]])
    rows, cols = torch.tensor([0, 0]), torch.tensor([4, 5])
    first = model.encode(items, behaviors, rows, cols)
    second = model.encode(items, behaviors, rows, cols)
    assert torch.equal(first[0], second[0])
    assert torch.equal(first[1], second[1])
