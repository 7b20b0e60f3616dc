import logging
import math

import pytest
import torch

from evaluation import (
    build_report,
    config_for,
    evaluate,
    few_shot_drop,
    ndcg_at_k,
    parse_axis_values,
    recall_at_k,
    sweep,
    target_ranks,
)
from models import ModelFactory
from sequences import Interaction
from training import infer_next_item, prepare_data, rank_items
from utils import ConfigurationError, EmptyDatasetError, UsageError


@pytest.fixture
def model(small_vocab, tiny_config):
    return ModelFactory.create_recommender(small_vocab, tiny_config)


@pytest.fixture
def data(small_grouped, small_vocab, tiny_config):
    return prepare_data(small_grouped, small_vocab, tiny_config)


def test_metric_values():
    assert recall_at_k(1, 10) == 1.0
    assert recall_at_k(10, 10) == 1.0
    assert recall_at_k(11, 10) == 0.0
    assert recall_at_k(None, 10) == 0.0
    assert ndcg_at_k(1, 10) == 1.0
    assert ndcg_at_k(3, 10) == pytest.approx(0.5)
    assert ndcg_at_k(2, 1) == 0.0
    assert ndcg_at_k(None, 5) == 0.0


def test_ranks_follow_ascending_id_tie_break():
    logits = torch.tensor([[1.0, 3.0, 3.0, 0.0]])
    assert rank_items(logits[0], 4).tolist() == [1, 2, 0, 3]
    ranks = [int(target_ranks(logits, torch.tensor([target]))[0]) for target in range(4)]
    assert ranks == [3, 1, 2, 4]


def test_metrics_are_monotone_in_k():
    ranks = [1, 4, 7, 12, 30, 2]
    report = build_report(ranks, [0, 1, 0, 1, 2, 2], ks=(1, 5, 10, 20))
    recalls = [report.metric("recall", k) for k in (1, 5, 10, 20)]
    ndcgs = [report.metric("ndcg", k) for k in (1, 5, 10, 20)]
    assert recalls == sorted(recalls)
    assert ndcgs == sorted(ndcgs)


def test_overall_is_count_weighted_mean_of_behaviors():
    ranks = [1, 4, 7, 12, 30, 2, 3]
    behaviors = [0, 1, 0, 1, 2, 2, 0]
    report = build_report(ranks, behaviors, ks=(5,))
    for name in ("recall", "ndcg"):
        weighted = sum(report.behavior_counts[b] * report.metric(name, 5, b)
                       for b in report.per_behavior) / report.num_examples
        assert report.metric(name, 5) == pytest.approx(weighted)
    assert report.behavior_counts == {0: 3, 1: 2, 2: 2}
    assert report.metric("ndcg", 5, 0) == pytest.approx((1.0 + 1 / math.log2(4)) / 3)


def test_report_text_and_key_values(tmp_path):
    report = build_report([1, 2], [0, 1], ks=(1,))
    text = report.to_text(["click", "buy"])
    assert "click" in text and "buy" in text and "recall@1" in text
    values = report.to_key_values()
    assert values["num_examples"] == "2"
    assert values["behavior.1.recall@1"] == "0.0"
    written = report.write(tmp_path / "eval.txt").read_text()
    assert "recall@1=0.5" in written


def _history(counts):
    grouped, timestamp = {}, 0
    for user_id, behaviors in counts.items():
        grouped[user_id] = []
        for behavior in behaviors:
            grouped[user_id].append(Interaction(user_id, timestamp % 7, behavior, timestamp))
            timestamp += 1
    return grouped


def _count(grouped, behavior):
    return sum(record.behavior_id == behavior for records in grouped.values() for record in records)


def test_few_shot_drop_counts():
    grouped = _history({u: [0] * 10 + [1] * 3 for u in range(10)} | {10: [0]})
    assert _count(grouped, 0) == 101
    assert _count(few_shot_drop(grouped, 0, 0.0, seed=1), 0) == 101
    half = few_shot_drop(grouped, 0, 0.5, seed=1)
    assert _count(half, 0) == 51
    assert _count(half, 1) == 30
    none_left = few_shot_drop(grouped, 0, 1.0, seed=1)
    assert _count(none_left, 0) == 0
    assert 10 not in none_left
    assert half == few_shot_drop(grouped, 0, 0.5, seed=1)


def test_few_shot_drop_preserves_order():
    grouped = _history({0: [0, 1, 0, 1, 0]})
    reduced = few_shot_drop(grouped, 0, 1.0, seed=0)
    assert [record.timestamp for record in reduced[0]] == [1, 3]


def test_few_shot_ratio_range():
    with pytest.raises(UsageError):
        few_shot_drop(_history({0: [0]}), 0, 1.5, seed=0)


def test_evaluate_is_deterministic(model, data, tiny_config):
    guidance = ModelFactory.create_guidance(tiny_config)
    first = evaluate(model, data.test_examples, (1, 5), guidance, seed=3)
    second = evaluate(model, data.test_examples, (1, 5), guidance, seed=3)
    assert first.overall == second.overall
    assert first.num_examples == len(data.test_examples)
    assert model.training


def test_evaluate_batching_does_not_change_results(model, data, tiny_config):
    guidance = ModelFactory.create_guidance(tiny_config)
    whole = evaluate(model, data.test_examples, (5,), guidance, seed=3, batch_size=512)
    split = evaluate(model, data.test_examples, (5,), guidance, seed=3, batch_size=5)
    assert whole.overall == pytest.approx(split.overall)


def test_evaluate_rejects_empty_test_set(model, tiny_config):
    with pytest.raises(EmptyDatasetError):
        evaluate(model, [], (1,), ModelFactory.create_guidance(tiny_config), seed=0)


def test_infer_clips_k_and_returns_catalog_permutation(caplog, model, data, small_vocab, tiny_config):
    guidance = ModelFactory.create_guidance(tiny_config)
    example = data.test_examples[0]
    with caplog.at_level(logging.WARNING):
        items = infer_next_item(example.prefix, 1, model, guidance, k=small_vocab.num_items + 10,
                                generator=torch.Generator().manual_seed(4))
    assert sorted(items) == list(range(small_vocab.num_items))
    assert "recorta" in caplog.text
    again = infer_next_item(example.prefix, 1, model, guidance, k=small_vocab.num_items + 10,
                            generator=torch.Generator().manual_seed(4))
    assert items == again


def test_infer_rejects_bad_requests(model, data, small_vocab, tiny_config):
    guidance = ModelFactory.create_guidance(tiny_config)
    prefix = data.test_examples[0].prefix
    with pytest.raises(UsageError):
        infer_next_item(prefix, small_vocab.num_behaviors, model, guidance, k=5)
    with pytest.raises(UsageError):
        infer_next_item(prefix, 0, model, guidance, k=0)


def test_config_for_axes(tiny_config):
    assert config_for(tiny_config, "omega", 2).diffusion.omega == 2.0
    assert config_for(tiny_config, "T", 12).diffusion.stride == 4
    assert config_for(tiny_config, "T", 7).diffusion.stride == 1
    with pytest.raises(ConfigurationError):
        config_for(tiny_config, "rho", 1.5)
    with pytest.raises(UsageError):
        config_for(tiny_config, "heads", 4)


def test_sweep_skips_invalid_values(tmp_path, data, tiny_config):
    table = sweep("omega", [-1.0, 0.0, 2.0], tiny_config, data, out_dir=tmp_path)
    assert table.skipped == ["-1.0"]
    assert [row.value for row in table.rows] == [0.0, 2.0]
    assert (tmp_path / "sweep_omega.txt").read_text().startswith("omega\trecall@1")
    assert (tmp_path / "sweep_omega.png").is_file()


def test_axis_values_are_parsed_as_numbers():
    assert parse_axis_values("omega", "0, 1.5,") == [0.0, 1.5]
    assert parse_axis_values("T", "50,200") == [50, 200]
    with pytest.raises(UsageError):
        parse_axis_values("stride", "2.5")
    with pytest.raises(UsageError):
        parse_axis_values("heads", "4")


def test_sweep_table_prints_bare_numbers(tmp_path, data, tiny_config):
    table = sweep("omega", parse_axis_values("omega", "0,1"), tiny_config, data, out_dir=tmp_path)
    text = (tmp_path / "sweep_omega.txt").read_text()
    assert "'" not in text
    assert [line.split("\t")[0] for line in text.splitlines()[1:3]] == ["0.0", "1.0"]
    assert [row.value for row in table.rows] == [0.0, 1.0]
