import math

import pytest
import torch

from denoisers import (
    AdaLNDenoiser,
    BehaviorMoE,
    MCGLNBlock,
    MCGLNDenoiser,
    MLPDenoiser,
    ablation_denoisers,
    gate,
    sinusoidal_features,
)
from utils import ConfigurationError

D = 8


def _randomize(module, seed=0, std=0.5):
    generator = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for param in module.parameters():
            param.copy_(torch.randn(param.shape, generator=generator) * std)


def test_raw_timestep_features():
    features = sinusoidal_features(torch.tensor([0, 7]), D)
    assert features.shape == (2, D)
    assert features[0].tolist() == [0.0, 1.0] * (D // 2)
    assert torch.equal(sinusoidal_features(torch.tensor([7]), D)[0], features[1])


def test_gate_softmax_properties():
    weight = torch.zeros(3, D)
    assert torch.allclose(gate(torch.randn(4, D), weight), torch.full((4, 3), 1 / 3))
    x = torch.zeros(1, 2, dtype=torch.float64)
    x[0, 0] = 1.0
    weight = torch.tensor([[math.log(2), 0.0], [0.0, 0.0]], dtype=torch.float64)
    assert torch.allclose(gate(x, weight), torch.tensor([[2 / 3, 1 / 3]], dtype=torch.float64), atol=1e-9)
    random_weights = gate(torch.randn(5, D, dtype=torch.float64), torch.randn(4, D, dtype=torch.float64), num_shared=2)
    assert torch.allclose(random_weights.sum(-1), torch.ones(5, dtype=torch.float64), atol=1e-9)


def test_null_behavior_with_single_shared_expert_is_that_expert():
    moe = BehaviorMoE(D, 16, num_behaviors=3, m_s=1, m_p=2)
    x = torch.randn(4, D)
    out = moe(x, torch.full((4,), 3))
    assert torch.allclose(out, moe.shared_experts[0](x))


def test_hard_routing_isolation():
    moe = BehaviorMoE(D, 16, num_behaviors=3, m_s=1, m_p=1)
    x = torch.randn(6, D)
    behavior = torch.tensor([0, 0, 3, 3, 0, 3])
    before = moe(x, behavior)
    _randomize(moe.private_experts[1], seed=1)
    _randomize(moe.private_experts[2], seed=2)
    assert torch.equal(moe(x, behavior), before)

    _randomize(moe.private_experts[0], seed=3)
    after = moe(x, behavior)
    null_rows = behavior == 3
    assert torch.equal(after[null_rows], before[null_rows])
    assert not torch.allclose(after[~null_rows], before[~null_rows])


def test_private_gradients_vanish_for_foreign_behaviors():
    moe = BehaviorMoE(D, 16, num_behaviors=2, m_s=1, m_p=1)
    moe(torch.randn(3, D), torch.tensor([0, 0, 2])).sum().backward()
    assert all(p.grad is None or torch.all(p.grad == 0) for p in moe.private_experts[1].parameters())


def test_block_is_identity_at_initialization():
    block = MCGLNBlock(D, 3)
    x = torch.randn(4, D)
    out = block(x, torch.randn(4, D), torch.randn(4, D), torch.tensor([0, 1, 2, 3]))
    assert torch.equal(out, x)


def test_block_depends_on_agnostic_condition_once_gated():
    block = MCGLNBlock(D, 3)
    _randomize(block)
    x, condition = torch.randn(2, D), torch.randn(2, D)
    behavior = torch.tensor([1, 3])
    assert not torch.allclose(block(x, torch.zeros(2, D), condition, behavior),
                              block(x, torch.ones(2, D), condition, behavior))


def test_denoiser_zero_at_initialization_and_modulation_shapes():
    denoiser = MCGLNDenoiser(D, 3, depth=2)
    z = torch.randn(5, D)
    t = torch.tensor([1, 2, 3, 4, 5])
    behavior = torch.tensor([0, 1, 2, 3, 3])
    assert torch.equal(denoiser(z, t, torch.randn(5, D), behavior), torch.zeros(5, D))
    modulation = denoiser.modulation(t, behavior)
    assert len(modulation) == 6 and all(m.shape == (5, D) for m in modulation)
    assert all(torch.all(m == 0) for m in modulation)


def test_modulation_reads_the_behavior_row():
    denoiser = MCGLNDenoiser(D, 3, depth=1)
    _randomize(denoiser.blocks[0].modulation)
    t = torch.tensor([4])
    before = denoiser.modulation(t, torch.tensor([1]))[0]
    with torch.no_grad():
        denoiser.behavior_cond_table.weight[1] += 1.0
    assert not torch.allclose(denoiser.modulation(t, torch.tensor([1]))[0], before)
    null_before = denoiser.modulation(t, torch.tensor([3]))[0]
    with torch.no_grad():
        denoiser.behavior_cond_table.weight[:3] += 1.0
    assert torch.equal(denoiser.modulation(t, torch.tensor([3]))[0], null_before)


@pytest.mark.parametrize("kind", ["mlp", "adaln"])
def test_ablation_variants_share_the_signature(kind):
    denoiser = ablation_denoisers(kind, D, 3)
    out = denoiser(torch.randn(4, D), torch.tensor([1, 2, 3, 4]), torch.randn(4, D), torch.tensor([0, 1, 2, 3]))
    assert out.shape == (4, D)
    assert isinstance(denoiser, MLPDenoiser if kind == "mlp" else AdaLNDenoiser)


def test_adaln_is_parameter_comparable_to_shared_only_mcgln():
    def count(module):
        return sum(p.numel() for p in module.parameters())
    adaln = AdaLNDenoiser(16, 4, depth=2)
    mcgln = MCGLNDenoiser(16, 4, depth=2, m_s=1, m_p=0)
    assert abs(count(adaln) - count(mcgln)) / count(mcgln) <= 0.05


def test_unknown_ablation_kind():
    with pytest.raises(ConfigurationError):
        ablation_denoisers("transformer", D, 3)
