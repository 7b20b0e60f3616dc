import pytest
import torch

from diffusion import (
    GuidanceConfig,
    cfg_combine,
    ddim_step,
    ddpm_sample,
    ddpm_step,
    forward_sample,
    make_schedule,
    sample,
    strided_timesteps,
)
from utils import ConfigurationError, UsageError


def test_schedule_endpoints_and_monotonicity():
    schedule = make_schedule(200, 1e-4, 0.02)
    assert schedule.alpha_bar[0] == 1.0
    assert schedule.beta[1] == pytest.approx(1e-4)
    assert schedule.beta[200] == pytest.approx(0.02)
    assert bool((schedule.alpha_bar[1:] < schedule.alpha_bar[:-1]).all())
    assert schedule.sigma[1] == 0.0


@pytest.mark.parametrize("args", [(0, 1e-4, 0.02), (10, 0.0, 0.02), (10, 0.03, 0.02), (10, 1e-4, 1.0)])
def test_invalid_schedules(args):
    with pytest.raises(ConfigurationError):
        make_schedule(*args)


def test_forward_sample_deterministic_part_and_range():
    schedule = make_schedule(200)
    z_0 = torch.randn(4, 8, dtype=torch.float64)
    z_t = forward_sample(z_0, 50, torch.zeros_like(z_0), schedule)
    assert torch.equal(z_t, schedule.alpha_bar[50].sqrt() * z_0)
    with pytest.raises(UsageError):
        forward_sample(z_0, 0, torch.zeros_like(z_0), schedule)
    with pytest.raises(UsageError):
        forward_sample(z_0, torch.tensor([1, 201, 3, 4]), torch.zeros_like(z_0), schedule)


def test_ddpm_step_without_noise_rescales_by_alpha():
    schedule = make_schedule(10, 1e-4, 0.02)
    z_t = torch.randn(3, 4, dtype=torch.float64)
    out = ddpm_step(z_t, 5, torch.zeros_like(z_t), schedule, torch.zeros_like(z_t))
    assert torch.allclose(out, z_t / schedule.alpha[5].sqrt())


def test_oracle_ddim_recovers_clean_latent_from_every_strided_step():
    schedule = make_schedule(200)
    generator = torch.Generator().manual_seed(0)
    z_0 = torch.randn(5, 8, generator=generator, dtype=torch.float64)
    epsilon = torch.randn(5, 8, generator=generator, dtype=torch.float64)
    grid = strided_timesteps(200, 20)
    for start_index, start in enumerate(grid[:-1]):
        z = forward_sample(z_0, start, epsilon, schedule)
        for t, t_prev in zip(grid[start_index:-1], grid[start_index + 1:]):
            z = ddim_step(z, t, t_prev, epsilon, schedule)
        assert torch.allclose(z, z_0, atol=1e-6)


def test_ddim_step_rejects_bad_pairs():
    schedule = make_schedule(20)
    z = torch.zeros(1, 2)
    with pytest.raises(UsageError):
        ddim_step(z, 5, 5, z, schedule)
    with pytest.raises(UsageError):
        ddim_step(z, 21, 0, z, schedule)


def test_cfg_identities():
    cond, uncond = torch.randn(2, 3), torch.randn(2, 3)
    assert cfg_combine(cond, uncond, 0.0) is cond
    assert torch.allclose(cfg_combine(cond, cond, 3.0), cond, atol=1e-6)
    assert torch.allclose(cfg_combine(cond, uncond, 1.0), 2 * cond - uncond)


def test_strided_timesteps():
    assert strided_timesteps(100, 50) == [100, 50, 0]
    assert strided_timesteps(3, 1) == [3, 2, 1, 0]
    with pytest.raises(ConfigurationError):
        strided_timesteps(100, 30)


def _recording_denoiser(calls):
    def denoise(z_t, t, z_agn, behavior):
        calls.append(behavior.clone())
        return 0.1 * z_t + 0.01 * z_agn + 0.001 * behavior.unsqueeze(-1).to(z_t.dtype)
    return denoise


def test_sample_with_zero_omega_skips_unconditional_branch():
    schedule = make_schedule(20)
    z_agn = torch.randn(3, 4)
    z_T = torch.randn(3, 4)
    behavior = torch.tensor([0, 1, 2])
    calls = []
    guided = sample(z_T, z_agn, behavior, _recording_denoiser(calls), schedule,
                    GuidanceConfig(omega=0.0, stride=5), null_behavior=3)
    assert len(calls) == 4 and all(torch.equal(c, behavior) for c in calls)

    z = z_T
    for t, t_prev in zip([20, 15, 10, 5], [15, 10, 5, 0]):
        z = ddim_step(z, t, t_prev, 0.1 * z + 0.01 * z_agn + 0.001 * behavior.unsqueeze(-1).float(), schedule)
    assert torch.equal(guided, z)


def test_sample_is_deterministic_given_generator():
    schedule = make_schedule(20)
    denoise = _recording_denoiser([])
    z_agn = torch.randn(2, 4)
    behavior = torch.tensor([1, 0])
    guidance = GuidanceConfig(omega=2.0, stride=10)
    first = sample(None, z_agn, behavior, denoise, schedule, guidance, 3, torch.Generator().manual_seed(5))
    second = sample(None, z_agn, behavior, denoise, schedule, guidance, 3, torch.Generator().manual_seed(5))
    assert torch.equal(first, second)


def test_unconditional_branch_uses_null_behavior():
    calls = []
    sample(torch.zeros(2, 4), torch.zeros(2, 4), torch.tensor([0, 1]), _recording_denoiser(calls),
           make_schedule(10), GuidanceConfig(omega=1.0, stride=10), null_behavior=7)
    assert torch.equal(calls[1], torch.tensor([7, 7]))


def test_ddpm_reference_sampler_runs_every_step():
    calls = []
    out = ddpm_sample(torch.randn(2, 4), torch.zeros(2, 4), torch.tensor([0, 1]), _recording_denoiser(calls),
                      make_schedule(6), omega=1.0, null_behavior=2, generator=torch.Generator().manual_seed(0))
    assert len(calls) == 12
    assert torch.isfinite(out).all()
