"""Tests for the adversarial, cycle and identity losses."""

import numpy as np
import pytest
import torch

from usgan.losses import (LossWeights, cycle_loss, identity_loss, l1,
                          lsgan_d_loss, lsgan_g_loss, total_generator_loss)


def _t(rng, shape, scale=1.0):
    return torch.tensor(rng.standard_normal(shape) * scale, dtype=torch.float64)


class TestLsgan:
    def test_perfect_discriminator_scores_zero(self):
        real = torch.ones(2, 1, 6, 6)
        fake = torch.zeros(2, 1, 6, 6)
        assert lsgan_d_loss(real, fake).item() == 0.0

    def test_fully_fooled_discriminator_scores_two(self):
        real = torch.zeros(2, 1, 6, 6)
        fake = torch.ones(2, 1, 6, 6)
        assert lsgan_d_loss(real, fake).item() == pytest.approx(2.0)

    def test_generator_loss_zero_when_fakes_score_one(self):
        assert lsgan_g_loss(torch.ones(3, 1, 4, 4)).item() == 0.0
        assert lsgan_g_loss(torch.zeros(3, 1, 4, 4)).item() == pytest.approx(1.0)

    def test_adversarial_directions_oppose(self):
        # the push G applies to fake scores must be the opposite of D's
        fake = torch.full((1, 1, 4, 4), 0.5, requires_grad=True)
        lsgan_g_loss(fake).backward()
        g_dir = fake.grad.clone()
        fake.grad = None
        lsgan_d_loss(torch.ones(1, 1, 4, 4), fake).backward()
        d_dir = fake.grad
        assert (g_dir < 0).all() and (d_dir > 0).all()

    def test_loop_oracle(self):
        # Oracle: accumulate the squared residuals one score at a time.
        rng = np.random.default_rng(0)
        real = _t(rng, (2, 1, 5, 5))
        fake = _t(rng, (2, 1, 5, 5))
        acc_r = sum((v - 1.0) ** 2 for v in real.flatten().tolist()) / real.numel()
        acc_f = sum(v ** 2 for v in fake.flatten().tolist()) / fake.numel()
        assert lsgan_d_loss(real, fake).item() == pytest.approx(acc_r + acc_f, abs=1e-12)
        acc_g = sum((v - 1.0) ** 2 for v in fake.flatten().tolist()) / fake.numel()
        assert lsgan_g_loss(fake).item() == pytest.approx(acc_g, abs=1e-12)

    def test_mean_reduction_is_batch_invariant(self):
        rng = np.random.default_rng(1)
        fake = _t(rng, (1, 1, 6, 6))
        doubled = torch.cat([fake, fake], dim=0)
        assert lsgan_g_loss(fake).item() == pytest.approx(lsgan_g_loss(doubled).item(),
                                                          abs=1e-14)


class TestL1Family:
    def test_identical_inputs_give_zero(self):
        rng = np.random.default_rng(2)
        a = _t(rng, (1, 1, 8, 8))
        assert l1(a, a.clone()).item() == 0.0
        assert cycle_loss(a, a.clone(), a, a.clone()).item() == 0.0
        assert identity_loss(a, a.clone(), a, a.clone()).item() == 0.0

    def test_constant_offset_property(self):
        rng = np.random.default_rng(3)
        a = _t(rng, (2, 1, 7, 7))
        for c in (0.5, -1.25, 3.0):
            assert l1(a, a + c).item() == pytest.approx(abs(c), abs=1e-12)

    def test_loop_oracle(self):
        rng = np.random.default_rng(4)
        a = _t(rng, (1, 2, 4, 4))
        b = _t(rng, (1, 2, 4, 4))
        acc = sum(abs(u - v) for u, v in zip(a.flatten().tolist(),
                                             b.flatten().tolist())) / a.numel()
        assert l1(a, b).item() == pytest.approx(acc, abs=1e-12)

    def test_cycle_sums_both_directions(self):
        rng = np.random.default_rng(5)
        y, yc, x, xc = (_t(rng, (1, 1, 5, 5)) for _ in range(4))
        assert cycle_loss(y, yc, x, xc).item() == pytest.approx(
            l1(y, yc).item() + l1(x, xc).item(), abs=1e-14)

    def test_shape_mismatch_raises(self):
        with pytest.raises(ValueError, match="matching shapes"):
            l1(torch.zeros(1, 1, 4, 4), torch.zeros(1, 1, 5, 5))
        with pytest.raises(ValueError, match="matching shapes"):
            cycle_loss(torch.zeros(1, 1, 4, 4), torch.zeros(1, 1, 5, 5),
                       torch.zeros(1, 1, 4, 4), torch.zeros(1, 1, 4, 4))

    def test_nonnegative_on_random_inputs(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            a = _t(rng, (1, 1, 6, 6), scale=3.0)
            b = _t(rng, (1, 1, 6, 6), scale=3.0)
            assert l1(a, b).item() >= 0.0
            assert lsgan_d_loss(a, b).item() >= 0.0
            assert lsgan_g_loss(a).item() >= 0.0


class TestTotal:
    def test_zero_parts_zero_total(self):
        zero = torch.tensor(0.0)
        out = total_generator_loss(zero, zero, zero, LossWeights())
        assert out.item() == 0.0

    def test_default_weights(self):
        w = LossWeights()
        assert (w.lambda_cyc, w.lambda_iden) == (10.0, 5.0)
        out = total_generator_loss(torch.tensor(1.0), torch.tensor(1.0),
                                   torch.tensor(1.0), w)
        assert out.item() == pytest.approx(16.0)

    def test_weighted_sum_oracle(self):
        rng = np.random.default_rng(7)
        c, a, i = (abs(float(rng.standard_normal())) for _ in range(3))
        w = LossWeights(lambda_cyc=2.5, lambda_iden=0.75)
        out = total_generator_loss(torch.tensor(c, dtype=torch.float64),
                                   torch.tensor(a, dtype=torch.float64),
                                   torch.tensor(i, dtype=torch.float64), w)
        assert out.item() == pytest.approx(2.5 * c + a + 0.75 * i, abs=1e-12)

    def test_negative_weights_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            LossWeights(lambda_cyc=-1.0)


class TestGradients:
    def test_finite_difference_on_lsgan(self):
        # central differences in float64 against autograd
        rng = np.random.default_rng(8)
        scores = _t(rng, (1, 1, 3, 3)).requires_grad_(True)
        lsgan_g_loss(scores).backward()
        step = 1e-6
        for idx in [(0, 0, 0, 0), (0, 0, 1, 2), (0, 0, 2, 2)]:
            with torch.no_grad():
                plus = scores.clone()
                plus[idx] += step
                minus = scores.clone()
                minus[idx] -= step
                fd = (lsgan_g_loss(plus) - lsgan_g_loss(minus)).item() / (2 * step)
            assert fd == pytest.approx(scores.grad[idx].item(), rel=1e-6, abs=1e-9)

    def test_gradcheck_l1_away_from_zero(self):
        rng = np.random.default_rng(9)
        a = _t(rng, (1, 1, 3, 3)).requires_grad_(True)
        b = (a.detach() + 0.7).requires_grad_(True)
        assert torch.autograd.gradcheck(l1, (a, b))
