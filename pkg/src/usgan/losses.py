"""Least-squares adversarial, cycle and identity losses, all mean-reduced."""

from __future__ import annotations

from dataclasses import dataclass

import torch


@dataclass(frozen=True)
class LossWeights:
    lambda_cyc: float = 10.0
    lambda_iden: float = 5.0

    def __post_init__(self) -> None:
        if self.lambda_cyc < 0 or self.lambda_iden < 0:
            raise ValueError("loss weights must be non-negative")


def _check_same_shape(a: torch.Tensor, b: torch.Tensor, what: str) -> None:
    if a.shape != b.shape:
        raise ValueError(f"{what} expects matching shapes, got {tuple(a.shape)} "
                         f"and {tuple(b.shape)}")


def l1(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Mean absolute difference."""
    _check_same_shape(a, b, "l1")
    return (a - b).abs().mean()


def lsgan_d_loss(real_scores: torch.Tensor, fake_scores: torch.Tensor) -> torch.Tensor:
    """Discriminator target: real score grids toward 1, fake grids toward 0."""
    return ((real_scores - 1.0) ** 2).mean() + (fake_scores ** 2).mean()


def lsgan_g_loss(fake_scores: torch.Tensor) -> torch.Tensor:
    """Generator target: push the discriminator's fake scores toward 1."""
    return ((fake_scores - 1.0) ** 2).mean()


def cycle_loss(y: torch.Tensor, y_cycled: torch.Tensor,
               x: torch.Tensor, x_cycled: torch.Tensor) -> torch.Tensor:
    """Round-trip reconstruction penalty, summed over both directions."""
    _check_same_shape(y, y_cycled, "cycle_loss")
    _check_same_shape(x, x_cycled, "cycle_loss")
    return l1(y, y_cycled) + l1(x, x_cycled)


def identity_loss(y: torch.Tensor, y_same: torch.Tensor,
                  x: torch.Tensor, x_same: torch.Tensor) -> torch.Tensor:
    """Penalty for moving an image already in the target domain."""
    _check_same_shape(y, y_same, "identity_loss")
    _check_same_shape(x, x_same, "identity_loss")
    return l1(y, y_same) + l1(x, x_same)


def total_generator_loss(cycle: torch.Tensor, gen_adv: torch.Tensor,
                         identity: torch.Tensor, weights: LossWeights) -> torch.Tensor:
    """Weighted sum lambda_cyc * cycle + gen_adv + lambda_iden * identity."""
    return weights.lambda_cyc * cycle + gen_adv + weights.lambda_iden * identity
