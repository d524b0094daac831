"""Unpaired adversarial training with deterministic seeded sampling.

Domain conventions follow the loss layout: y denotes degraded-domain images,
x denotes sharp-domain images. The generator's K path maps into the degraded
domain (so identity holds for degraded inputs) and the learned-code path maps
into the sharp domain, which is why inference at alpha = 1 enhances.

Each step updates the discriminators on detached fakes first, then updates
the generator and code generator jointly through cycle, identity and
adversarial terms. All randomness flows from two seeded numpy streams (one
per domain), so runs and resumes are reproducible bit for bit on one machine.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .adain import AdaInCode, constant_code
from .checkpoint import TRAIN_STATE_NAME, save_checkpoint
from .evalmetrics import psnr
from .imaging import load_png
from .losses import (LossWeights, cycle_loss, identity_loss, lsgan_d_loss,
                     lsgan_g_loss, total_generator_loss)
from .models import (CodeGenConfig, DiscriminatorConfig, GeneratorConfig,
                     init_codegen, init_discriminator, init_generator)
from .phantom import DatasetManifest

logger = logging.getLogger(__name__)

TRAIN_LOG_NAME = "train.log"

_DTYPES = {"float32": torch.float32, "float64": torch.float64}


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    decay_start_epoch: int = 10
    lr0: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.999
    batch_size: int = 1
    patch_size: int = 256
    weights: LossWeights = field(default_factory=LossWeights)
    seed: int = 0
    checkpoint_every: int = 10
    deterministic: bool = True
    dtype: str = "float32"

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if not 0 <= self.decay_start_epoch <= self.epochs:
            raise ValueError(f"decay_start_epoch must lie in [0, epochs], "
                             f"got {self.decay_start_epoch} with {self.epochs} epochs")
        if self.lr0 <= 0:
            raise ValueError("lr0 must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("Adam betas must lie in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.patch_size < 32 or self.patch_size % 8:
            raise ValueError(f"patch_size must be a multiple of 8 and at least 32, "
                             f"got {self.patch_size}")
        if self.checkpoint_every < 1:
            raise ValueError("checkpoint_every must be at least 1")
        if self.dtype not in _DTYPES:
            raise ValueError(f"dtype must be one of {sorted(_DTYPES)}, got {self.dtype}")


def lr_schedule(epoch: int, cfg: TrainConfig) -> float:
    """Constant lr0 before decay_start_epoch, then linear to zero at the end."""
    if not 0 <= epoch < cfg.epochs:
        raise ValueError(f"epoch {epoch} outside [0, {cfg.epochs})")
    if epoch < cfg.decay_start_epoch:
        return cfg.lr0
    span = cfg.epochs - cfg.decay_start_epoch
    return cfg.lr0 * (cfg.epochs - epoch) / span


class NonFiniteLossError(RuntimeError):
    """A loss term left the finite range; carries where and when."""

    def __init__(self, component: str, value: float, step: int):
        super().__init__(f"non-finite {component} loss ({value}) at step {step}")
        self.component = component
        self.value = value
        self.step = step


def _check_finite(component: str, loss: torch.Tensor, step: int) -> None:
    if not torch.isfinite(loss):
        raise NonFiniteLossError(component, float(loss.detach()), step)


@dataclass
class TrainModels:
    """The four trainable networks plus a cached constant code."""

    generator: nn.Module
    codegen: nn.Module
    disc_y: nn.Module  # scores the degraded domain
    disc_x: nn.Module  # scores the sharp domain
    _k: AdaInCode | None = None

    def k_code(self) -> AdaInCode:
        dtype = next(self.generator.parameters()).dtype
        if self._k is None or self._k.sites[0][0].dtype != dtype:
            self._k = constant_code(self.generator.site_channels, dtype=dtype)
        return self._k


@dataclass
class StepReport:
    step: int
    lr: float
    disc: float
    cycle: float
    identity: float
    gen_adv: float
    total_gen: float


@dataclass
class TrainState:
    opt_g: torch.optim.Optimizer
    opt_d: torch.optim.Optimizer
    rng_y: np.random.Generator
    rng_x: np.random.Generator
    step: int = 0
    epoch: int = 0
    best_psnr: float = -math.inf
    best_epoch: int = -1
    val_history: list = field(default_factory=list)


def discriminator_step(models: TrainModels, opt_d: torch.optim.Optimizer,
                       y: torch.Tensor, x: torch.Tensor, step: int = 0) -> float:
    """Update both discriminators on real batches and detached fakes."""
    with torch.no_grad():
        code = models.codegen()
        x_fake = models.generator(y, code)
        y_fake = models.generator(x, models.k_code())
    loss = (lsgan_d_loss(models.disc_y(y), models.disc_y(y_fake))
            + lsgan_d_loss(models.disc_x(x), models.disc_x(x_fake)))
    _check_finite("discriminator", loss, step)
    opt_d.zero_grad(set_to_none=True)
    loss.backward()
    opt_d.step()
    return float(loss.detach())


def generator_step(models: TrainModels, opt_g: torch.optim.Optimizer,
                   y: torch.Tensor, x: torch.Tensor, weights: LossWeights,
                   step: int = 0) -> dict:
    """Joint generator and code-generator update through all loss terms."""
    code = models.codegen()
    k = models.k_code()

    y_id, x_fake = models.generator.forward_pair(y, code)
    y_fake, x_id = models.generator.forward_pair(x, code)
    y_cyc = models.generator(x_fake, k)
    x_cyc = models.generator(y_fake, code)

    cyc = cycle_loss(y, y_cyc, x, x_cyc)
    iden = identity_loss(y, y_id, x, x_id)
    adv = lsgan_g_loss(models.disc_x(x_fake)) + lsgan_g_loss(models.disc_y(y_fake))
    for name, value in (("cycle", cyc), ("identity", iden), ("gen_adv", adv)):
        _check_finite(name, value, step)
    total = total_generator_loss(cyc, adv, iden, weights)

    opt_g.zero_grad(set_to_none=True)
    total.backward()
    opt_g.step()
    return {"cycle": float(cyc.detach()), "identity": float(iden.detach()),
            "gen_adv": float(adv.detach()), "total_gen": float(total.detach())}


def train_step(models: TrainModels, state: TrainState, batch: tuple,
               cfg: TrainConfig) -> StepReport:
    """One alternating update: discriminators first, then the generator side."""
    y, x = batch
    disc = discriminator_step(models, state.opt_d, y, x, state.step)
    parts = generator_step(models, state.opt_g, y, x, cfg.weights, state.step)
    state.step += 1
    lr = state.opt_g.param_groups[0]["lr"]
    return StepReport(step=state.step, lr=lr, disc=disc, **parts)


def _sample_patch(image: np.ndarray, size: int, rng: np.random.Generator,
                  augment: bool = True) -> np.ndarray:
    h, w = image.shape
    r = int(rng.integers(0, h - size + 1))
    c = int(rng.integers(0, w - size + 1))
    tile = image[r:r + size, c:c + size]
    if augment:
        if rng.integers(0, 2):
            tile = tile[:, ::-1]
        if rng.integers(0, 2):
            tile = tile[::-1, :]
        tile = np.rot90(tile, k=int(rng.integers(0, 4)))
    return np.ascontiguousarray(tile)


def _make_batch(images: list[np.ndarray], size: int, rng: np.random.Generator,
                batch_size: int, dtype: torch.dtype) -> torch.Tensor:
    tiles = []
    for _ in range(batch_size):
        idx = int(rng.integers(0, len(images)))
        tiles.append(_sample_patch(images[idx], size, rng))
    return torch.tensor(np.stack(tiles)[:, None, :, :], dtype=dtype)


def _set_lr(optimizer: torch.optim.Optimizer, lr: float) -> None:
    for group in optimizer.param_groups:
        group["lr"] = lr


def _load_split(data_dir: Path, paths: list[str], patch_size: int,
                split_name: str) -> list[np.ndarray]:
    images = [load_png(data_dir / rel) for rel in paths]
    smallest = min(min(img.shape) for img in images)
    if smallest < patch_size:
        raise ValueError(f"patch_size {patch_size} exceeds the smallest "
                         f"{split_name} image extent {smallest}")
    return images


def _pad_to_8(arr: np.ndarray) -> np.ndarray:
    h, w = arr.shape
    ph, pw = (-h) % 8, (-w) % 8
    if ph or pw:
        arr = np.pad(arr, ((0, ph), (0, pw)), mode="reflect")
    return arr


def _eval_psnr(models: TrainModels, data_dir: Path, pairs: list[dict],
               dtype: torch.dtype) -> float:
    """Mean PSNR of fully enhanced eval images against their sharp twins."""
    scores = []
    with torch.no_grad():
        code = models.codegen()
        for pair in pairs:
            deg = load_png(data_dir / pair["degraded"])
            sharp = load_png(data_dir / pair["sharp"])
            h, w = deg.shape
            t = torch.tensor(_pad_to_8(deg)[None, None], dtype=dtype)
            out = models.generator(t, code)[0, 0, :h, :w]
            out = out.clamp(0.0, 1.0).to(torch.float32).numpy()
            scores.append(psnr(out, sharp))
    finite = [s for s in scores if math.isfinite(s)]
    return float(np.mean(finite)) if finite else math.inf


def _save_train_state(path: Path, models: TrainModels, state: TrainState,
                      next_epoch: int) -> None:
    payload = {
        "next_epoch": next_epoch,
        "step": state.step,
        "best_psnr": state.best_psnr,
        "best_epoch": state.best_epoch,
        "val_history": state.val_history,
        "models": {
            "generator": models.generator.state_dict(),
            "codegen": models.codegen.state_dict(),
            "disc_y": models.disc_y.state_dict(),
            "disc_x": models.disc_x.state_dict(),
        },
        "opt_g": state.opt_g.state_dict(),
        "opt_d": state.opt_d.state_dict(),
        "rng_y": state.rng_y.bit_generator.state,
        "rng_x": state.rng_x.bit_generator.state,
        "torch_rng": torch.get_rng_state(),
    }
    torch.save(payload, path)


def run_training(data_dir: str | Path, cfg: TrainConfig, out_dir: str | Path,
                 gen_config: GeneratorConfig | None = None,
                 disc_config: DiscriminatorConfig | None = None,
                 resume_from: str | Path | None = None) -> Path:
    """Train on a built dataset directory; returns the final checkpoint path.

    Writes periodic checkpoints (epoch_NNN), a best/ checkpoint chosen by the
    paired-eval PSNR proxy at full strength, a final/ checkpoint, and a
    train.log of one JSON line per step. resume_from continues bit-exactly
    from the train_state.pt inside a previous checkpoint directory.
    """
    data_dir = Path(data_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = DatasetManifest.load(data_dir)
    if not manifest.train_degraded or not manifest.train_sharp:
        raise ValueError("dataset has an empty training split")

    dtype = _DTYPES[cfg.dtype]
    if cfg.deterministic:
        torch.use_deterministic_algorithms(True)
    torch.manual_seed(cfg.seed)

    gen_config = gen_config or GeneratorConfig()
    disc_config = disc_config or DiscriminatorConfig()
    models = TrainModels(
        generator=init_generator(gen_config, cfg.seed).to(dtype),
        codegen=init_codegen(
            CodeGenConfig(site_channels=gen_config.site_channels), cfg.seed + 1).to(dtype),
        disc_y=init_discriminator(disc_config, cfg.seed + 2).to(dtype),
        disc_x=init_discriminator(disc_config, cfg.seed + 3).to(dtype),
    )
    opt_g = torch.optim.Adam(
        list(models.generator.parameters()) + list(models.codegen.parameters()),
        lr=cfg.lr0, betas=(cfg.beta1, cfg.beta2))
    opt_d = torch.optim.Adam(
        list(models.disc_y.parameters()) + list(models.disc_x.parameters()),
        lr=cfg.lr0, betas=(cfg.beta1, cfg.beta2))
    state = TrainState(opt_g=opt_g, opt_d=opt_d,
                       rng_y=np.random.default_rng([cfg.seed, 0xD]),
                       rng_x=np.random.default_rng([cfg.seed, 0x5]))

    start_epoch = 0
    if resume_from is not None:
        state_path = Path(resume_from) / TRAIN_STATE_NAME
        if not state_path.is_file():
            raise FileNotFoundError(f"no {TRAIN_STATE_NAME} in {resume_from}")
        saved = torch.load(state_path, weights_only=False)
        for name in ("generator", "codegen", "disc_y", "disc_x"):
            getattr(models, name).load_state_dict(saved["models"][name])
        opt_g.load_state_dict(saved["opt_g"])
        opt_d.load_state_dict(saved["opt_d"])
        state.rng_y.bit_generator.state = saved["rng_y"]
        state.rng_x.bit_generator.state = saved["rng_x"]
        torch.set_rng_state(saved["torch_rng"])
        state.step = saved["step"]
        state.best_psnr = saved["best_psnr"]
        state.best_epoch = saved["best_epoch"]
        state.val_history = saved["val_history"]
        start_epoch = saved["next_epoch"]
        logger.info("resumed from %s at epoch %d (step %d)",
                    resume_from, start_epoch, state.step)

    degraded = _load_split(data_dir, manifest.train_degraded, cfg.patch_size, "degraded")
    sharp = _load_split(data_dir, manifest.train_sharp, cfg.patch_size, "sharp")
    steps_per_epoch = math.ceil(len(degraded) / cfg.batch_size)

    def _checkpoint(directory: Path, epoch: int, extra: dict,
                    with_state: bool = True) -> None:
        save_checkpoint(directory, generator=models.generator, codegen=models.codegen,
                        disc_y=models.disc_y, disc_x=models.disc_x,
                        step=state.step, epoch=epoch, seed=cfg.seed, extra=extra)
        if with_state:
            _save_train_state(directory / TRAIN_STATE_NAME, models, state, epoch + 1)

    log_path = out_dir / TRAIN_LOG_NAME
    with log_path.open("a") as log:
        for epoch in range(start_epoch, cfg.epochs):
            state.epoch = epoch
            lr = lr_schedule(epoch, cfg)
            _set_lr(opt_g, lr)
            _set_lr(opt_d, lr)
            t0 = time.monotonic()
            totals = []
            for _ in range(steps_per_epoch):
                y = _make_batch(degraded, cfg.patch_size, state.rng_y,
                                cfg.batch_size, dtype)
                x = _make_batch(sharp, cfg.patch_size, state.rng_x,
                                cfg.batch_size, dtype)
                report = train_step(models, state, (y, x), cfg)
                totals.append(report.total_gen)
                log.write(json.dumps({
                    "step": report.step, "epoch": epoch, "lr": lr,
                    "disc": report.disc, "cycle": report.cycle,
                    "identity": report.identity, "gen_adv": report.gen_adv,
                    "total_gen": report.total_gen,
                    "wall_s": round(time.monotonic() - t0, 3),
                }) + "\n")
            log.flush()

            val = None
            if manifest.eval_pairs:
                val = _eval_psnr(models, data_dir, manifest.eval_pairs, dtype)
                state.val_history.append({"epoch": epoch, "psnr_db": val})
                if val > state.best_psnr:
                    state.best_psnr = val
                    state.best_epoch = epoch
                    _checkpoint(out_dir / "best", epoch,
                                {"best_epoch": epoch, "val_psnr": val},
                                with_state=False)
            logger.info("epoch %d: mean total_gen %.4f, lr %.2e, val_psnr %s, %.1fs",
                        epoch, float(np.mean(totals)), lr,
                        f"{val:.2f}" if val is not None else "n/a",
                        time.monotonic() - t0)

            if (epoch + 1) % cfg.checkpoint_every == 0 and epoch + 1 < cfg.epochs:
                _checkpoint(out_dir / f"epoch_{epoch:03d}", epoch, {})

    final_extra = {"best_epoch": state.best_epoch, "best_psnr": state.best_psnr,
                   "val_history": state.val_history}
    _checkpoint(out_dir / "final", cfg.epochs - 1, final_extra)
    return out_dir / "final"
