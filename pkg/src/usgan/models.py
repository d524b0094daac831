"""Network definitions: switchable generator, patch discriminator, code generator.

One generator serves both translation directions. Its behaviour is switched
by an AdaIN code: the constant code K reduces every styled site to plain
instance normalization (the degraded-to-sharp direction), a learned code from
the code generator selects the reverse direction, and interpolated or
per-pixel codes give continuous in-between outputs.

Every forward first runs the plain-normalized content cascade and records the
per-site instance statistics; a styled (or spatially blended) cascade then
normalizes its features with those recorded statistics instead of its own.
Style strength therefore acts strictly through the local scale-and-shift at
each site: a constant alpha field matches the scalar-alpha path bit for bit,
and painting a region cannot influence pixels beyond the convolutional
receptive field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .adain import (DEFAULT_EPS, NUM_SITES, AdaInCode, AlphaField, _spread,
                    instance_stats, is_constant_code)


@dataclass(frozen=True)
class GeneratorConfig:
    base_channels: int = 64
    in_channels: int = 1
    out_channels: int = 1
    eps: float = DEFAULT_EPS

    def __post_init__(self) -> None:
        if self.base_channels < 1:
            raise ValueError("base_channels must be positive")

    @property
    def site_channels(self) -> tuple[int, ...]:
        b = self.base_channels
        return (b, 2 * b, 4 * b, 4 * b, 4 * b, 4 * b, 2 * b, b, b)


@dataclass(frozen=True)
class DiscriminatorConfig:
    base_channels: int = 64
    in_channels: int = 1


@dataclass(frozen=True)
class CodeGenConfig:
    site_channels: tuple[int, ...]
    input_dim: int = 128
    hidden_dim: int = 128
    n_layers: int = 4

    def __post_init__(self) -> None:
        object.__setattr__(self, "site_channels", tuple(int(c) for c in self.site_channels))
        if len(self.site_channels) != NUM_SITES:
            raise ValueError(f"need {NUM_SITES} site widths, got {len(self.site_channels)}")
        if self.n_layers < 1:
            raise ValueError("n_layers must be positive")


DOWNSAMPLE_FACTOR = 8  # three stride-2 stages


def _up2(x: torch.Tensor) -> torch.Tensor:
    return F.interpolate(x, scale_factor=2, mode="bilinear", align_corners=False)


class Generator(nn.Module):
    """Residual U-Net with nine switchable normalization sites.

    Input and output are [N, in_channels, H, W] with H and W multiples of 8.
    The learned mapping is a residual on top of the input, and the final
    convolution starts at zero, so a freshly initialized generator is the
    identity for every code.
    """

    def __init__(self, config: GeneratorConfig):
        super().__init__()
        self.config = config
        b = config.base_channels
        self.stem = nn.Conv2d(config.in_channels, b, 3, padding=1)
        self.enc = nn.ModuleList([
            nn.Conv2d(b, b, 3, stride=2, padding=1),
            nn.Conv2d(b, 2 * b, 3, stride=2, padding=1),
            nn.Conv2d(2 * b, 4 * b, 3, stride=2, padding=1),
        ])
        self.res_a = nn.ModuleList([nn.Conv2d(4 * b, 4 * b, 3, padding=1) for _ in range(3)])
        self.res_b = nn.ModuleList([nn.Conv2d(4 * b, 4 * b, 3, padding=1) for _ in range(3)])
        self.dec = nn.ModuleList([
            nn.Conv2d(4 * b + 2 * b, 2 * b, 3, padding=1),
            nn.Conv2d(2 * b + b, b, 3, padding=1),
            nn.Conv2d(b + b, b, 3, padding=1),
        ])
        self.final = nn.Conv2d(b, config.out_channels, 3, padding=1)

    @property
    def site_channels(self) -> tuple[int, ...]:
        return self.config.site_channels

    def _validate(self, y: torch.Tensor, code: AdaInCode) -> None:
        if y.ndim != 4 or y.shape[1] != self.config.in_channels:
            raise ValueError(f"expected input [N, {self.config.in_channels}, H, W], "
                             f"got shape {tuple(y.shape)}")
        h, w = y.shape[-2:]
        if h % DOWNSAMPLE_FACTOR or w % DOWNSAMPLE_FACTOR:
            raise ValueError(f"spatial extents must be multiples of {DOWNSAMPLE_FACTOR}, "
                             f"got {(h, w)}; pad first (see inference.pad_to_multiple)")
        if code.channels != self.site_channels:
            raise ValueError(f"code channels {code.channels} do not match generator "
                             f"sites {self.site_channels}")

    def _field_tensor(self, alpha_field, y: torch.Tensor) -> torch.Tensor:
        values = alpha_field.values if isinstance(alpha_field, AlphaField) else alpha_field
        if isinstance(values, torch.Tensor):
            t = values.to(y.dtype)
        else:
            t = torch.as_tensor(np.asarray(values), dtype=y.dtype)
        if t.ndim != 2 or tuple(t.shape) != tuple(y.shape[-2:]):
            raise ValueError(f"alpha field shape {tuple(t.shape)} does not match "
                             f"image shape {tuple(y.shape[-2:])}")
        return t.unsqueeze(0).unsqueeze(0)

    def _norm(self, x: torch.Tensor, key: str, stats: dict) -> torch.Tensor:
        if key not in stats:
            stats[key] = instance_stats(x)
        mu, sigma = stats[key]
        return (x - mu) / (sigma + self.config.eps)

    def _site(self, x: torch.Tensor, i: int, code: AdaInCode | None,
              field: torch.Tensor | None, stats: dict) -> torch.Tensor:
        zn = self._norm(x, f"site{i}", stats)
        if code is None:
            return zn
        mu, sigma = code.sites[i]
        if field is None:
            return _spread(sigma, x) * zn + _spread(mu, x)
        a = F.interpolate(field, size=x.shape[-2:], mode="area")
        scale = (1 - a) + a * _spread(sigma, x)
        shift = a * _spread(mu, x)
        return scale * zn + shift

    def _cascade(self, y: torch.Tensor, code: AdaInCode | None,
                 field: torch.Tensor | None, stats: dict) -> torch.Tensor:
        f0 = F.relu(self._norm(self.stem(y), "stem", stats))
        e0 = F.relu(self._site(self.enc[0](f0), 0, code, field, stats))
        e1 = F.relu(self._site(self.enc[1](e0), 1, code, field, stats))
        r = F.relu(self._site(self.enc[2](e1), 2, code, field, stats))
        for j in range(3):
            h = F.relu(self._site(self.res_a[j](r), 3 + j, code, field, stats))
            h = self._norm(self.res_b[j](h), f"res{j}b", stats)
            r = r + h
        d = F.relu(self._site(self.dec[0](torch.cat([_up2(r), e1], dim=1)),
                              6, code, field, stats))
        d = F.relu(self._site(self.dec[1](torch.cat([_up2(d), e0], dim=1)),
                              7, code, field, stats))
        d = F.relu(self._site(self.dec[2](torch.cat([_up2(d), f0], dim=1)),
                              8, code, field, stats))
        return y + self.final(d)

    def forward(self, y: torch.Tensor, code: AdaInCode,
                alpha_field: AlphaField | np.ndarray | torch.Tensor | None = None
                ) -> torch.Tensor:
        self._validate(y, code)
        field = None if alpha_field is None else self._field_tensor(alpha_field, y)
        stats: dict = {}
        content = self._cascade(y, None, None, stats)
        if field is None and is_constant_code(code):
            return content
        return self._cascade(y, code, field, stats)

    def forward_pair(self, y: torch.Tensor, code: AdaInCode
                     ) -> tuple[torch.Tensor, torch.Tensor]:
        """One content pass and one styled pass sharing statistics.

        Returns (K output, code output); cheaper than two forward calls when
        a training step needs both directions of the same input.
        """
        self._validate(y, code)
        stats: dict = {}
        content = self._cascade(y, None, None, stats)
        styled = self._cascade(y, code, None, stats)
        return content, styled


class Discriminator(nn.Module):
    """70x70 patch discriminator: five 4x4 convs, no normalization layers.

    Maps [N, 1, H, W] with H, W >= 32 to an [N, 1, H', W'] grid of per-patch
    scores (H' = H/8 - 2 for inputs sized in multiples of 16; 256 -> 30).
    """

    def __init__(self, config: DiscriminatorConfig):
        super().__init__()
        self.config = config
        c = config.base_channels
        self.convs = nn.ModuleList([
            nn.Conv2d(config.in_channels, c, 4, stride=2, padding=1),
            nn.Conv2d(c, 2 * c, 4, stride=2, padding=1),
            nn.Conv2d(2 * c, 4 * c, 4, stride=2, padding=1),
            nn.Conv2d(4 * c, 8 * c, 4, stride=1, padding=1),
            nn.Conv2d(8 * c, 1, 4, stride=1, padding=1),
        ])

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.ndim != 4 or x.shape[1] != self.config.in_channels:
            raise ValueError(f"expected input [N, {self.config.in_channels}, H, W], "
                             f"got shape {tuple(x.shape)}")
        if min(x.shape[-2:]) < 32:
            raise ValueError(f"discriminator input must be at least 32x32, "
                             f"got {tuple(x.shape[-2:])}")
        for conv in self.convs[:-1]:
            x = F.leaky_relu(conv(x), 0.2)
        return self.convs[-1](x)


class CodeGenerator(nn.Module):
    """Maps a fixed all-ones vector through a small MLP to an AdaIN code.

    The trunk is n_layers fully connected layers of hidden_dim width with
    ReLU between them; per-site linear heads emit the mean vector and a
    variance vector that is rectified and square-rooted, so every c_sigma is
    non-negative. With freshly initialized heads the code starts near K.
    """

    def __init__(self, config: CodeGenConfig):
        super().__init__()
        self.config = config
        dims = [config.input_dim] + [config.hidden_dim] * config.n_layers
        self.trunk = nn.ModuleList([nn.Linear(dims[i], dims[i + 1])
                                    for i in range(config.n_layers)])
        self.mean_heads = nn.ModuleList([nn.Linear(config.hidden_dim, c)
                                         for c in config.site_channels])
        self.var_heads = nn.ModuleList([nn.Linear(config.hidden_dim, c)
                                        for c in config.site_channels])
        self.register_buffer("ones_input", torch.ones(1, config.input_dim))

    def forward(self) -> AdaInCode:
        h = self.ones_input
        for i, fc in enumerate(self.trunk):
            h = fc(h)
            if i + 1 < len(self.trunk):
                h = F.relu(h)
        sites = []
        for mean_head, var_head in zip(self.mean_heads, self.var_heads):
            mu = mean_head(h)[0]
            v = F.relu(var_head(h)[0])
            # guarded sqrt: zero where v is zero, no NaN gradient at the boundary
            sigma = torch.where(v > 0, torch.sqrt(torch.clamp(v, min=1e-24)),
                                torch.zeros_like(v))
            sites.append((mu, sigma))
        return AdaInCode(sites)


HEAD_INIT_STD = 0.01


def _seeded_generator(seed: int) -> torch.Generator:
    gen = torch.Generator()
    gen.manual_seed(seed)
    return gen


def _he_init(module: nn.Module, gen: torch.Generator) -> None:
    for m in module.modules():
        if isinstance(m, (nn.Conv2d, nn.Linear)):
            fan_in = m.weight[0].numel()
            m.weight.normal_(0.0, math.sqrt(2.0 / fan_in), generator=gen)
            if m.bias is not None:
                m.bias.zero_()


def init_generator(config: GeneratorConfig, seed: int) -> Generator:
    """Build and seed a generator; the final conv starts at zero (identity map)."""
    model = Generator(config)
    with torch.no_grad():
        _he_init(model, _seeded_generator(seed))
        model.final.weight.zero_()
        model.final.bias.zero_()
    return model


def init_discriminator(config: DiscriminatorConfig, seed: int) -> Discriminator:
    model = Discriminator(config)
    with torch.no_grad():
        _he_init(model, _seeded_generator(seed))
    return model


def init_codegen(config: CodeGenConfig, seed: int) -> CodeGenerator:
    """Build and seed a code generator whose initial code sits near K."""
    model = CodeGenerator(config)
    with torch.no_grad():
        gen = _seeded_generator(seed)
        _he_init(model, gen)
        for head in list(model.mean_heads) + list(model.var_heads):
            head.weight.normal_(0.0, HEAD_INIT_STD, generator=gen)
            head.bias.zero_()
        for head in model.var_heads:
            head.bias.fill_(1.0)
    return model


def grad_input_support(fn, input_shape: tuple[int, ...], output_pixel: tuple[int, int],
                       seed: int = 0, dtype: torch.dtype = torch.float32) -> np.ndarray:
    """Input pixels with nonzero gradient from one output pixel, as a 2-D mask.

    fn maps a [N, C, H, W] tensor to a [N, C', H', W'] tensor; the mask
    collapses batch and channel axes.
    """
    rng = np.random.default_rng(seed)
    x = torch.tensor(rng.standard_normal(input_shape), dtype=dtype, requires_grad=True)
    out = fn(x)
    out[..., output_pixel[0], output_pixel[1]].sum().backward()
    return (x.grad.abs().sum(dim=(0, 1)) > 0).numpy()


def perturb_output_support(fn, base_input: torch.Tensor, input_pixel: tuple[int, int],
                           delta: float = 1.0, threshold_rel: float = 0.0) -> np.ndarray:
    """Output pixels that move when one input pixel moves, as a 2-D mask.

    threshold_rel discards responses below that fraction of the peak
    response, which separates true receptive-field support from the
    vanishingly small global component introduced by shared statistics.
    """
    with torch.no_grad():
        out0 = fn(base_input)
        bumped = base_input.clone()
        bumped[..., input_pixel[0], input_pixel[1]] += delta
        out1 = fn(bumped)
    diff = (out1 - out0).abs().amax(dim=(0, 1))
    cutoff = threshold_rel * diff.max().item()
    return (diff > cutoff).numpy()


def support_radius(mask: np.ndarray, center: tuple[int, int]) -> int:
    """Chebyshev radius of a support mask around a center pixel."""
    rows, cols = np.nonzero(mask)
    if rows.size == 0:
        return 0
    return int(max(np.abs(rows - center[0]).max(), np.abs(cols - center[1]).max()))


def measure_generator_radius(generator: Generator, code: AdaInCode, size: int = 256,
                             seed: int = 0) -> int:
    """Influence radius of one alpha-field pixel, measured on random input.

    Painting a single field pixel leaves the content pass untouched, so the
    output difference is exactly zero outside the convolutional cone and the
    measured support needs no thresholding. Several probe offsets cover the
    worst-case alignment of the field's area downsampling, so the returned
    radius bounds the reach of any painted region edge.
    """
    rng = np.random.default_rng(seed)
    p = next(generator.parameters())
    x = torch.tensor(rng.random((1, generator.config.in_channels, size, size)),
                     dtype=p.dtype)
    c = size // 2
    with torch.no_grad():
        base = generator(x, code, alpha_field=np.zeros((size, size), dtype=np.float32))
        radius = 0
        for dr, dc in ((0, 0), (3, 5), (7, 7)):
            field = np.zeros((size, size), dtype=np.float32)
            field[c + dr, c + dc] = 1.0
            out = generator(x, code, alpha_field=field)
            mask = ((out - base).abs().amax(dim=(0, 1)) > 0).numpy()
            radius = max(radius, support_radius(mask, (c + dr, c + dc)))
    return radius
