"""Adaptive instance normalization: codes, interpolation and spatial blending.

A style code is a per-site list of (c_mu, c_sigma) channel vectors. The
transform recenters features by their instance statistics and rescales by the
code. The constant code K = (0, 1) degenerates to plain instance
normalization; interpolating a code toward K with a scalar alpha, or with a
per-pixel alpha field, gives continuous control over style strength.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn.functional as F

DEFAULT_EPS = 1e-5
NUM_SITES = 9


@dataclass
class AdaInCode:
    """Per-site (c_mu, c_sigma) channel vectors for every normalization site."""

    sites: list[tuple[torch.Tensor, torch.Tensor]]

    def __post_init__(self) -> None:
        if len(self.sites) != NUM_SITES:
            raise ValueError(f"a code carries {NUM_SITES} sites, got {len(self.sites)}")
        for i, (mu, sigma) in enumerate(self.sites):
            if mu.ndim != 1 or sigma.ndim != 1 or mu.shape != sigma.shape:
                raise ValueError(f"site {i} vectors must be 1-D and same length, "
                                 f"got {tuple(mu.shape)} and {tuple(sigma.shape)}")

    @property
    def channels(self) -> tuple[int, ...]:
        return tuple(mu.shape[0] for mu, _ in self.sites)

    def detach(self) -> "AdaInCode":
        return AdaInCode([(m.detach(), s.detach()) for m, s in self.sites])

    def to(self, dtype: torch.dtype) -> "AdaInCode":
        return AdaInCode([(m.to(dtype), s.to(dtype)) for m, s in self.sites])


def constant_code(site_channels: tuple[int, ...] | list[int],
                  dtype: torch.dtype = torch.float32) -> AdaInCode:
    """The code K = (0, 1) at every site, equivalent to plain instance norm."""
    return AdaInCode([(torch.zeros(c, dtype=dtype), torch.ones(c, dtype=dtype))
                      for c in site_channels])


def is_constant_code(code: AdaInCode) -> bool:
    return all(not mu.any() and bool((sigma == 1).all()) for mu, sigma in code.sites)


def instance_stats(z: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """Per-channel spatial mean and population standard deviation.

    Accepts [C, H, W] or [N, C, H, W]; the returned tensors broadcast back
    over z with singleton spatial dims.
    """
    if z.ndim not in (3, 4):
        raise ValueError(f"feature maps must be [C,H,W] or [N,C,H,W], got shape {tuple(z.shape)}")
    mu = z.mean(dim=(-2, -1), keepdim=True)
    var = z.var(dim=(-2, -1), keepdim=True, unbiased=False)
    return mu, torch.sqrt(var)


def _spread(vec: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
    """Reshape a per-channel vector to broadcast over z."""
    if vec.shape[0] != z.shape[-3]:
        raise ValueError(f"code has {vec.shape[0]} channels but features have "
                         f"{z.shape[-3]}")
    shape = (1,) * (z.ndim - 3) + (-1, 1, 1)
    return vec.reshape(shape)


def adain_transform(z: torch.Tensor, code_site: tuple[torch.Tensor, torch.Tensor],
                    eps: float = DEFAULT_EPS,
                    stats: tuple[torch.Tensor, torch.Tensor] | None = None) -> torch.Tensor:
    """Recenter z by instance statistics, rescale and shift by the code.

    out = c_sigma * (z - mu) / (sigma + eps) + c_mu, with mu and sigma taken
    per channel over the spatial axes (or passed in via stats to normalize
    against another pass's statistics).
    """
    c_mu, c_sigma = code_site
    mu, sigma = instance_stats(z) if stats is None else stats
    zn = (z - mu) / (sigma + eps)
    return _spread(c_sigma, z) * zn + _spread(c_mu, z)


def interpolate_code(code: AdaInCode, alpha: float) -> AdaInCode:
    """Blend a code toward K: (1 - alpha) * K + alpha * code, per site.

    alpha = 0 returns exactly K and alpha = 1 returns the code unchanged;
    both endpoints hold bitwise.
    """
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    sites = []
    for mu, sigma in code.sites:
        # tensor arithmetic in the code's dtype, matching the per-pixel blend
        # bit for bit when a constant field carries the same alpha
        a = torch.tensor(alpha, dtype=sigma.dtype)
        sites.append((a * mu, (1 - a) + a * sigma))
    return AdaInCode(sites)


@dataclass
class AlphaField:
    """A per-pixel style strength map over the full-resolution image grid."""

    values: np.ndarray
    region_table: list | None = None

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float32)
        if self.values.ndim != 2:
            raise ValueError(f"alpha field must be 2-D, got shape {self.values.shape}")
        lo, hi = float(self.values.min()), float(self.values.max())
        if self.values.size and (lo < 0.0 or hi > 1.0):
            raise ValueError(f"alpha values must lie in [0, 1], got range [{lo:.6g}, {hi:.6g}]")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def rasterize_alpha(regions: list[tuple[np.ndarray, float]], default_alpha: float,
                    extent: tuple[int, int]) -> AlphaField:
    """Paint per-region alphas over a default background, later regions on top."""
    if not 0.0 <= default_alpha <= 1.0:
        raise ValueError(f"default alpha must lie in [0, 1], got {default_alpha}")
    field = np.full(extent, default_alpha, dtype=np.float32)
    table = []
    for k, (mask, alpha) in enumerate(regions):
        mask = np.asarray(mask)
        if mask.shape != tuple(extent):
            raise ValueError(f"region {k} mask shape {mask.shape} does not match "
                             f"extent {tuple(extent)}")
        if not 0.0 <= float(alpha) <= 1.0:
            raise ValueError(f"region {k} alpha must lie in [0, 1], got {alpha}")
        field[mask.astype(bool)] = alpha
        table.append({"alpha": float(alpha), "pixels": int(mask.astype(bool).sum())})
    return AlphaField(field, region_table=table)


def downsample_field(field: AlphaField | np.ndarray, size: tuple[int, int],
                     dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """Area-average an alpha field down to a feature map's spatial size."""
    values = field.values if isinstance(field, AlphaField) else np.asarray(field)
    t = torch.as_tensor(values, dtype=dtype).unsqueeze(0).unsqueeze(0)
    if tuple(t.shape[-2:]) != tuple(size):
        t = F.interpolate(t, size=tuple(size), mode="area")
    return t


def spatial_adain(z: torch.Tensor, code_site: tuple[torch.Tensor, torch.Tensor],
                  alpha_field: AlphaField | np.ndarray | torch.Tensor,
                  eps: float = DEFAULT_EPS,
                  stats: tuple[torch.Tensor, torch.Tensor] | None = None) -> torch.Tensor:
    """Blend plain normalization and the styled transform per pixel.

    The field is area-downsampled to the feature resolution; where it is 0
    the output equals the K path, where it is 1 it equals adain_transform.
    """
    c_mu, c_sigma = code_site
    mu, sigma = instance_stats(z) if stats is None else stats
    zn = (z - mu) / (sigma + eps)
    if isinstance(alpha_field, torch.Tensor):
        a = alpha_field.to(z.dtype)
        if a.ndim == 2:
            a = a.unsqueeze(0).unsqueeze(0)
        if tuple(a.shape[-2:]) != tuple(z.shape[-2:]):
            a = F.interpolate(a, size=tuple(z.shape[-2:]), mode="area")
    else:
        a = downsample_field(alpha_field, tuple(z.shape[-2:]), dtype=z.dtype)
    if z.ndim == 3:
        a = a.squeeze(0)
    # blend expressed as an effective per-pixel scale and shift so that a
    # constant field reproduces the scalar-interpolated code bit for bit
    scale = (1 - a) + a * _spread(c_sigma, z)
    shift = a * _spread(c_mu, z)
    return scale * zn + shift


ALPHA_FIELD_META_SUFFIX = ".json"


def save_alpha_field(path, field: AlphaField) -> None:
    """Write an alpha field as 8-bit PNG (value * 255) plus a JSON region table."""
    import json
    from pathlib import Path

    from .imaging import save_png

    path = Path(path)
    save_png(path, field.values)
    meta = {"regions": field.region_table if field.region_table is not None else []}
    path.with_suffix(path.suffix + ALPHA_FIELD_META_SUFFIX).write_text(
        json.dumps(meta, indent=2) + "\n")


def load_alpha_field(path) -> AlphaField:
    """Read an alpha field written by save_alpha_field."""
    import json
    from pathlib import Path

    from .imaging import load_png

    path = Path(path)
    values = load_png(path)
    meta_path = path.with_suffix(path.suffix + ALPHA_FIELD_META_SUFFIX)
    table = None
    if meta_path.is_file():
        table = json.loads(meta_path.read_text()).get("regions")
    return AlphaField(values, region_table=table)
