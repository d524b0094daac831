"""Checkpoint-backed enhancement of images and volumes with alpha control."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .adain import AdaInCode, AlphaField, interpolate_code
from .checkpoint import CheckpointNotFoundError, load_checkpoint
from .imaging import PlaneImage, Volume, extract_plane, stack_planes
from .models import DOWNSAMPLE_FACTOR

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CropRecord:
    """Original extents to crop back to after padded processing."""

    height: int
    width: int


def pad_to_multiple(arr: np.ndarray, multiple: int = DOWNSAMPLE_FACTOR
                    ) -> tuple[np.ndarray, CropRecord]:
    """Reflect-pad bottom and right so both extents divide by multiple."""
    arr = np.asarray(arr)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {arr.shape}")
    h, w = arr.shape
    ph, pw = (-h) % multiple, (-w) % multiple
    if ph or pw:
        arr = np.pad(arr, ((0, ph), (0, pw)), mode="reflect")
    return arr, CropRecord(h, w)


def crop_back(arr: np.ndarray, record: CropRecord) -> np.ndarray:
    return arr[:record.height, :record.width]


@dataclass
class EnhanceRequest:
    """One enhancement call: an image plus exactly one strength control."""

    image: PlaneImage
    alpha: float | None = None
    alpha_field: AlphaField | None = None

    def __post_init__(self) -> None:
        if (self.alpha is None) == (self.alpha_field is None):
            raise ValueError("provide exactly one of alpha or alpha_field")
        if self.alpha is not None and not 0.0 <= float(self.alpha) <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if (self.alpha_field is not None
                and self.alpha_field.shape != self.image.shape):
            raise ValueError(f"alpha field shape {self.alpha_field.shape} does not "
                             f"match image shape {self.image.shape}")


class Enhancer:
    """A loaded generator and its style code, ready for repeated inference.

    Instances hold frozen parameters and a precomputed code, so concurrent
    reads are safe. All enhancement entry points clamp outputs to [0, 1].
    """

    def __init__(self, generator, codegen, checkpoint_id: str = "",
                 path: Path | None = None, step: int = 0, epoch: int = 0):
        self.generator = generator.eval()
        self.codegen = codegen.eval()
        self.checkpoint_id = checkpoint_id
        self.path = path
        self.step = step
        self.epoch = epoch
        with torch.no_grad():
            self._code = codegen().detach()
        self._dtype = next(generator.parameters()).dtype

    @classmethod
    def from_checkpoint(cls, path: str | Path,
                        dtype: torch.dtype = torch.float32) -> "Enhancer":
        bundle = load_checkpoint(path, dtype=dtype)
        return cls(bundle.generator, bundle.codegen,
                   checkpoint_id=bundle.checkpoint_id, path=bundle.path,
                   step=bundle.step, epoch=bundle.epoch)

    @property
    def code(self) -> AdaInCode:
        return self._code

    def enhance_array(self, arr: np.ndarray, alpha: float | None = None,
                      alpha_field: AlphaField | np.ndarray | None = None) -> np.ndarray:
        """Enhance a 2-D [0, 1] array; returns float32 of the same shape."""
        if (alpha is None) == (alpha_field is None):
            raise ValueError("provide exactly one of alpha or alpha_field")
        arr = np.asarray(arr, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D image, got shape {arr.shape}")
        padded, record = pad_to_multiple(arr)
        t = torch.tensor(padded[None, None], dtype=self._dtype)
        with torch.no_grad():
            if alpha is not None:
                code = interpolate_code(self._code, float(alpha))
                out = self.generator(t, code)
            else:
                if not isinstance(alpha_field, AlphaField):
                    alpha_field = AlphaField(np.asarray(alpha_field))
                if alpha_field.shape != arr.shape:
                    raise ValueError(f"alpha field shape {alpha_field.shape} does "
                                     f"not match image shape {arr.shape}")
                field_padded, _ = pad_to_multiple(alpha_field.values)
                out = self.generator(t, self._code, alpha_field=field_padded)
        result = crop_back(out[0, 0].to(torch.float32).numpy(), record)
        return np.clip(result, 0.0, 1.0)

    def enhance_image(self, request: EnhanceRequest) -> PlaneImage:
        out = self.enhance_array(request.image.data, alpha=request.alpha,
                                 alpha_field=request.alpha_field)
        return PlaneImage(out, request.image.plane_kind, request.image.source_index)

    def enhance_volume(self, volume: Volume, alpha: float) -> Volume:
        """Enhance every A-plane at one strength and restack along elevation."""
        planes = []
        for e in range(volume.shape[2]):
            plane = extract_plane(volume, "A", e)
            out = self.enhance_array(plane.data, alpha=alpha)
            planes.append(PlaneImage(out, plane.plane_kind, plane.source_index))
        restacked = stack_planes(planes)
        return Volume(restacked.data, spacing=volume.spacing)


def enhance_image(request: EnhanceRequest, enhancer: Enhancer) -> PlaneImage:
    """Module-level convenience wrapper over Enhancer.enhance_image."""
    return enhancer.enhance_image(request)


def timed_enhance(enhancer: Enhancer, arr: np.ndarray, alpha: float
                  ) -> tuple[np.ndarray, float]:
    """Enhance and report wall seconds; used for latency logging."""
    t0 = time.perf_counter()
    out = enhancer.enhance_array(arr, alpha=alpha)
    seconds = time.perf_counter() - t0
    logger.info("enhanced %dx%d at alpha %.3f in %.3f s",
                arr.shape[0], arr.shape[1], alpha, seconds)
    return out, seconds
