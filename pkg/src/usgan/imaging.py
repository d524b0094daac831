"""Volume and image containers, plane extraction, patch sampling, PNG I/O."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from PIL import Image

AXIS_NAMES = ("axial", "lateral", "elevation")


class PlaneKind(str, Enum):
    """Orthogonal plane orientations of a 3-D sweep."""

    A = "A"  # axial x lateral, sliced along elevation
    B = "B"  # axial x elevation, sliced along lateral
    C = "C"  # elevation x lateral, sliced along axial

    @property
    def slice_axis(self) -> int:
        return {PlaneKind.A: 2, PlaneKind.B: 1, PlaneKind.C: 0}[self]


def _check_unit_range(data: np.ndarray, what: str) -> None:
    if data.size and (float(data.min()) < 0.0 or float(data.max()) > 1.0):
        raise ValueError(f"{what} values must lie in [0, 1], got range "
                         f"[{float(data.min()):.6g}, {float(data.max()):.6g}]")


@dataclass
class Volume:
    """A 3-D scalar grid with (axial, lateral, elevation) axes and values in [0, 1]."""

    data: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    axis_names: tuple[str, str, str] = AXIS_NAMES

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.ndim != 3:
            raise ValueError(f"volume data must be 3-D, got shape {self.data.shape}")
        if min(self.data.shape) < 8:
            raise ValueError(f"volume extents must be at least 8 voxels, got {self.data.shape}")
        _check_unit_range(self.data, "volume")

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape


@dataclass
class PlaneImage:
    """A 2-D image extracted from (or destined for) a volume."""

    data: np.ndarray
    plane_kind: PlaneKind = PlaneKind.A
    source_index: int = 0

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.ndim != 2:
            raise ValueError(f"plane image must be 2-D, got shape {self.data.shape}")
        _check_unit_range(self.data, "image")
        self.plane_kind = PlaneKind(self.plane_kind)

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


@dataclass
class Patch:
    """A square training tile together with its origin in the source image."""

    data: np.ndarray
    origin: tuple[int, int]

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.ndim != 2 or self.data.shape[0] != self.data.shape[1]:
            raise ValueError(f"patch must be square, got shape {self.data.shape}")


def extract_plane(volume: Volume, kind: PlaneKind | str, index: int) -> PlaneImage:
    """Slice one orthogonal plane out of a volume.

    A-planes are (axial, lateral) at a fixed elevation, B-planes are
    (axial, elevation) at a fixed lateral position, and C-planes are
    (elevation, lateral) at a fixed axial depth.
    """
    kind = PlaneKind(kind)
    axis = kind.slice_axis
    extent = volume.data.shape[axis]
    if not 0 <= index < extent:
        raise IndexError(
            f"plane {kind.value} index {index} out of range for "
            f"{volume.axis_names[axis]} axis of extent {extent}")
    if kind is PlaneKind.A:
        data = volume.data[:, :, index]
    elif kind is PlaneKind.B:
        data = volume.data[:, index, :]
    else:
        data = volume.data[index, :, :].T
    return PlaneImage(np.ascontiguousarray(data), kind, index)


def stack_planes(planes: list[PlaneImage]) -> Volume:
    """Rebuild a volume from a full ordered run of A-planes along elevation."""
    if not planes:
        raise ValueError("cannot stack an empty list of planes")
    shapes = {p.data.shape for p in planes}
    if len(shapes) != 1:
        raise ValueError(f"all planes must share one shape, got {sorted(shapes)}")
    data = np.stack([p.data for p in planes], axis=2)
    return Volume(data)


def extract_patches(image: PlaneImage, size: int, count: int, seed: int,
                    augment: bool = False) -> list[Patch]:
    """Sample random square patches from an image, optionally flip/rot90 augmented.

    Sampling is a pure function of (image, size, count, seed, augment): the
    same arguments always give the same patches. Origins are drawn uniformly
    over all valid top-left positions; augmentation draws a horizontal flip
    bit, a vertical flip bit, then a rotation count in 0..3, in that order
    per patch.
    """
    if size < 1:
        raise ValueError(f"patch size must be positive, got {size}")
    h, w = image.data.shape
    if h < size or w < size:
        raise ValueError(f"patch size {size} exceeds image shape {(h, w)}")
    rng = np.random.default_rng(seed)
    patches = []
    for _ in range(count):
        r = int(rng.integers(0, h - size + 1))
        c = int(rng.integers(0, w - size + 1))
        tile = image.data[r:r + size, c:c + size]
        if augment:
            if rng.integers(0, 2):
                tile = tile[:, ::-1]
            if rng.integers(0, 2):
                tile = tile[::-1, :]
            tile = np.rot90(tile, k=int(rng.integers(0, 4)))
        patches.append(Patch(np.ascontiguousarray(tile), (r, c)))
    return patches


def normalize(data: np.ndarray, in_min: float, in_max: float) -> np.ndarray:
    """Affinely map [in_min, in_max] to [0, 1], clipping anything outside."""
    if not in_max > in_min:
        raise ValueError(f"in_max ({in_max}) must exceed in_min ({in_min})")
    out = (np.asarray(data, dtype=np.float32) - np.float32(in_min)) / np.float32(in_max - in_min)
    return np.clip(out, 0.0, 1.0)


def to_uint8(data: np.ndarray) -> np.ndarray:
    """Quantize [0, 1] floats to 8 bits by round(value * 255)."""
    return np.rint(np.clip(np.asarray(data, dtype=np.float32), 0.0, 1.0) * 255.0).astype(np.uint8)


def from_uint8(data: np.ndarray) -> np.ndarray:
    """Dequantize 8-bit grayscale to [0, 1] floats by value / 255."""
    return np.asarray(data, dtype=np.float32) / np.float32(255.0)


def save_png(path: str | Path, data: np.ndarray) -> None:
    """Write a [0, 1] float image as 8-bit grayscale PNG."""
    if data.ndim != 2:
        raise ValueError(f"PNG export expects a 2-D image, got shape {data.shape}")
    Image.fromarray(to_uint8(data), mode="L").save(Path(path), format="PNG")


def load_png(path: str | Path) -> np.ndarray:
    """Read an 8-bit grayscale PNG back into a [0, 1] float32 array."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image: {path}")
    with Image.open(path) as img:
        arr = np.asarray(img.convert("L"))
    return from_uint8(arr)


def png_bytes(data: np.ndarray) -> bytes:
    """Encode a [0, 1] float image as PNG bytes (same quantization as save_png)."""
    import io

    buf = io.BytesIO()
    Image.fromarray(to_uint8(data), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def load_png_bytes(blob: bytes) -> np.ndarray:
    """Decode PNG bytes into a [0, 1] float32 grayscale array."""
    import io

    with Image.open(io.BytesIO(blob)) as img:
        arr = np.asarray(img.convert("L"))
    return from_uint8(arr)


VOLUME_META_NAME = "volume.json"
SLICE_NAME_FORMAT = "slice_{:04d}.png"


def save_volume(directory: str | Path, volume: Volume) -> None:
    """Write a volume as a directory of A-plane PNGs ordered along elevation.

    The directory gets slice_0000.png .. slice_NNNN.png plus a volume.json
    sidecar recording axis names, extents and spacing.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    a, l, e = volume.data.shape
    for k in range(e):
        save_png(directory / SLICE_NAME_FORMAT.format(k), volume.data[:, :, k])
    meta = {
        "axes": list(volume.axis_names),
        "shape": [a, l, e],
        "spacing": list(volume.spacing),
    }
    (directory / VOLUME_META_NAME).write_text(json.dumps(meta, indent=2) + "\n")


def load_volume(directory: str | Path) -> Volume:
    """Read a volume written by save_volume."""
    directory = Path(directory)
    meta_path = directory / VOLUME_META_NAME
    if not meta_path.is_file():
        raise FileNotFoundError(f"no {VOLUME_META_NAME} in {directory}")
    meta = json.loads(meta_path.read_text())
    a, l, e = (int(v) for v in meta["shape"])
    slices = []
    for k in range(e):
        arr = load_png(directory / SLICE_NAME_FORMAT.format(k))
        if arr.shape != (a, l):
            raise ValueError(f"slice {k} has shape {arr.shape}, expected {(a, l)}")
        slices.append(arr)
    data = np.stack(slices, axis=2)
    return Volume(data, spacing=tuple(float(s) for s in meta["spacing"]))
