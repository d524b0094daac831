"""Synthetic speckle phantoms, a controllable degradation model and dataset builds.

Sharp volumes are ellipsoid inclusions (dark interior, bright boundary shell)
laid over multiplicative smoothed-noise speckle. Degradation mimics a low
quality sweep: anisotropic lateral/elevation blur, elevation decimation with
linear refill, additive sidelobe haze around bright scatterers, and gamma
contrast flattening. Every stage is driven by explicit seeds so builds are
reproducible bit for bit.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter, gaussian_filter1d

from .imaging import PlaneKind, Volume, extract_plane, save_png


@dataclass(frozen=True)
class DegradationSpec:
    """Strengths of each degradation stage; zeros (and gamma 1) disable a stage."""

    blur_sigma_lateral: float = 0.8
    blur_sigma_elevation: float = 1.6
    elevation_decimation: int = 2
    sidelobe_strength: float = 0.12
    contrast_gamma: float = 0.8

    def __post_init__(self) -> None:
        if self.blur_sigma_lateral < 0 or self.blur_sigma_elevation < 0:
            raise ValueError("blur sigmas must be non-negative")
        if self.blur_sigma_elevation < self.blur_sigma_lateral:
            raise ValueError("elevation blur must be at least as strong as lateral blur")
        if int(self.elevation_decimation) != self.elevation_decimation or self.elevation_decimation < 1:
            raise ValueError(f"elevation_decimation must be an integer >= 1, "
                             f"got {self.elevation_decimation}")
        if self.sidelobe_strength < 0:
            raise ValueError("sidelobe_strength must be non-negative")
        if self.contrast_gamma <= 0:
            raise ValueError("contrast_gamma must be positive")

    @classmethod
    def identity(cls) -> "DegradationSpec":
        return cls(blur_sigma_lateral=0.0, blur_sigma_elevation=0.0,
                   elevation_decimation=1, sidelobe_strength=0.0, contrast_gamma=1.0)


@dataclass(frozen=True)
class PhantomSpec:
    """Recipe for one synthetic volume."""

    seed: int = 0
    extent: tuple[int, int, int] = (64, 64, 64)
    n_structures: int = 3
    speckle_strength: float = 0.12
    degradation: DegradationSpec = field(default_factory=DegradationSpec)

    def __post_init__(self) -> None:
        if len(self.extent) != 3 or min(self.extent) < 8:
            raise ValueError(f"extent must be three sizes of at least 8, got {self.extent}")
        if self.n_structures < 0:
            raise ValueError("n_structures must be non-negative")
        if self.speckle_strength < 0:
            raise ValueError("speckle_strength must be non-negative")


BACKGROUND_LEVEL = 0.35
INTERIOR_LEVEL = 0.06
SHELL_LEVEL = 0.92
SHELL_WIDTH_VOXELS = 1.5


def _speckle_texture(rng: np.random.Generator, extent: tuple[int, int, int],
                     strength: float) -> np.ndarray:
    if strength == 0:
        return np.ones(extent, dtype=np.float32)
    noise = rng.standard_normal(extent)
    smooth = gaussian_filter(noise, sigma=1.0, mode="reflect")
    smooth /= smooth.std() + 1e-12
    return (1.0 + strength * smooth).astype(np.float32)


def _sample_ellipsoids(rng: np.random.Generator, extent: tuple[int, int, int],
                       count: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Draw non-overlapping (center, radii) pairs, in voxel units."""
    ext = np.asarray(extent, dtype=np.float64)
    placed: list[tuple[np.ndarray, np.ndarray]] = []
    for _ in range(count):
        for _ in range(200):
            radii = rng.uniform(0.10, 0.20, size=3) * ext.min()
            lo, hi = radii + 2.0, ext - radii - 2.0
            if np.any(hi <= lo):
                radii = np.minimum(radii, ext / 4.0)
                lo, hi = radii + 2.0, ext - radii - 2.0
            center = rng.uniform(lo, hi)
            ok = all(np.linalg.norm(center - c) > 1.15 * (radii.max() + r.max())
                     for c, r in placed)
            if ok:
                break
        placed.append((center, radii))
    return placed


def generate_sharp(spec: PhantomSpec) -> Volume:
    """Synthesize a sharp phantom volume from the spec's seed.

    Structures are ellipsoids with near-anechoic interiors and bright closed
    boundary shells a few voxels thick, over multiplicative speckle texture.
    """
    rng = np.random.default_rng(spec.seed)
    tex = _speckle_texture(rng, spec.extent, spec.speckle_strength)
    vol = BACKGROUND_LEVEL * tex

    if spec.n_structures:
        grids = np.meshgrid(*(np.arange(n, dtype=np.float64) for n in spec.extent),
                            indexing="ij")
        for center, radii in _sample_ellipsoids(rng, spec.extent, spec.n_structures):
            d2 = sum(((g - c) / r) ** 2 for g, c, r in zip(grids, center, radii))
            d = np.sqrt(d2)
            # distance to the d == 1 surface, roughly in voxels
            surf = (d - 1.0) * radii.mean()
            shell = np.exp(-(surf / SHELL_WIDTH_VOXELS) ** 2).astype(np.float32)
            vol = np.where(d < 1.0, INTERIOR_LEVEL * tex, vol)
            vol = vol * (1.0 - shell) + SHELL_LEVEL * shell

    return Volume(np.clip(vol, 0.0, 1.0).astype(np.float32))


def _linear_refill(x: np.ndarray, keep: int) -> np.ndarray:
    """Drop elevation samples not on the keep grid, refill by linear interpolation."""
    n = x.shape[2]
    kept = np.arange(0, n, keep)
    pos = np.arange(n, dtype=np.float64)
    hi_idx = np.searchsorted(kept, pos, side="right")
    lo_idx = np.clip(hi_idx - 1, 0, len(kept) - 1)
    hi_idx = np.clip(hi_idx, 0, len(kept) - 1)
    span = np.maximum(kept[hi_idx] - kept[lo_idx], 1)
    w = ((pos - kept[lo_idx]) / span).astype(x.dtype)
    sampled = x[:, :, kept]
    return sampled[:, :, lo_idx] * (1 - w) + sampled[:, :, hi_idx] * w


def degrade(volume: Volume, degradation: DegradationSpec, seed: int) -> Volume:
    """Apply the degradation cascade to a sharp volume.

    Stage order: anisotropic blur (none axially), elevation decimation with
    linear refill, additive sidelobe haze, gamma contrast flattening, clamp.
    Stages at zero strength are skipped outright, so the all-identity spec
    returns the input values unchanged.
    """
    x = volume.data
    d = degradation

    if d.blur_sigma_lateral > 0 or d.blur_sigma_elevation > 0:
        x = gaussian_filter(x, sigma=(0.0, d.blur_sigma_lateral, d.blur_sigma_elevation),
                            mode="reflect")

    if d.elevation_decimation > 1:
        x = _linear_refill(x, int(d.elevation_decimation))

    if d.sidelobe_strength > 0:
        rng = np.random.default_rng(seed)
        bright = np.clip(x - 0.5, 0.0, None)
        haze = gaussian_filter1d(bright, sigma=6.0, axis=1, mode="reflect")
        jitter = rng.standard_normal((x.shape[0], x.shape[2]))
        jitter = gaussian_filter(jitter, sigma=4.0, mode="reflect")
        jitter /= np.abs(jitter).max() + 1e-12
        gain = (1.0 + 0.5 * jitter)[:, None, :].astype(x.dtype)
        x = x + d.sidelobe_strength * haze * gain

    if d.contrast_gamma != 1.0:
        x = np.clip(x, 0.0, 1.0) ** d.contrast_gamma

    return Volume(np.clip(x, 0.0, 1.0).astype(np.float32), spacing=volume.spacing)


_SLICE_KINDS = (PlaneKind.A, PlaneKind.B, PlaneKind.C)

# seed offsets keeping the three source populations and degradation draws apart
_SHARP_SOURCE_OFFSET = 100_000
_EVAL_SOURCE_OFFSET = 200_000
_DEGRADE_OFFSET = 500_000

MANIFEST_NAME = "manifest.json"


@dataclass
class DatasetManifest:
    """Index of a built dataset: file lists, source seeds and the build recipe."""

    spec_template: PhantomSpec
    train_degraded: list[str]
    train_sharp: list[str]
    eval_pairs: list[dict]
    degraded_seeds: list[int]
    sharp_seeds: list[int]
    eval_seeds: list[int]
    eval_trainable: bool = False
    version: int = 1

    def save(self, directory: str | Path) -> Path:
        payload = {
            "version": self.version,
            "spec_template": _spec_to_dict(self.spec_template),
            "splits": {
                "train_degraded": self.train_degraded,
                "train_sharp": self.train_sharp,
                "eval_pairs": self.eval_pairs,
            },
            "sources": {
                "degraded_seeds": self.degraded_seeds,
                "sharp_seeds": self.sharp_seeds,
                "eval_seeds": self.eval_seeds,
            },
            "eval_trainable": self.eval_trainable,
        }
        path = Path(directory) / MANIFEST_NAME
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def load(cls, directory: str | Path) -> "DatasetManifest":
        path = Path(directory)
        if path.is_dir():
            path = path / MANIFEST_NAME
        if not path.is_file():
            raise FileNotFoundError(f"no dataset manifest at {path}")
        raw = json.loads(path.read_text())
        return cls(
            spec_template=_spec_from_dict(raw["spec_template"]),
            train_degraded=list(raw["splits"]["train_degraded"]),
            train_sharp=list(raw["splits"]["train_sharp"]),
            eval_pairs=list(raw["splits"]["eval_pairs"]),
            degraded_seeds=list(raw["sources"]["degraded_seeds"]),
            sharp_seeds=list(raw["sources"]["sharp_seeds"]),
            eval_seeds=list(raw["sources"]["eval_seeds"]),
            eval_trainable=bool(raw.get("eval_trainable", False)),
            version=int(raw.get("version", 1)),
        )


def _spec_to_dict(spec: PhantomSpec) -> dict:
    out = dataclasses.asdict(spec)
    out["extent"] = list(spec.extent)
    return out


def _spec_from_dict(raw: dict) -> PhantomSpec:
    deg = DegradationSpec(**raw["degradation"])
    fields = {k: v for k, v in raw.items() if k != "degradation"}
    fields["extent"] = tuple(int(v) for v in fields["extent"])
    return PhantomSpec(degradation=deg, **fields)


def _slice_indices(extent: int, count: int) -> list[int]:
    """Evenly spaced slice positions inside the middle band of an axis."""
    lo, hi = 0.25 * (extent - 1), 0.75 * (extent - 1)
    return [int(round(v)) for v in np.linspace(lo, hi, count)]


def _slice_plan(extent: tuple[int, int, int], slices_per_volume: int) -> list[tuple[PlaneKind, int]]:
    per_kind = [slices_per_volume // 3] * 3
    for k in range(slices_per_volume % 3):
        per_kind[k] += 1
    plan: list[tuple[PlaneKind, int]] = []
    for kind, count in zip(_SLICE_KINDS, per_kind):
        axis_extent = extent[kind.slice_axis]
        plan.extend((kind, idx) for idx in _slice_indices(axis_extent, count))
    return plan


def _write_slices(volume: Volume, out_dir: Path, stem: str,
                  plan: list[tuple[PlaneKind, int]]) -> list[str]:
    names = []
    for kind, idx in plan:
        plane = extract_plane(volume, kind, idx)
        name = f"{stem}_{kind.value}{idx:03d}.png"
        save_png(out_dir / name, plane.data)
        names.append(name)
    return names


def build_dataset(out_dir: str | Path, n_train: int, n_eval: int,
                  spec_template: PhantomSpec, slices_per_volume: int = 10) -> DatasetManifest:
    """Build an unpaired training corpus plus a paired held-out eval split.

    n_train counts source volumes per domain: n_train degraded sources and
    n_train sharp sources are synthesized from disjoint seed ranges, so no
    training image has a counterpart in the other domain. Each source volume
    contributes slices_per_volume plane slices cycling through A, B and C
    orientations. The eval split holds n_eval (degraded, sharp) central
    A-plane pairs from a third seed range; it is for metrics only and is
    flagged non-trainable in the manifest.
    """
    if n_train < 1 or n_eval < 0:
        raise ValueError(f"need n_train >= 1 and n_eval >= 0, got {n_train}, {n_eval}")
    if slices_per_volume < 1:
        raise ValueError("slices_per_volume must be positive")
    if n_train >= _SHARP_SOURCE_OFFSET or n_eval >= _SHARP_SOURCE_OFFSET:
        raise ValueError("dataset too large for the seed layout")

    out_dir = Path(out_dir)
    deg_dir = out_dir / "train" / "degraded"
    sharp_dir = out_dir / "train" / "sharp"
    eval_dir = out_dir / "eval"
    for d in (deg_dir, sharp_dir, eval_dir):
        d.mkdir(parents=True, exist_ok=True)

    base = spec_template.seed
    plan = _slice_plan(spec_template.extent, slices_per_volume)

    degraded_seeds = [base + i for i in range(n_train)]
    sharp_seeds = [base + _SHARP_SOURCE_OFFSET + i for i in range(n_train)]
    eval_seeds = [base + _EVAL_SOURCE_OFFSET + i for i in range(n_eval)]

    train_degraded: list[str] = []
    for s in degraded_seeds:
        sharp = generate_sharp(dataclasses.replace(spec_template, seed=s))
        deg = degrade(sharp, spec_template.degradation, seed=s + _DEGRADE_OFFSET)
        names = _write_slices(deg, deg_dir, f"vol{s:06d}", plan)
        train_degraded.extend(f"train/degraded/{n}" for n in names)

    train_sharp: list[str] = []
    for s in sharp_seeds:
        sharp = generate_sharp(dataclasses.replace(spec_template, seed=s))
        names = _write_slices(sharp, sharp_dir, f"vol{s:06d}", plan)
        train_sharp.extend(f"train/sharp/{n}" for n in names)

    eval_pairs: list[dict] = []
    for k, s in enumerate(eval_seeds):
        sharp = generate_sharp(dataclasses.replace(spec_template, seed=s))
        deg = degrade(sharp, spec_template.degradation, seed=s + _DEGRADE_OFFSET)
        mid = spec_template.extent[2] // 2
        deg_name = f"pair{k:03d}_degraded.png"
        sharp_name = f"pair{k:03d}_sharp.png"
        save_png(eval_dir / deg_name, extract_plane(deg, PlaneKind.A, mid).data)
        save_png(eval_dir / sharp_name, extract_plane(sharp, PlaneKind.A, mid).data)
        eval_pairs.append({"degraded": f"eval/{deg_name}", "sharp": f"eval/{sharp_name}"})

    manifest = DatasetManifest(
        spec_template=spec_template,
        train_degraded=train_degraded,
        train_sharp=train_sharp,
        eval_pairs=eval_pairs,
        degraded_seeds=degraded_seeds,
        sharp_seeds=sharp_seeds,
        eval_seeds=eval_seeds,
    )
    manifest.save(out_dir)
    return manifest
