"""Checkpoint directories: manifest.json with a parameter index plus params.bin.

A checkpoint is a directory holding manifest.json (model configs, counters,
seed and a name -> {shape, dtype, offset, byte_length, checksum} index) and
params.bin (the raw little-endian float32 parameter values concatenated in
index order). Training additionally drops a train_state.pt next to them for
bit-exact resume; inference never reads it.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .models import (CodeGenConfig, CodeGenerator, Discriminator,
                     DiscriminatorConfig, Generator, GeneratorConfig)

MANIFEST_NAME = "manifest.json"
PARAMS_NAME = "params.bin"
TRAIN_STATE_NAME = "train_state.pt"
FORMAT_NAME = "usgan-checkpoint"
FORMAT_VERSION = 1


class CheckpointError(RuntimeError):
    pass


class CheckpointNotFoundError(CheckpointError):
    pass


def _iter_params(modules: dict[str, torch.nn.Module]):
    for prefix, module in modules.items():
        if module is None:
            continue
        for name, param in module.named_parameters():
            yield f"{prefix}.{name}", param


def save_checkpoint(directory: str | Path, *, generator: Generator,
                    codegen: CodeGenerator, disc_y: Discriminator | None = None,
                    disc_x: Discriminator | None = None, step: int = 0,
                    epoch: int = 0, seed: int = 0, extra: dict | None = None) -> Path:
    """Write a checkpoint directory; returns its path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    modules = {"generator": generator, "codegen": codegen,
               "disc_y": disc_y, "disc_x": disc_x}
    index: dict[str, dict] = {}
    blobs: list[bytes] = []
    offset = 0
    for name, param in _iter_params(modules):
        raw = np.ascontiguousarray(
            param.detach().cpu().numpy().astype("<f4", copy=False)).tobytes()
        index[name] = {
            "shape": list(param.shape),
            "dtype": "float32",
            "offset": offset,
            "byte_length": len(raw),
            "checksum": hashlib.sha256(raw).hexdigest(),
        }
        offset += len(raw)
        blobs.append(raw)
    (directory / PARAMS_NAME).write_bytes(b"".join(blobs))

    config = {
        "generator": dataclasses.asdict(generator.config),
        "codegen": dataclasses.asdict(codegen.config),
    }
    if disc_y is not None:
        config["discriminator"] = dataclasses.asdict(disc_y.config)
    manifest = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "step": int(step),
        "epoch": int(epoch),
        "seed": int(seed),
        "has_discriminators": disc_y is not None and disc_x is not None,
        "config": config,
        "extra": extra or {},
        "params": index,
    }
    (directory / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return directory


def _read_manifest(directory: Path) -> dict:
    path = directory / MANIFEST_NAME
    if not path.is_file():
        raise CheckpointNotFoundError(f"no checkpoint manifest at {path}")
    manifest = json.loads(path.read_text())
    if manifest.get("format") != FORMAT_NAME:
        raise CheckpointError(f"unrecognized checkpoint format in {path}")
    return manifest


def verify_checkpoint(directory: str | Path) -> None:
    """Recompute every parameter checksum; raise CheckpointError on mismatch."""
    directory = Path(directory)
    manifest = _read_manifest(directory)
    blob = (directory / PARAMS_NAME).read_bytes()
    bad = []
    for name, entry in manifest["params"].items():
        lo, hi = entry["offset"], entry["offset"] + entry["byte_length"]
        if hi > len(blob):
            bad.append(f"{name}: extends past end of {PARAMS_NAME}")
            continue
        digest = hashlib.sha256(blob[lo:hi]).hexdigest()
        if digest != entry["checksum"]:
            bad.append(f"{name}: checksum mismatch")
    if bad:
        raise CheckpointError(f"corrupt checkpoint {directory}: " + "; ".join(bad))


@dataclass
class CheckpointBundle:
    """Models and metadata restored from a checkpoint directory."""

    generator: Generator
    codegen: CodeGenerator
    disc_y: Discriminator | None
    disc_x: Discriminator | None
    step: int
    epoch: int
    seed: int
    extra: dict
    checkpoint_id: str
    path: Path


def _load_into(module: torch.nn.Module, prefix: str, manifest: dict, blob: bytes) -> None:
    index = manifest["params"]
    with torch.no_grad():
        for name, param in module.named_parameters():
            key = f"{prefix}.{name}"
            entry = index.get(key)
            if entry is None:
                raise CheckpointError(f"checkpoint is missing parameter {key}")
            if list(param.shape) != entry["shape"]:
                raise CheckpointError(f"parameter {key} has shape {entry['shape']} "
                                      f"in checkpoint, expected {list(param.shape)}")
            lo, hi = entry["offset"], entry["offset"] + entry["byte_length"]
            arr = np.frombuffer(blob[lo:hi], dtype="<f4").reshape(entry["shape"])
            param.copy_(torch.from_numpy(arr.copy()).to(param.dtype))


def load_checkpoint(directory: str | Path, dtype: torch.dtype = torch.float32,
                    with_discriminators: bool = False, verify: bool = True
                    ) -> CheckpointBundle:
    """Rebuild models from a checkpoint directory.

    Parameters are stored as float32; dtype casts them after loading.
    Discriminators are restored only on request and only if the checkpoint
    carries them.
    """
    directory = Path(directory)
    manifest = _read_manifest(directory)
    if verify:
        verify_checkpoint(directory)
    blob = (directory / PARAMS_NAME).read_bytes()

    gen_config = GeneratorConfig(**manifest["config"]["generator"])
    raw_cg = dict(manifest["config"]["codegen"])
    raw_cg["site_channels"] = tuple(raw_cg["site_channels"])
    cg_config = CodeGenConfig(**raw_cg)

    generator = Generator(gen_config)
    codegen = CodeGenerator(cg_config)
    _load_into(generator, "generator", manifest, blob)
    _load_into(codegen, "codegen", manifest, blob)
    generator.to(dtype)
    codegen.to(dtype)
    generator.eval()
    codegen.eval()

    disc_y = disc_x = None
    if with_discriminators:
        if not manifest.get("has_discriminators"):
            raise CheckpointError(f"checkpoint {directory} carries no discriminators")
        d_config = DiscriminatorConfig(**manifest["config"]["discriminator"])
        disc_y = Discriminator(d_config)
        disc_x = Discriminator(d_config)
        _load_into(disc_y, "disc_y", manifest, blob)
        _load_into(disc_x, "disc_x", manifest, blob)
        disc_y.to(dtype)
        disc_x.to(dtype)

    checkpoint_id = hashlib.sha256(blob).hexdigest()[:12]
    return CheckpointBundle(
        generator=generator, codegen=codegen, disc_y=disc_y, disc_x=disc_x,
        step=int(manifest["step"]), epoch=int(manifest["epoch"]),
        seed=int(manifest["seed"]), extra=dict(manifest.get("extra", {})),
        checkpoint_id=checkpoint_id, path=directory,
    )
