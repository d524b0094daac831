"""HTTP API for enhancement, volume browsing and checkpoint control.

The app is stateless per request except for two explicit mutations: volume
registration and checkpoint hot swap. Enhancement handlers grab the current
enhancer reference once, so an in-flight request keeps working on the
parameter set it started with even if an admin swaps checkpoints mid-call.
"""

from __future__ import annotations

import base64
import binascii
import hashlib
import io
import logging
import re
import tempfile
import time
import zipfile
from pathlib import Path, PurePosixPath
from typing import Any

from fastapi import FastAPI, File, UploadFile
from fastapi.encoders import jsonable_encoder
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from .adain import AlphaField
from .checkpoint import CheckpointError, CheckpointNotFoundError
from .imaging import (VOLUME_META_NAME, Volume, extract_plane, load_png_bytes,
                      load_volume, png_bytes)
from .inference import Enhancer

logger = logging.getLogger(__name__)

API_PREFIX = "/api/v1"
VOLUME_ID_LENGTH = 12

_SLICE_NAME = re.compile(r"slice_\d{4}\.png")


class ServiceError(Exception):
    """An error the API reports as a structured non-2xx response."""

    def __init__(self, status: int, code: str, message: str,
                 detail: Any = None) -> None:
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail


def _bad_request(message: str, detail: Any = None) -> ServiceError:
    return ServiceError(400, "bad_request", message, detail)


def _not_found(message: str, detail: Any = None) -> ServiceError:
    return ServiceError(404, "not_found", message, detail)


def _error_response(status: int, code: str, message: str,
                    detail: Any = None) -> JSONResponse:
    return JSONResponse(status_code=status, content=jsonable_encoder(
        {"code": code, "message": message, "detail": detail}))


class AlphaFieldPayload(BaseModel):
    png: str
    regions: list[Any] | None = None


class EnhancePayload(BaseModel):
    image: str
    alpha: float | None = None
    alpha_field: AlphaFieldPayload | None = None


class CheckpointPayload(BaseModel):
    path: str


def _b64_png(field_name: str, encoded: str):
    """Decode a base64 PNG request field to a [0, 1] float array."""
    try:
        blob = base64.b64decode(encoded, validate=True)
    except (binascii.Error, ValueError) as err:
        raise _bad_request(f"{field_name} is not valid base64", str(err))
    try:
        return load_png_bytes(blob)
    except Exception as err:
        raise _bad_request(f"{field_name} is not a decodable grayscale PNG",
                           str(err))


def _png_b64(data) -> str:
    return base64.b64encode(png_bytes(data)).decode("ascii")


def _volume_from_zip(blob: bytes) -> Volume:
    """Unpack an uploaded volume-directory archive and load it.

    Only the slice PNGs and the metadata file are taken from the archive, by
    basename, so zips built with a directory prefix (or stray OS metadata
    entries) register cleanly and nothing can escape the extraction dir.
    """
    try:
        archive = zipfile.ZipFile(io.BytesIO(blob))
    except zipfile.BadZipFile as err:
        raise _bad_request("upload is not a zip archive", str(err))
    with tempfile.TemporaryDirectory() as tmp:
        tmp_path = Path(tmp)
        seen = set()
        for info in archive.infolist():
            if info.is_dir():
                continue
            name = PurePosixPath(info.filename).name
            if name != VOLUME_META_NAME and not _SLICE_NAME.fullmatch(name):
                continue
            (tmp_path / name).write_bytes(archive.read(info))
            seen.add(name)
        if VOLUME_META_NAME not in seen:
            raise _bad_request(f"archive contains no {VOLUME_META_NAME}")
        try:
            return load_volume(tmp_path)
        except Exception as err:
            raise _bad_request("archive is not a valid volume directory",
                               str(err))


def create_app(checkpoint_path: str | Path | None = None) -> FastAPI:
    """Build the service app, optionally loading a checkpoint up front."""
    app = FastAPI(title="usgan service", docs_url=None, redoc_url=None)
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    app.state.enhancer = (Enhancer.from_checkpoint(checkpoint_path)
                          if checkpoint_path is not None else None)
    app.state.started = time.monotonic()
    app.state.volumes = {}

    @app.exception_handler(ServiceError)
    async def _service_error(request, err: ServiceError):
        return _error_response(err.status, err.code, err.message, err.detail)

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request, err: RequestValidationError):
        return _error_response(400, "bad_request", "invalid request body",
                               err.errors())

    @app.exception_handler(Exception)
    async def _unhandled(request, err: Exception):
        logger.exception("unhandled service error")
        return _error_response(500, "internal", "internal server error",
                               str(err))

    @app.get(API_PREFIX + "/health")
    def health():
        enhancer = app.state.enhancer
        return {"status": "ok" if enhancer is not None else "no_model",
                "checkpoint_id": (enhancer.checkpoint_id
                                  if enhancer is not None else None),
                "uptime_s": round(time.monotonic() - app.state.started, 3)}

    @app.post(API_PREFIX + "/enhance")
    def enhance(payload: EnhancePayload):
        enhancer = app.state.enhancer
        if enhancer is None:
            raise _not_found("no checkpoint loaded", "load one via POST "
                             + API_PREFIX + "/admin/checkpoint")
        if (payload.alpha is None) == (payload.alpha_field is None):
            raise _bad_request("provide exactly one of alpha or alpha_field")
        image = _b64_png("image", payload.image)

        field = None
        if payload.alpha is not None:
            if not 0.0 <= payload.alpha <= 1.0:
                raise _bad_request(
                    f"alpha must lie in [0, 1], got {payload.alpha}")
        else:
            values = _b64_png("alpha_field.png", payload.alpha_field.png)
            if values.shape != image.shape:
                raise _bad_request(
                    f"alpha field shape {values.shape} does not match "
                    f"image shape {image.shape}")
            field = AlphaField(values,
                               region_table=payload.alpha_field.regions)

        start = time.perf_counter()
        try:
            out = enhancer.enhance_array(image, alpha=payload.alpha,
                                         alpha_field=field)
        except ValueError as err:
            raise _bad_request(str(err))
        except Exception as err:
            raise ServiceError(500, "model_error", "enhancement failed",
                               str(err))
        latency_ms = (time.perf_counter() - start) * 1000.0

        if payload.alpha is not None:
            echo: Any = payload.alpha
        else:
            echo = {"png": _png_b64(field.values),
                    "regions": payload.alpha_field.regions}
        return {"image": _png_b64(out),
                "latency_ms": round(latency_ms, 3),
                "alpha_echo": echo}

    @app.post(API_PREFIX + "/volumes")
    def register_volume(archive: UploadFile = File(...)):
        blob = archive.file.read()
        volume_id = hashlib.sha256(blob).hexdigest()[:VOLUME_ID_LENGTH]
        if volume_id not in app.state.volumes:
            app.state.volumes[volume_id] = _volume_from_zip(blob)
            logger.info("registered volume %s", volume_id)
        volume = app.state.volumes[volume_id]
        return {"id": volume_id, "shape": list(volume.shape),
                "spacing": list(volume.spacing)}

    @app.get(API_PREFIX + "/volumes/{volume_id}/planes")
    def get_plane(volume_id: str, kind: str = "A", index: int = 0):
        if kind not in ("A", "B", "C"):
            raise _bad_request(
                f"unknown plane kind {kind!r}, expected A, B or C")
        volume = app.state.volumes.get(volume_id)
        if volume is None:
            raise _not_found(f"no volume registered under id {volume_id!r}")
        try:
            plane = extract_plane(volume, kind, index)
        except IndexError as err:
            raise _not_found(str(err))
        return Response(content=png_bytes(plane.data), media_type="image/png")

    @app.post(API_PREFIX + "/admin/checkpoint")
    def swap_checkpoint(payload: CheckpointPayload):
        try:
            enhancer = Enhancer.from_checkpoint(payload.path)
        except (CheckpointNotFoundError, FileNotFoundError) as err:
            raise _not_found(f"no checkpoint at {payload.path}", str(err))
        except CheckpointError as err:
            raise ServiceError(500, "model_error",
                               "checkpoint failed to load", str(err))
        app.state.enhancer = enhancer
        logger.info("checkpoint swapped to %s", enhancer.checkpoint_id)
        return {"checkpoint_id": enhancer.checkpoint_id}

    return app
