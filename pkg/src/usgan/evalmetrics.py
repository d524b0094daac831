"""Image quality metrics and alpha-sweep reports.

PSNR assumes the [0, 1] value range and returns +inf for identical images
(serialized as the string "inf" in reports). SSIM is computed over 8x8
non-overlapping windows with the usual k1 = 0.01, k2 = 0.03 constants.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

SSIM_WINDOW = 8
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _as_float64(a, b, what: str) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"{what} expects matching shapes, got {a.shape} and {b.shape}")
    if a.size == 0:
        raise ValueError(f"{what} expects non-empty images")
    return a, b


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB over the unit range; +inf if identical."""
    a, b = _as_float64(a, b, "psnr")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _block_reduce(a: np.ndarray, window: int) -> tuple[np.ndarray, ...]:
    """Per-block count, sum and sum of squares, edge blocks included."""
    h, w = a.shape
    row_edges = np.arange(0, h, window)
    col_edges = np.arange(0, w, window)
    ones = np.ones_like(a)

    def reduce2d(x):
        part = np.add.reduceat(x, row_edges, axis=0)
        return np.add.reduceat(part, col_edges, axis=1)

    return reduce2d(ones), reduce2d(a), reduce2d(a * a)


def ssim(a: np.ndarray, b: np.ndarray, window: int = SSIM_WINDOW) -> float:
    """Mean structural similarity over non-overlapping windows, range (-1, 1]."""
    a, b = _as_float64(a, b, "ssim")
    if window < 1:
        raise ValueError("window must be positive")
    n, sum_a, sq_a = _block_reduce(a, window)
    _, sum_b, sq_b = _block_reduce(b, window)
    row_edges = np.arange(0, a.shape[0], window)
    col_edges = np.arange(0, a.shape[1], window)
    sum_ab = np.add.reduceat(np.add.reduceat(a * b, row_edges, axis=0),
                             col_edges, axis=1)

    mu_a = sum_a / n
    mu_b = sum_b / n
    var_a = sq_a / n - mu_a ** 2
    var_b = sq_b / n - mu_b ** 2
    cov = sum_ab / n - mu_a * mu_b

    c1 = (SSIM_K1 * 1.0) ** 2
    c2 = (SSIM_K2 * 1.0) ** 2
    score = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)
             / ((mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)))
    return float(score.mean())


def alpha_sweep_report(degraded: np.ndarray, sharp: np.ndarray, enhancer,
                       alphas: list[float]) -> list[dict]:
    """Enhance one degraded image at each alpha and score against its pair.

    Each row carries the alpha, PSNR and SSIM versus the sharp reference, and
    the mean absolute drift from the alpha = 0 output.
    """
    if not alphas:
        raise ValueError("alphas must be non-empty")
    base = enhancer.enhance_array(degraded, alpha=0.0)
    rows = []
    for alpha in alphas:
        out = enhancer.enhance_array(degraded, alpha=float(alpha))
        rows.append({
            "alpha": float(alpha),
            "psnr_db": psnr(out, sharp),
            "ssim": ssim(out, sharp),
            "l1_from_alpha0": float(np.mean(np.abs(out - base))),
        })
    return rows


def evaluate_pairs(enhancer, data_dir: str | Path, pairs: list[dict],
                   alphas: list[float]) -> list[dict]:
    """Score every eval pair at every alpha; one aggregated row per alpha."""
    from .imaging import load_png

    if not pairs:
        raise ValueError("no eval pairs to score")
    data_dir = Path(data_dir)
    rows = []
    for alpha in alphas:
        p_vals, s_vals = [], []
        for pair in pairs:
            deg = load_png(data_dir / pair["degraded"])
            sharp = load_png(data_dir / pair["sharp"])
            out = enhancer.enhance_array(deg, alpha=float(alpha))
            p_vals.append(psnr(out, sharp))
            s_vals.append(ssim(out, sharp))
        finite = [v for v in p_vals if math.isfinite(v)]
        rows.append({
            "alpha": float(alpha),
            "psnr_db": float(np.mean(finite)) if finite else math.inf,
            "ssim": float(np.mean(s_vals)),
            "n_pairs": len(pairs),
        })
    return rows


def _cell(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return value


def report_to_csv(rows: list[dict], path) -> None:
    """Write rows as CSV to a path or an already-open text stream."""
    if not rows:
        raise ValueError("nothing to write")
    if hasattr(path, "write"):
        _write_csv(rows, path)
    else:
        with Path(path).open("w", newline="") as fh:
            _write_csv(rows, fh)


def _write_csv(rows: list[dict], fh) -> None:
    writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _cell(v) for k, v in row.items()})


def report_to_json(rows: list[dict], path: str | Path) -> None:
    if not rows:
        raise ValueError("nothing to write")
    payload = [{k: _cell(v) for k, v in row.items()} for row in rows]
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")
