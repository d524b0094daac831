"""Tests for PSNR, SSIM and sweep reports."""

import csv
import json
import math

import numpy as np
import pytest

from usgan.evalmetrics import (alpha_sweep_report, evaluate_pairs, psnr,
                               report_to_csv, report_to_json, ssim)


class TestPsnr:
    def test_identical_images_are_infinite(self):
        a = np.random.default_rng(0).random((16, 16))
        assert psnr(a, a.copy()) == math.inf

    def test_unit_error_is_zero_db(self):
        a = np.zeros((8, 8))
        b = np.ones((8, 8))
        assert psnr(a, b) == pytest.approx(0.0)

    def test_constant_offset_known_value(self):
        a = np.zeros((8, 8))
        b = np.full((8, 8), 0.1)
        assert psnr(a, b) == pytest.approx(20.0)

    def test_loop_oracle(self):
        rng = np.random.default_rng(1)
        a = rng.random((6, 6))
        b = rng.random((6, 6))
        acc = sum((float(u) - float(v)) ** 2
                  for u, v in zip(a.ravel(), b.ravel())) / a.size
        assert psnr(a, b) == pytest.approx(10 * math.log10(1 / acc), abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(2)
        a, b = rng.random((8, 8)), rng.random((8, 8))
        assert psnr(a, b) == pytest.approx(psnr(b, a), abs=1e-12)

    def test_noise_monotonicity(self):
        rng = np.random.default_rng(3)
        a = rng.random((32, 32))
        last = math.inf
        for scale in (0.01, 0.05, 0.2):
            noisy = np.clip(a + rng.normal(0, scale, a.shape), 0, 1)
            value = psnr(a, noisy)
            assert value < last
            last = value

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="matching shapes"):
            psnr(np.zeros((4, 4)), np.zeros((4, 5)))


class TestSsim:
    def test_identical_images_score_one(self):
        a = np.random.default_rng(4).random((32, 32))
        assert ssim(a, a.copy()) == pytest.approx(1.0)

    def test_constant_images_closed_form(self):
        # flat 0 versus flat 1: variances and covariance vanish, so the score
        # reduces to c1 / (1 + c1) with c1 = (0.01)^2
        a = np.zeros((16, 16))
        b = np.ones((16, 16))
        c1 = 0.01 ** 2
        assert ssim(a, b) == pytest.approx(c1 / (1 + c1), abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(5)
        a, b = rng.random((24, 24)), rng.random((24, 24))
        assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)

    def test_bounded_above_by_one(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            a, b = rng.random((16, 16)), rng.random((16, 16))
            assert ssim(a, b) <= 1.0 + 1e-12

    def test_block_loop_oracle_with_edge_blocks(self):
        # Oracle: per-block SSIM computed with explicit python loops over a
        # 12x12 image, whose right and bottom blocks are partial.
        rng = np.random.default_rng(7)
        a = rng.random((12, 12))
        b = rng.random((12, 12))
        c1, c2 = 0.01 ** 2, 0.03 ** 2
        scores = []
        for r0 in range(0, 12, 8):
            for c0 in range(0, 12, 8):
                pa = a[r0:r0 + 8, c0:c0 + 8]
                pb = b[r0:r0 + 8, c0:c0 + 8]
                mu_a, mu_b = pa.mean(), pb.mean()
                var_a, var_b = pa.var(), pb.var()
                cov = ((pa - mu_a) * (pb - mu_b)).mean()
                scores.append((2 * mu_a * mu_b + c1) * (2 * cov + c2)
                              / ((mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)))
        assert ssim(a, b) == pytest.approx(float(np.mean(scores)), abs=1e-10)

    def test_degraded_scores_below_identical(self):
        rng = np.random.default_rng(8)
        a = rng.random((32, 32))
        blurred = (a + np.roll(a, 1, axis=0) + np.roll(a, 1, axis=1)) / 3
        assert ssim(a, blurred) < 1.0


class _IdentityEnhancer:
    def enhance_array(self, arr, alpha=None, alpha_field=None):
        return np.asarray(arr, dtype=np.float32).copy()


class TestReports:
    def test_identity_enhancer_sweep(self):
        rng = np.random.default_rng(9)
        deg = rng.random((16, 16)).astype(np.float32)
        sharp = rng.random((16, 16)).astype(np.float32)
        rows = alpha_sweep_report(deg, sharp, _IdentityEnhancer(), [0.0, 0.5, 1.0])
        assert [r["alpha"] for r in rows] == [0.0, 0.5, 1.0]
        for row in rows:
            assert row["l1_from_alpha0"] == 0.0
            assert row["psnr_db"] == pytest.approx(rows[0]["psnr_db"])

    def test_sweep_requires_alphas(self):
        with pytest.raises(ValueError, match="alphas"):
            alpha_sweep_report(np.zeros((8, 8)), np.zeros((8, 8)),
                               _IdentityEnhancer(), [])

    def test_csv_round_trip_with_infinity(self, tmp_path):
        rows = [{"alpha": 0.0, "psnr_db": math.inf, "ssim": 1.0},
                {"alpha": 1.0, "psnr_db": 30.25, "ssim": 0.9}]
        path = tmp_path / "report.csv"
        report_to_csv(rows, path)
        with path.open() as fh:
            back = list(csv.DictReader(fh))
        assert back[0]["psnr_db"] == "inf"
        assert float(back[0]["psnr_db"]) == math.inf
        assert float(back[1]["psnr_db"]) == pytest.approx(30.25)

    def test_json_round_trip_with_infinity(self, tmp_path):
        rows = [{"alpha": 0.0, "psnr_db": math.inf, "ssim": 1.0}]
        path = tmp_path / "report.json"
        report_to_json(rows, path)
        back = json.loads(path.read_text())
        assert back[0]["psnr_db"] == "inf"

    def test_evaluate_pairs_aggregates(self, tmp_path):
        from usgan.imaging import save_png

        rng = np.random.default_rng(10)
        pairs = []
        for k in range(3):
            deg = rng.random((16, 16)).astype(np.float32)
            sharp = np.clip(deg + rng.normal(0, 0.05, deg.shape), 0, 1).astype(np.float32)
            save_png(tmp_path / f"d{k}.png", deg)
            save_png(tmp_path / f"s{k}.png", sharp)
            pairs.append({"degraded": f"d{k}.png", "sharp": f"s{k}.png"})
        rows = evaluate_pairs(_IdentityEnhancer(), tmp_path, pairs, [0.0, 1.0])
        assert len(rows) == 2
        assert rows[0]["n_pairs"] == 3
        assert rows[0]["psnr_db"] == pytest.approx(rows[1]["psnr_db"])
