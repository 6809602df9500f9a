"""CLI behavior: artifact layout, config fallbacks, nonzero exits."""

import csv
import json
from pathlib import Path

import numpy as np
import pytest
import torch
from click.testing import CliRunner
from PIL import Image

from chromadiff.cli import main
from chromadiff.codec import ConvCodec
from chromadiff.denoiser import Denoiser, TextEncoder, UNet, Vocab, save_denoiser
from chromadiff.ranker import RankerModel


def _write_png(path, arr):
    img = np.clip(np.round(np.asarray(arr) * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(img).save(path)


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def model_path(tmp_path_factory):
    torch.manual_seed(3)
    unet = UNet(channels=3, base=8, text_dim=16, time_dim=16)
    model = Denoiser(unet, TextEncoder(Vocab.build(["red", "blue"]), dim=16)).eval()
    with torch.no_grad():
        for p in unet.head.parameters():
            p.add_(torch.randn_like(p) * 0.2)
    path = tmp_path_factory.mktemp("cli-model") / "denoiser.pt"
    save_denoiser(model, path)
    return path


@pytest.fixture(scope="module")
def gray_input(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli-in") / "g.png"
    rng = np.random.default_rng(4)
    _write_png(path, np.stack([rng.random((20, 20))] * 3, axis=-1))
    return path


def _combined(result):
    return result.output + (result.stderr or "")


class TestColorize:
    def test_writes_png_and_trace(self, runner, model_path, gray_input, tmp_path):
        out = tmp_path / "out.png"
        result = runner.invoke(main, [
            "colorize", "--input", str(gray_input), "--out", str(out),
            "--model", str(model_path), "--steps", "3",
        ])
        assert result.exit_code == 0, _combined(result)
        assert out.exists()
        trace = json.loads((tmp_path / "trace.json").read_text())
        assert len(trace) == 3
        assert {"step", "t", "colorfulness"} <= set(trace[0])

    def test_no_trace_flag(self, runner, model_path, gray_input, tmp_path):
        out = tmp_path / "out.png"
        result = runner.invoke(main, [
            "colorize", "--input", str(gray_input), "--out", str(out),
            "--model", str(model_path), "--steps", "2", "--no-trace",
        ])
        assert result.exit_code == 0
        assert out.exists() and not (tmp_path / "trace.json").exists()

    def test_config_supplies_model_and_steps(self, runner, model_path, gray_input, tmp_path):
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps({"denoiser_path": str(model_path), "steps": 2}))
        out = tmp_path / "out.png"
        result = runner.invoke(main, [
            "colorize", "--input", str(gray_input), "--out", str(out), "--config", str(cfg),
        ])
        assert result.exit_code == 0, _combined(result)
        assert len(json.loads((tmp_path / "trace.json").read_text())) == 2

    def test_missing_model_is_an_error(self, runner, gray_input, tmp_path):
        result = runner.invoke(main, [
            "colorize", "--input", str(gray_input), "--out", str(tmp_path / "o.png"),
        ])
        assert result.exit_code != 0
        assert "no denoiser" in _combined(result)

    def test_invalid_steps_exits_nonzero(self, runner, model_path, gray_input, tmp_path):
        result = runner.invoke(main, [
            "colorize", "--input", str(gray_input), "--out", str(tmp_path / "o.png"),
            "--model", str(model_path), "--steps", "0",
        ])
        assert result.exit_code != 0
        assert "steps" in _combined(result)


class TestEnhance:
    def test_single_cell_grid(self, runner, model_path, tmp_path):
        faded = tmp_path / "faded.png"
        _write_png(faded, 0.5 + 0.3 * (np.random.default_rng(5).random((16, 16, 3)) - 0.5))
        out = tmp_path / "grid"
        result = runner.invoke(main, [
            "enhance", "--input", str(faded), "--out-dir", str(out),
            "--model", str(model_path), "--seeds", "0", "--starts", "0", "--steps", "3",
        ])
        assert result.exit_code == 0, _combined(result)
        index = json.loads((out / "index.json").read_text())
        assert len(index) == 1
        assert index[0]["seed"] == 0.0 and index[0]["start"] == 0
        assert (out / index[0]["file"]).exists()
        assert (out / "sheet.png").exists()

    def test_start_beyond_steps_is_an_error(self, runner, model_path, tmp_path):
        faded = tmp_path / "faded.png"
        _write_png(faded, np.full((8, 8, 3), 0.6))
        result = runner.invoke(main, [
            "enhance", "--input", str(faded), "--out-dir", str(tmp_path / "g"),
            "--model", str(model_path), "--seeds", "0", "--starts", "5", "--steps", "3",
        ])
        assert result.exit_code != 0
        assert "start steps" in _combined(result)


class TestEval:
    def _make_dirs(self, root, n=3):
        rng = np.random.default_rng(6)
        for name in ("pred", "gt", "gray"):
            (root / name).mkdir()
        for i in range(n):
            img = rng.random((16, 16, 3))
            _write_png(root / "pred" / f"{i}.png", img)
            _write_png(root / "gt" / f"{i}.png", img)
            _write_png(root / "gray" / f"{i}.png", np.stack([img.mean(-1)] * 3, -1))
        manifest = root / "m.json"
        manifest.write_text(json.dumps({
            "pred_dir": str(root / "pred"),
            "gt_dir": str(root / "gt"),
            "gray_dir": str(root / "gray"),
        }))
        return manifest

    def test_metrics_csv_columns_and_identity_row(self, runner, tmp_path):
        manifest = self._make_dirs(tmp_path)
        result = runner.invoke(main, [
            "eval", "--manifest", str(manifest), "--out-dir", str(tmp_path / "out"),
        ])
        assert result.exit_code == 0, _combined(result)
        with (tmp_path / "out" / "metrics.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        assert list(rows[0].keys()) == ["method", "FID", "CLR", "dCLR", "PSNR", "SSIM"]
        pred = rows[0]
        # predictions replicate ground truth exactly
        assert float(pred["FID"]) == pytest.approx(0.0, abs=1e-6)
        assert float(pred["dCLR"]) == pytest.approx(0.0, abs=1e-9)
        assert float(pred["PSNR"]) == float("inf")
        assert float(pred["SSIM"]) == pytest.approx(1.0, abs=1e-9)
        baseline = rows[1]
        assert baseline["method"] == "grayscale_baseline"
        assert float(baseline["CLR"]) < float(pred["CLR"])
        # json mirror stays strict-parseable despite the infinite PSNR
        mirrored = json.loads((tmp_path / "out" / "metrics.json").read_text())
        assert mirrored[0]["PSNR"] == "inf"

    def test_manifest_missing_key(self, runner, tmp_path):
        manifest = tmp_path / "m.json"
        manifest.write_text(json.dumps({"pred_dir": "x"}))
        result = runner.invoke(main, ["eval", "--manifest", str(manifest)])
        assert result.exit_code != 0
        assert "gt_dir" in _combined(result)


class TestTraining:
    def test_train_codec_writes_checkpoint(self, runner, tmp_path):
        out = tmp_path / "codec.pt"
        result = runner.invoke(main, [
            "train-codec", "--synthetic", "48", "--size", "16", "--holdout", "8",
            "--width", "8", "--epochs", "1", "--out", str(out),
        ])
        assert result.exit_code == 0, _combined(result)
        codec = ConvCodec.load(out)
        assert codec.channels == 4

    def test_train_denoiser_writes_history(self, runner, tmp_path):
        out = tmp_path / "run"
        result = runner.invoke(main, [
            "train-denoiser", "--synthetic", "24", "--size", "16",
            "--total-steps", "6", "--batch-size", "4",
            "--base-width", "8", "--text-dim", "16", "--out", str(out),
        ])
        assert result.exit_code == 0, _combined(result)
        assert (out / "denoiser.pt").exists()
        history = json.loads((out / "history.json").read_text())
        assert len(history["loss"]) == 6

    def test_train_ranker_reports_accuracy(self, runner, tmp_path):
        out = tmp_path / "ranker.json"
        result = runner.invoke(main, [
            "train-ranker", "--synthetic", "120", "--size", "16",
            "--n-pairs", "60", "--out", str(out),
        ])
        assert result.exit_code == 0, _combined(result)
        model = RankerModel.load(out)
        assert len(model.weights) > 0
        assert "holdout" in result.output


class TestProbe:
    def test_identity_probe_is_exactly_linear(self, runner, tmp_path):
        out = tmp_path / "probe.json"
        result = runner.invoke(main, [
            "probe-linearity", "--synthetic", "16", "--size", "16",
            "--count", "12", "--out", str(out),
        ])
        assert result.exit_code == 0, _combined(result)
        report = json.loads(out.read_text())
        assert report["rank_correlation"] == 1.0
        assert len(report["scales"]) == len(report["mean_colorfulness"])
