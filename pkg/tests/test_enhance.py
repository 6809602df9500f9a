import numpy as np
import pytest
import torch

from chromadiff import enhance as E
from chromadiff.codec import IdentityCodec
from chromadiff.colorspace import (
    colorfulness,
    mean_saturation,
    rgb_to_hsv,
    rgb_to_lab,
    to_grayscale,
)
from chromadiff.denoiser import Denoiser, TextEncoder, UNet, Vocab
from chromadiff.sampler import SamplerConfig, colorize


def _random_denoiser(seed=0):
    torch.manual_seed(seed)
    unet = UNet(channels=3, base=8, text_dim=16, time_dim=16)
    model = Denoiser(unet, TextEncoder(Vocab.build(["red", "blue"]), dim=16)).eval()
    with torch.no_grad():
        for p in unet.head.parameters():
            p.add_(torch.randn_like(p) * 0.2)
    return model


class _FailsAtFullDegradation:
    """Raises only on the first schedule entry (t == 1.0)."""

    def predict_residual(self, z_t, t, prompt):
        if t == 1.0:
            raise ValueError("synthetic failure")
        return np.zeros_like(z_t)


def _faded(rng, size=16):
    return 0.5 + 0.2 * (rng.random((size, size, 3)) - 0.5)


class TestEnhanceConfig:
    def test_defaults_are_four_by_four(self):
        cfg = E.EnhanceConfig()
        assert cfg.chroma_seeds == (0.0, 0.001, 0.003, 0.005)
        assert cfg.start_steps == (0, 1, 2, 3)

    def test_validation(self):
        with pytest.raises(ValueError, match="seeds"):
            E.EnhanceConfig(chroma_seeds=(-0.1,))
        with pytest.raises(ValueError, match="seeds"):
            E.EnhanceConfig(chroma_seeds=())
        with pytest.raises(ValueError, match="start steps"):
            E.EnhanceConfig(start_steps=(0, 99), sampler=SamplerConfig(steps=4))
        with pytest.raises(ValueError, match="start steps"):
            E.EnhanceConfig(start_steps=(0.5,))


class TestEnhanceGrid:
    def test_zero_seed_zero_start_bit_identical_to_plain_colorize(self, rng):
        faded = _faded(rng)
        model = _random_denoiser()
        codec = IdentityCodec()
        cfg = E.EnhanceConfig(sampler=SamplerConfig(steps=3))
        grid = E.enhance_grid(faded, cfg, model, codec)
        plain = colorize(to_grayscale(faded), cfg.sampler, model, codec)
        assert np.array_equal(grid[0][0].image, plain.image)

    def test_default_grid_is_full_four_by_four(self, rng):
        grid = E.enhance_grid(
            _faded(rng), E.EnhanceConfig(sampler=SamplerConfig(steps=3)),
            _random_denoiser(), IdentityCodec(),
        )
        assert len(grid) == 4 and all(len(row) == 4 for row in grid)
        assert all(not cell.failed for row in grid for cell in row)

    def test_cells_preserve_input_luma(self, rng):
        faded = _faded(rng)
        grid = E.enhance_grid(
            faded, E.EnhanceConfig(sampler=SamplerConfig(steps=3)),
            _random_denoiser(), IdentityCodec(),
        )
        target_l = rgb_to_lab(np.stack([to_grayscale(faded)] * 3, axis=-1))[..., 0]
        for row in grid:
            for cell in row:
                got_l = rgb_to_lab(cell.image)[..., 0]
                assert np.abs(got_l - target_l).max() < 1e-3

    def test_zero_seed_full_skip_is_grayscale(self, rng):
        faded = _faded(rng)
        cfg = E.EnhanceConfig(chroma_seeds=(0.0,), start_steps=(3,),
                              sampler=SamplerConfig(steps=3))
        grid = E.enhance_grid(faded, cfg, _random_denoiser(), IdentityCodec())
        assert colorfulness(grid[0][0].image) < 1e-6

    def test_failed_cells_are_marked_and_grid_survives(self, rng):
        cfg = E.EnhanceConfig(sampler=SamplerConfig(steps=3))
        grid = E.enhance_grid(_faded(rng), cfg, _FailsAtFullDegradation(), IdentityCodec())
        for row in grid:
            assert row[0].failed and "synthetic failure" in row[0].error
            assert all(not cell.failed for cell in row[1:])

    def test_rejects_grayscale_input(self, rng):
        with pytest.raises(Exception, match="(H, W, 3)|image"):
            E.enhance_grid(rng.random((8, 8)), E.EnhanceConfig(),
                           _random_denoiser(), IdentityCodec())


class TestGridUtilities:
    def _grid(self, rng):
        cfg = E.EnhanceConfig(chroma_seeds=(0.0, 0.003), start_steps=(0, 2),
                              sampler=SamplerConfig(steps=2))
        return E.enhance_grid(_faded(rng), cfg, _random_denoiser(), IdentityCodec())

    def test_grid_index_manifest(self, rng):
        idx = E.grid_index(self._grid(rng))
        assert len(idx) == 4
        assert idx[0] == {"row": 0, "col": 0, "seed": 0.0, "start": 0,
                          "failed": False, "error": None}
        assert idx[3]["seed"] == 0.003 and idx[3]["start"] == 2

    def test_contact_sheet_geometry(self, rng):
        sheet = E.contact_sheet(self._grid(rng), pad=2)
        assert sheet.shape == (2 * 16 + 2, 2 * 16 + 2, 3)

    def test_contact_sheet_blacks_out_failures(self, rng):
        cfg = E.EnhanceConfig(chroma_seeds=(0.0,), start_steps=(0, 1),
                              sampler=SamplerConfig(steps=3))
        grid = E.enhance_grid(_faded(rng), cfg, _FailsAtFullDegradation(), IdentityCodec())
        sheet = E.contact_sheet(grid, pad=0)
        assert np.all(sheet[:, :16] == 0.0)   # failed start=0 cell
        assert sheet[:, 16:].max() > 0.0

    def test_contact_sheet_rejects_all_failed(self, rng):
        cfg = E.EnhanceConfig(chroma_seeds=(0.0,), start_steps=(0,),
                              sampler=SamplerConfig(steps=1))
        grid = E.enhance_grid(_faded(rng), cfg, _FailsAtFullDegradation(), IdentityCodec())
        with pytest.raises(ValueError, match="every cell failed"):
            E.contact_sheet(grid)


class TestSaturationBaseline:
    def test_current_mean_is_identity(self, rng):
        img = rng.random((12, 12, 3))
        res = E.saturation_baseline(img, mean_saturation(img))
        assert res.unreachable is False
        assert np.abs(res.image - img).max() < 1e-6

    def test_zero_target_is_grayscale(self, rng):
        res = E.saturation_baseline(rng.random((10, 10, 3)), 0.0)
        assert colorfulness(res.image) == 0.0
        assert res.unreachable is False

    def test_hits_target_mean_within_tolerance(self, rng):
        img = rng.random((16, 16, 3))
        for target in (0.2, 0.5, 0.7):
            res = E.saturation_baseline(img, target)
            assert res.unreachable is False
            assert abs(mean_saturation(res.image) - target) < 1e-3

    def test_hue_and_value_unchanged(self, rng):
        img = rng.random((12, 12, 3))
        res = E.saturation_baseline(img, 0.6)
        before, after = rgb_to_hsv(img), rgb_to_hsv(res.image)
        assert np.abs(after[..., 2] - before[..., 2]).max() < 1e-9
        colored = before[..., 1] > 1e-9
        assert np.abs((after[..., 0] - before[..., 0])[colored]).max() < 1e-9

    def test_all_gray_input_flagged(self, rng):
        img = np.stack([rng.random((8, 8))] * 3, axis=-1)
        res = E.saturation_baseline(img, 0.5)
        assert res.unreachable is True
        assert np.array_equal(res.image, img)

    def test_unreachable_target_flagged_and_maximized(self, rng):
        img = np.stack([rng.random((8, 8))] * 3, axis=-1)
        img[:4] = [0.8, 0.2, 0.2]  # only the top half carries color
        res = E.saturation_baseline(img, 0.9)
        assert res.unreachable is True
        s = rgb_to_hsv(res.image)[..., 1]
        assert np.allclose(s[:4], 1.0, atol=1e-9)

    def test_validates_target(self, rng):
        with pytest.raises(ValueError, match="target"):
            E.saturation_baseline(rng.random((8, 8, 3)), 1.5)
