"""Pixel-space color math tests.

skimage.color is the independent oracle for the Lab conversion; colorsys
for HSV; the two-point colorfulness value is derived by hand below.
"""

import colorsys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from skimage import color as skcolor

from chromadiff import colorspace as cs


def rng(seed=0):
    return np.random.default_rng(seed)


rgb_images = arrays(
    np.float64,
    st.tuples(st.integers(1, 8), st.integers(1, 8), st.just(3)),
    elements=st.floats(0.0, 1.0, allow_nan=False),
)


# --- grayscale projection ----------------------------------------------------


def test_to_grayscale_red_coefficient():
    # BT.601: pure red maps to luma 0.299 exactly
    red = np.zeros((4, 4, 3))
    red[..., 0] = 1.0
    assert cs.to_grayscale(red) == pytest.approx(0.299, abs=0)


def test_to_grayscale_coefficients_sum_to_one():
    white = np.ones((2, 2, 3))
    np.testing.assert_allclose(cs.to_grayscale(white), 1.0, atol=1e-12)


@given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 8)),
              elements=st.floats(0.0, 1.0, allow_nan=False)))
def test_to_grayscale_idempotent_on_gray(gray):
    # gray replicated to RGB projects back to itself
    out = cs.to_grayscale(cs.gray_to_rgb(gray))
    np.testing.assert_allclose(out, gray, atol=1e-12)


@given(rgb_images)
def test_to_grayscale_range(img):
    out = cs.to_grayscale(img)
    assert out.min() >= -1e-12 and out.max() <= 1 + 1e-12


def test_to_grayscale_rejects_bad_shape():
    with pytest.raises(cs.InputValidationError):
        cs.to_grayscale(np.zeros((4, 4)))


def test_to_grayscale_rejects_nan():
    img = np.zeros((2, 2, 3))
    img[0, 0, 0] = np.nan
    with pytest.raises(cs.InputValidationError):
        cs.to_grayscale(img)


def test_to_grayscale_rejects_out_of_range():
    with pytest.raises(cs.InputValidationError):
        cs.to_grayscale(np.full((2, 2, 3), 1.5))


# --- Lab ---------------------------------------------------------------------


def test_rgb_to_lab_matches_skimage():
    img = rng().random((32, 32, 3))
    lab = cs.rgb_to_lab(img)
    ref = skcolor.rgb2lab(img)
    # small constant-precision differences in the sRGB matrix; measured max
    # deviation is ~5e-3 Lab units on random images
    np.testing.assert_allclose(lab, ref, atol=2e-2)


def test_lab_roundtrip():
    img = rng(1).random((32, 32, 3))
    back = cs.lab_to_rgb(cs.rgb_to_lab(img))
    np.testing.assert_allclose(back, img, atol=cs.LAB_ROUNDTRIP_TOL)


@given(rgb_images)
@settings(max_examples=50)
def test_lab_roundtrip_property(img):
    back = cs.lab_to_rgb(cs.rgb_to_lab(img))
    np.testing.assert_allclose(back, img, atol=cs.LAB_ROUNDTRIP_TOL)


def test_lab_neutral_axis():
    # pure grays have a = b = 0
    lab = cs.rgb_to_lab(cs.gray_to_rgb(np.linspace(0, 1, 11)[None, :]))
    np.testing.assert_allclose(lab[..., 1:], 0.0, atol=1e-10)


def test_gamut_safe_preserves_L():
    # saturated chroma at mismatched lightness is the worst case
    lab = np.array([[[80.0, 120.0, -100.0], [20.0, -90.0, 90.0]]])
    rgb = cs.lab_to_rgb_gamut_safe(lab)
    assert rgb.min() >= 0 and rgb.max() <= 1
    back = cs.rgb_to_lab(rgb)
    np.testing.assert_allclose(back[..., 0], lab[..., 0], atol=1e-5)


# --- replace_luma ------------------------------------------------------------


def test_replace_luma_preserves_source_lightness():
    img = rng(2).random((16, 16, 3))
    gray = rng(3).random((16, 16))
    out = cs.replace_luma(img, gray)
    L_out = cs.rgb_to_lab(out)[..., 0]
    L_src = cs.rgb_to_lab(cs.gray_to_rgb(gray))[..., 0]
    # tolerance expressed in [0,1] units: 1e-3 * 100 Lab L units
    np.testing.assert_allclose(L_out, L_src, atol=0.1)


def test_replace_luma_saturated_chroma():
    # saturated red forced to an arbitrary lightness still keeps L
    red = np.zeros((4, 4, 3))
    red[..., 0] = 1.0
    gray = np.full((4, 4), 0.5)
    out = cs.replace_luma(red, gray)
    L_out = cs.rgb_to_lab(out)[..., 0]
    L_src = cs.rgb_to_lab(cs.gray_to_rgb(gray))[..., 0]
    np.testing.assert_allclose(L_out, L_src, atol=0.1)


def test_replace_luma_identity_on_matching_gray():
    # replacing with the image's own Lab lightness is a no-op
    img = rng(4).random((8, 8, 3)) * 0.6 + 0.2
    own_L = cs.rgb_to_lab(img)[..., 0]
    gray = cs.to_grayscale(cs.lab_to_rgb_gamut_safe(
        np.stack([own_L, np.zeros_like(own_L), np.zeros_like(own_L)], axis=-1)))
    out = cs.replace_luma(img, gray)
    np.testing.assert_allclose(out, img, atol=5e-3)


def test_replace_luma_dimension_mismatch():
    with pytest.raises(cs.InputValidationError):
        cs.replace_luma(np.zeros((4, 4, 3)), np.zeros((5, 5)))


# --- colorfulness ------------------------------------------------------------


def test_colorfulness_zero_on_gray():
    gray = cs.gray_to_rgb(rng(5).random((16, 16)))
    assert cs.colorfulness(gray) == 0.0


def test_colorfulness_two_point_oracle():
    # half saturated red, half saturated green, on the 0-255 scale:
    #   rg = (+255, -255): mean 0, std 255
    #   yb = (127.5, 127.5): mean 127.5, std 0
    #   CLR = hypot(255, 0) + 0.3 * hypot(0, 127.5) = 255 + 38.25
    img = np.zeros((1, 2, 3))
    img[0, 0, 0] = 1.0
    img[0, 1, 1] = 1.0
    assert cs.colorfulness(img) == pytest.approx(293.25, abs=1e-9)


def test_colorfulness_permutation_invariant():
    img = rng(6).random((8, 8, 3))
    flat = img.reshape(-1, 3)
    perm = flat[rng(7).permutation(len(flat))].reshape(img.shape)
    assert cs.colorfulness(img) == pytest.approx(cs.colorfulness(perm), abs=1e-9)


def test_colorfulness_increases_with_chroma_scale():
    img = rng(8).random((16, 16, 3))
    vals = [cs.colorfulness(cs.scale_chroma(img, s)) for s in (0.0, 0.25, 0.5, 0.75, 1.0)]
    assert vals[0] == pytest.approx(0.0, abs=1e-9)
    assert all(b > a for a, b in zip(vals, vals[1:]))


# --- chroma scaling ----------------------------------------------------------


def test_scale_chroma_endpoints():
    img = rng(9).random((8, 8, 3))
    np.testing.assert_allclose(cs.scale_chroma(img, 1.0), img, atol=1e-12)
    np.testing.assert_allclose(
        cs.scale_chroma(img, 0.0), cs.gray_to_rgb(cs.to_grayscale(img)), atol=1e-12
    )


def test_scale_chroma_preserves_luma():
    img = rng(10).random((8, 8, 3))
    for s in (0.0, 0.5, 0.9):
        # luma is linear in RGB, so any in-gamut mix keeps it exactly
        np.testing.assert_allclose(
            cs.to_grayscale(cs.scale_chroma(img, s)), cs.to_grayscale(img), atol=1e-12
        )


def test_scale_ab_zero_is_neutral():
    img = rng(11).random((8, 8, 3))
    out = cs.scale_ab(img, 0.0)
    lab = cs.rgb_to_lab(out)
    np.testing.assert_allclose(lab[..., 1:], 0.0, atol=1e-6)
    # lightness untouched
    np.testing.assert_allclose(lab[..., 0], cs.rgb_to_lab(img)[..., 0], atol=1e-3)


# --- HSV ---------------------------------------------------------------------


def test_hsv_matches_colorsys():
    r = rng(12)
    for _ in range(100):
        px = r.random(3)
        mine = cs.rgb_to_hsv(px[None, None])[0, 0]
        ref = colorsys.rgb_to_hsv(*px)
        np.testing.assert_allclose(mine, ref, atol=1e-12)


@given(rgb_images)
@settings(max_examples=50)
def test_hsv_roundtrip(img):
    back = cs.hsv_to_rgb(cs.rgb_to_hsv(img))
    np.testing.assert_allclose(back, img, atol=1e-9)


def test_mean_saturation_of_gray_is_zero():
    assert cs.mean_saturation(cs.gray_to_rgb(np.full((4, 4), 0.3))) == 0.0


# --- I/O ---------------------------------------------------------------------


def test_image_io_roundtrip(tmp_path):
    img = rng(13).random((16, 24, 3))
    p = tmp_path / "x.png"
    cs.save_image(img, p)
    back = cs.load_image(p)
    assert back.shape == img.shape
    # 8-bit quantization bound
    np.testing.assert_allclose(back, img, atol=0.5 / 255 + 1e-9)


def test_load_image_gray_flag(tmp_path):
    img = rng(14).random((8, 8, 3))
    p = tmp_path / "x.png"
    cs.save_image(img, p)
    g = cs.load_image(p, gray=True)
    assert g.shape == (8, 8)
    np.testing.assert_allclose(g, cs.to_grayscale(cs.load_image(p)), atol=1e-12)
