import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from cctext import imgproc
from cctext.errors import DataError, SizingError

unit = st.floats(0.0, 1.0, allow_nan=False)
gray_images = arrays(np.float64, st.tuples(st.integers(8, 24), st.integers(8, 24)), elements=unit)


def test_grayscale_black_white_red():
    assert np.all(imgproc.to_grayscale(np.zeros((3, 4, 3))) == 0.0)
    assert np.all(imgproc.to_grayscale(np.ones((3, 4, 3))) == 1.0)
    red = np.zeros((1, 1, 3))
    red[0, 0, 0] = 1.0
    assert imgproc.to_grayscale(red)[0, 0] == pytest.approx(0.299, abs=1e-15)


@given(arrays(np.float64, (5, 6, 3), elements=unit), unit)
def test_grayscale_scales_linearly(rgb, c):
    np.testing.assert_allclose(imgproc.to_grayscale(rgb * c), c * imgproc.to_grayscale(rgb), atol=1e-12)


def test_rejects_out_of_range():
    with pytest.raises(ValueError):
        imgproc.as_gray(np.full((2, 2), 1.5))
    with pytest.raises(ValueError):
        imgproc.as_rgb(np.zeros((2, 2)))


def test_sharpen_constant_is_unchanged():
    img = np.full((7, 9), 0.37)
    np.testing.assert_allclose(imgproc.sharpen(img), img, atol=1e-15)


def test_sharpen_impulse():
    img = np.zeros((5, 5))
    img[2, 2] = 1.0
    # hand convolution: centre 1 + 0.8 - 0.8/9, neighbours -0.8/9
    pre = imgproc.sharpen_kernel(0.8)
    assert pre[1, 1] == pytest.approx(1.0 + 0.8 - 0.8 / 9)
    assert pre[0, 1] == pytest.approx(-0.8 / 9)
    out = imgproc.sharpen(img)
    assert out[2, 2] == 1.0
    assert out[1, 2] == out[3, 2] == out[2, 1] == out[2, 3] == 0.0


def test_sharpen_step_overshoot_is_one_pixel_wide():
    from scipy import ndimage
    row = np.array([0.0] * 5 + [1.0] * 5)
    img = np.tile(row, (3, 1))
    raw = ndimage.correlate(img, imgproc.sharpen_kernel(), mode="nearest")[1]
    # box mean next to the step is 1/3 (left) and 2/3 (right)
    assert raw[4] == pytest.approx(-0.8 / 3)
    assert raw[5] == pytest.approx(1 + 0.8 / 3)
    np.testing.assert_allclose(raw[:4], 0.0, atol=1e-15)
    np.testing.assert_allclose(raw[6:], 1.0, atol=1e-15)
    out = imgproc.sharpen(img)[1]
    assert out[4] == 0.0 and out[5] == 1.0


def test_clahe_constant_stays_constant():
    out = imgproc.clahe(np.full((32, 32), 0.6))
    assert np.ptp(out) == 0.0


def test_clahe_two_level_cdf():
    img = np.full((16, 16), 0.25)
    img[:, 8:] = 0.75
    out = imgproc.clahe(img, tiles=1, clip_limit=1.0)
    assert set(np.round(np.unique(out), 12)) == {0.5, 1.0}


def test_clahe_rejects_tiny_image():
    with pytest.raises(SizingError):
        imgproc.clahe(np.zeros((5, 5)), tiles=8)


def test_clip_histogram_respects_limit():
    hist = np.array([50, 0, 0, 10, 40], dtype=float)
    clipped = imgproc.clip_histogram(hist, 20, redistribute=False)
    assert clipped.max() <= 20
    full = imgproc.clip_histogram(hist, 20)
    assert full.sum() == pytest.approx(hist.sum())


@settings(max_examples=40, deadline=None)
@given(gray_images)
def test_preprocess_range_and_shape(img):
    for out in (imgproc.sharpen(img), imgproc.clahe(img), imgproc.preprocess(img)):
        assert out.shape == img.shape
        assert out.min() >= 0.0 and out.max() <= 1.0


@settings(max_examples=20, deadline=None)
@given(gray_images)
def test_preprocess_is_deterministic(img):
    assert np.array_equal(imgproc.preprocess(img), imgproc.preprocess(img.copy()))


def test_png_roundtrip_and_formats(tmp_path):
    img = np.linspace(0, 1, 60).reshape(6, 10)
    imgproc.save_png(img, tmp_path / "a.png")
    back = imgproc.load_gray(tmp_path / "a.png")
    np.testing.assert_allclose(back, imgproc.to_uint8(img) / 255.0, atol=1e-12)
    Image.fromarray(imgproc.to_uint8(img)).save(tmp_path / "a.jpg")
    assert imgproc.load_gray(tmp_path / "a.jpg").shape == (6, 10)
    Image.fromarray(imgproc.to_uint8(img)).save(tmp_path / "a.bmp")
    with pytest.raises(DataError):
        imgproc.load_gray(tmp_path / "a.bmp")
    with pytest.raises(DataError):
        imgproc.load_gray(tmp_path / "missing.png")


def test_annotate_draws_yellow_two_pixel_stroke():
    out = imgproc.annotate(np.zeros((20, 20, 3)), [(2, 3, 10, 8)])
    assert out.dtype == np.uint8
    assert tuple(out[3, 5]) == (255, 255, 0) and tuple(out[4, 5]) == (255, 255, 0)
    assert tuple(out[5, 5]) == (0, 0, 0)
    assert tuple(out[10, 11]) == (255, 255, 0)   # bottom-right corner is inclusive
    assert tuple(out[11, 12]) == (0, 0, 0)
