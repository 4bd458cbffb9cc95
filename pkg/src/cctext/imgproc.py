"""Image I/O and the preprocessing stage (sharpening + CLAHE).

Grayscale images are plain 2-D ``float64`` arrays of shape ``(height, width)``
with intensities in [0, 1]; RGB images are ``(height, width, 3)`` arrays on
the same scale. Every operation here returns a new array.
"""
from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from PIL import Image, ImageDraw
from scipy import ndimage

from .errors import DataError, SizingError

LUMA_WEIGHTS = (0.299, 0.587, 0.114)
SHARPEN_ALPHA = 0.8
CLAHE_TILES = 8
CLAHE_CLIP = 0.01
CLAHE_BINS = 256
YELLOW = (255, 255, 0)


def as_gray(img) -> np.ndarray:
    """Validate and return ``img`` as a float64 grayscale array."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"grayscale image must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("grayscale intensities must lie in [0, 1]")
    return arr


def as_rgb(img) -> np.ndarray:
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"RGB image must have shape (h, w, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("RGB channels must lie in [0, 1]")
    return arr


def to_grayscale(img) -> np.ndarray:
    rgb = as_rgb(img)
    r, g, b = LUMA_WEIGHTS
    out = r * rgb[..., 0] + g * rgb[..., 1] + b * rgb[..., 2]
    # the weights sum to 1 only up to rounding; dividing by the same sum keeps white exact
    return np.clip(out / (r + g + b), 0.0, 1.0)


def sharpen_kernel(alpha: float = SHARPEN_ALPHA) -> np.ndarray:
    """3x3 unsharp-mask kernel ``delta + alpha * (delta - box)``.

    ``delta - box`` is the 8-neighbour Laplacian scaled by -1/9.
    """
    k = np.full((3, 3), -alpha / 9.0)
    k[1, 1] += 1.0 + alpha
    return k


def sharpen(img, alpha: float = SHARPEN_ALPHA) -> np.ndarray:
    gray = as_gray(img)
    out = ndimage.correlate(gray, sharpen_kernel(alpha), mode="nearest")
    return np.clip(out, 0.0, 1.0)


def clip_histogram(hist: np.ndarray, limit: float, redistribute: bool = True) -> np.ndarray:
    """Clip every bin at ``limit`` and spread the excess uniformly over all bins."""
    hist = np.asarray(hist, dtype=np.float64)
    clipped = np.minimum(hist, limit)
    if not redistribute:
        return clipped
    excess = hist.sum() - clipped.sum()
    return clipped + excess / hist.size


def _tile_edges(n: int, tiles: int) -> np.ndarray:
    return np.linspace(0, n, tiles + 1).round().astype(np.intp)


def _interp_weights(n: int, edges: np.ndarray):
    """Per-coordinate (lower tile, upper tile, upper weight) for bilinear blending."""
    centers = (edges[:-1] + edges[1:] - 1) / 2.0
    pos = np.interp(np.arange(n), centers, np.arange(centers.size))
    lo = np.floor(pos).astype(np.intp)
    hi = np.minimum(lo + 1, centers.size - 1)
    return lo, hi, pos - lo


def clahe(img, tiles=CLAHE_TILES, clip_limit: float = CLAHE_CLIP, bins: int = CLAHE_BINS) -> np.ndarray:
    """Contrast-limited adaptive histogram equalization.

    ``tiles`` is a grid count per axis (int, or ``(rows, cols)``). Each tile's
    histogram is clipped at ``clip_limit * tile_pixels`` and mapped through its
    CDF; per-pixel mappings are bilinearly blended between tile centres.
    """
    gray = as_gray(img)
    ty, tx = (tiles, tiles) if np.isscalar(tiles) else tuple(tiles)
    ty, tx = int(ty), int(tx)
    if ty < 1 or tx < 1:
        raise ValueError("tile counts must be >= 1")
    if not 0.0 < clip_limit <= 1.0:
        raise ValueError("clip_limit must lie in (0, 1]")
    h, w = gray.shape
    if h < ty or w < tx:
        raise SizingError(f"image of size {w}x{h} is smaller than the {tx}x{ty} tile grid")

    idx = np.minimum((gray * bins).astype(np.intp), bins - 1)
    ye, xe = _tile_edges(h, ty), _tile_edges(w, tx)
    luts = np.empty((ty, tx, bins))
    for i in range(ty):
        for j in range(tx):
            tile = idx[ye[i]:ye[i + 1], xe[j]:xe[j + 1]]
            hist = np.bincount(tile.ravel(), minlength=bins)
            hist = clip_histogram(hist, clip_limit * tile.size)
            luts[i, j] = np.cumsum(hist) / tile.size

    y0, y1, wy = _interp_weights(h, ye)
    x0, x1, wx = _interp_weights(w, xe)
    wy, wx = wy[:, None], wx[None, :]
    y0, y1, x0, x1 = y0[:, None], y1[:, None], x0[None, :], x1[None, :]
    # nested lerps are exact where neighbouring tile mappings agree
    top = luts[y0, x0, idx] + wx * (luts[y0, x1, idx] - luts[y0, x0, idx])
    bottom = luts[y1, x0, idx] + wx * (luts[y1, x1, idx] - luts[y1, x0, idx])
    return np.clip(top + wy * (bottom - top), 0.0, 1.0)


def preprocess(img, alpha: float = SHARPEN_ALPHA, tiles=CLAHE_TILES,
               clip_limit: float = CLAHE_CLIP, do_sharpen: bool = True,
               do_clahe: bool = True) -> np.ndarray:
    """Sharpen, then equalize (the order of the detection pipeline)."""
    out = as_gray(img)
    if do_sharpen:
        out = sharpen(out, alpha)
    if do_clahe:
        out = clahe(out, tiles, clip_limit)
    return out


# --- I/O -------------------------------------------------------------------

def load_rgb(path) -> np.ndarray:
    """Decode a PNG or JPEG file into a float RGB array."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            if im.format not in ("PNG", "JPEG"):
                raise DataError(f"{path}: unsupported image format {im.format!r}")
            rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
    except DataError:
        raise
    except (OSError, Image.DecompressionBombError) as exc:
        raise DataError(f"cannot read image {path}: {exc}") from exc
    return rgb / 255.0


def load_gray(path) -> np.ndarray:
    return to_grayscale(load_rgb(path))


def to_uint8(img) -> np.ndarray:
    return np.round(np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0) * 255.0).astype(np.uint8)


def save_png(img, path) -> None:
    """Encode a grayscale, boolean, or RGB array as PNG."""
    arr = np.asarray(img)
    if arr.dtype == bool:
        arr = arr.astype(np.float64)
    if arr.dtype != np.uint8:
        arr = to_uint8(arr)
    Image.fromarray(arr).save(Path(path), format="PNG")


def annotate(rgb, boxes: Iterable[Sequence[int]], color=YELLOW, stroke: int = 2) -> np.ndarray:
    """Draw ``(x, y, w, h)`` boxes on a copy of ``rgb``; returns uint8 RGB."""
    im = Image.fromarray(to_uint8(as_rgb(rgb)))
    draw = ImageDraw.Draw(im)
    for x, y, w, h in boxes:
        draw.rectangle([x, y, x + w - 1, y + h - 1], outline=tuple(color), width=stroke)
    return np.asarray(im)
