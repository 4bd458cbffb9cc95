"""Probabilistic edge map: zero-crossing probability x noise confidence.

The image is modelled as a true signal plus i.i.d. Gaussian noise of standard
deviation ``NoiseModel.sigma``. For every direction the second directional
derivative is tested for a sign change between a pixel and its neighbour one
step along that direction, with the sign consistency of the third derivative
used to suppress phantom edges (gradient minima). A separate chi-square test
on the local residual says whether there is any structure above the noise
floor. The two maps are combined per pixel by ``binarize``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage, signal, special

N_DIRECTIONS = 12
CONFIDENCE_WINDOW = 3
DEFAULT_SIGMA = 1.0
SIGN_DEADZONE = 1e-9   # in units of the third-derivative noise sigma

_SMOOTH = np.array([1.0, 2.0, 1.0]) / 4.0
_D1 = np.array([-1.0, 0.0, 1.0]) / 2.0
_D2 = np.array([1.0, -2.0, 1.0])

# Sobel-derived 3x3 kernels for correlation; axis 0 is y (rows), axis 1 is x.
KX = np.outer(_SMOOTH, _D1)
KY = KX.T.copy()
KXX = np.outer(_SMOOTH, _D2)
KYY = KXX.T.copy()
KXY = np.outer(_D1, _D1)


@dataclass(frozen=True)
class NoiseModel:
    sigma: float = DEFAULT_SIGMA

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("noise sigma must be positive")


@dataclass(frozen=True)
class DirectionalResponse:
    """Directional derivative maps for one direction.

    ``sigma2``/``sigma3`` are the noise standard deviations of the second and
    third derivative responses under ``noise_sigma``.
    """
    theta: float
    first_deriv: np.ndarray
    second_deriv: np.ndarray
    third_deriv: np.ndarray
    sigma2: float
    sigma3: float
    noise_sigma: float = DEFAULT_SIGMA


@dataclass(frozen=True)
class EdgeMap:
    p_zc: np.ndarray
    confidence: np.ndarray
    edges: np.ndarray


def direction_vector(theta: float) -> tuple[float, float]:
    """(cos, sin) snapped so that symmetric directions are exact negatives."""
    return round(np.cos(theta), 12) + 0.0, round(np.sin(theta), 12) + 0.0


def directions(n: int = N_DIRECTIONS) -> list[float]:
    return [2.0 * np.pi * k / n for k in range(n)]


def steered_kernels(theta: float):
    """Effective (first, second, third) derivative kernels along ``theta``."""
    c, s = direction_vector(theta)
    k1 = c * KX + s * KY
    k2 = c * c * KXX + 2.0 * c * s * KXY + s * s * KYY
    # correlating twice equals correlating once with the full convolution
    k3 = signal.convolve2d(k1, k2, mode="full")
    return k1, k2, k3


def _basis(img: np.ndarray) -> dict:
    corr = lambda a, k: ndimage.correlate(a, k, mode="nearest")
    b = {"x": corr(img, KX), "y": corr(img, KY),
         "xx": corr(img, KXX), "xy": corr(img, KXY), "yy": corr(img, KYY)}
    for second in ("xx", "xy", "yy"):
        b["x" + second] = corr(b[second], KX)
        b["y" + second] = corr(b[second], KY)
    return b


def _steer(basis: dict, theta: float, noise_sigma: float) -> DirectionalResponse:
    c, s = direction_vector(theta)
    first = c * basis["x"] + s * basis["y"]
    w = {"xx": c * c, "xy": 2.0 * c * s, "yy": s * s}
    second = w["xx"] * basis["xx"] + w["xy"] * basis["xy"] + w["yy"] * basis["yy"]
    third = (c * (w["xx"] * basis["xxx"] + w["xy"] * basis["xxy"] + w["yy"] * basis["xyy"])
             + s * (w["xx"] * basis["yxx"] + w["xy"] * basis["yxy"] + w["yy"] * basis["yyy"]))
    _, k2, k3 = steered_kernels(theta)
    return DirectionalResponse(
        theta=theta,
        first_deriv=first,
        second_deriv=second,
        third_deriv=third,
        sigma2=float(np.sqrt(np.sum(k2 ** 2))) * noise_sigma,
        sigma3=float(np.sqrt(np.sum(k3 ** 2))) * noise_sigma,
        noise_sigma=noise_sigma,
    )


def directional_derivatives(img, theta: float, noise: NoiseModel | None = None) -> DirectionalResponse:
    noise = noise or NoiseModel()
    return _steer(_basis(np.asarray(img, dtype=np.float64)), theta, noise.sigma)


def straddle_probability(x1, x2, sigma2: float):
    """Probability that two noisy samples of a signal lie on opposite sides of zero."""
    a = np.asarray(x1, dtype=np.float64) / sigma2
    b = np.asarray(x2, dtype=np.float64) / sigma2
    return special.ndtr(a) * special.ndtr(-b) + special.ndtr(-a) * special.ndtr(b)


def phantom_gate(first, third, sigma3: float):
    """Probability that the third derivative has the sign of a gradient maximum.

    Gradients within rounding distance of zero count as zero, so flat regions
    gate at 0.5 regardless of floating-point residue.
    """
    first = np.asarray(first, dtype=np.float64)
    sign = np.where(np.abs(first) > SIGN_DEADZONE * sigma3, np.sign(first), 0.0)
    return special.ndtr(-sign * np.asarray(third) / sigma3)


def forward_sample(field: np.ndarray, theta: float) -> np.ndarray:
    """``field`` bilinearly sampled one pixel along ``theta`` (replicate border)."""
    c, s = direction_vector(theta)
    h, w = field.shape
    if c == int(c) and s == int(s):
        rows = np.clip(np.arange(h) + int(s), 0, h - 1)
        cols = np.clip(np.arange(w) + int(c), 0, w - 1)
        return field[np.ix_(rows, cols)]
    rr, cc = np.mgrid[0:h, 0:w].astype(np.float64)
    return ndimage.map_coordinates(field, [rr + s, cc + c], order=1, mode="nearest")


def zero_crossing_probability(resp: DirectionalResponse, noise: NoiseModel | None = None) -> np.ndarray:
    sigma2, sigma3 = resp.sigma2, resp.sigma3
    if noise is not None:
        scale = noise.sigma / resp.noise_sigma
        sigma2, sigma3 = sigma2 * scale, sigma3 * scale
    x1 = resp.second_deriv
    x2 = forward_sample(resp.second_deriv, resp.theta)
    p = straddle_probability(x1, x2, sigma2)
    return np.clip(p * phantom_gate(resp.first_deriv, resp.third_deriv, sigma3), 0.0, 1.0)


def combine_directions(maps: Sequence[np.ndarray]) -> np.ndarray:
    maps = [np.asarray(m, dtype=np.float64) for m in maps]
    if not maps:
        raise ValueError("need at least one direction map")
    shape = maps[0].shape
    if any(m.shape != shape for m in maps):
        raise ValueError("direction maps differ in shape")
    return np.max(np.stack(maps), axis=0)


def confidence_map(img, window: int = CONFIDENCE_WINDOW, noise: NoiseModel | None = None) -> np.ndarray:
    """Chi-square confidence that a window holds structure beyond sensor noise.

    The statistic is the window's sum of squared deviations from its own mean,
    in units of the noise variance: chi-square with ``window**2 - 1`` degrees
    of freedom on a flat noisy patch. Confidence is its CDF value.
    """
    if window < 3 or window % 2 == 0:
        raise ValueError("confidence window must be odd and >= 3")
    noise = noise or NoiseModel()
    arr = np.asarray(img, dtype=np.float64)
    r = window // 2
    padded = np.pad(arr, r, mode="edge")
    h, w = arr.shape
    shifts = np.stack([padded[dy:dy + h, dx:dx + w] for dy in range(window) for dx in range(window)])
    resid = shifts - shifts.mean(axis=0)
    stat = np.sum(resid * resid, axis=0) / (noise.sigma * noise.sigma)
    return special.gammainc((window * window - 1) / 2.0, stat / 2.0)


def neighbour_density(p_zc: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Fraction of each pixel's available 8-neighbours with ``p_zc > threshold``."""
    above = np.pad((np.asarray(p_zc) > threshold).astype(np.float64), 1)
    avail = np.pad(np.ones(np.shape(p_zc)), 1)
    h, w = np.shape(p_zc)
    count = np.zeros((h, w))
    total = np.zeros((h, w))
    for dy in (0, 1, 2):
        for dx in (0, 1, 2):
            if dy == 1 and dx == 1:
                continue
            count += above[dy:dy + h, dx:dx + w]
            total += avail[dy:dy + h, dx:dx + w]
    return np.divide(count, total, out=np.zeros((h, w)), where=total > 0)


def binarize(p_zc, confidence) -> np.ndarray:
    p_zc = np.asarray(p_zc, dtype=np.float64)
    confidence = np.asarray(confidence, dtype=np.float64)
    if p_zc.shape != confidence.shape:
        raise ValueError("p_zc and confidence maps differ in shape")
    return (confidence + neighbour_density(p_zc)) / 2.0 > 0.5


def edge_map(img, noise: NoiseModel | None = None, n_directions: int = N_DIRECTIONS,
             window: int = CONFIDENCE_WINDOW) -> EdgeMap:
    noise = noise or NoiseModel()
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError("edge_map expects a non-empty 2-D image")
    basis = _basis(arr)
    maps = [zero_crossing_probability(_steer(basis, th, noise.sigma)) for th in directions(n_directions)]
    p_zc = combine_directions(maps)
    conf = confidence_map(arr, window, noise)
    return EdgeMap(p_zc=p_zc, confidence=conf, edges=binarize(p_zc, conf))
