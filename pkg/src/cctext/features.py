"""Gabor texture features for candidate regions and their PCA reduction."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .regions import Region

PATCH = 20
N_ORIENTATIONS = 4
FREQUENCY = 0.25
SIGMA = 1.0
KERNEL_SIZE = 3
N_COMPONENTS = 20
FEATURE_LEN = N_ORIENTATIONS * PATCH * PATCH


@dataclass(frozen=True)
class GaborKernel:
    size: int
    sigma_x: float
    sigma_y: float
    u: float
    v: float
    values: np.ndarray   # complex, (size, size); axis 0 is y


def gabor_response(sigma_x: float, sigma_y: float, u: float, v: float, size: int = KERNEL_SIZE) -> np.ndarray:
    """Raw complex Gabor samples on the centred integer grid, before normalization."""
    if size < 1 or size % 2 == 0:
        raise ValueError("kernel size must be a positive odd integer")
    if sigma_x <= 0 or sigma_y <= 0:
        raise ValueError("envelope widths must be positive")
    r = size // 2
    y, x = np.mgrid[-r:r + 1, -r:r + 1].astype(np.float64)
    envelope = np.exp(-(x ** 2 / sigma_x ** 2 + y ** 2 / sigma_y ** 2))
    return envelope * np.exp(-2j * np.pi * (u * x + v * y))


def gabor_kernel(sigma_x: float, sigma_y: float, u: float, v: float, size: int = KERNEL_SIZE) -> GaborKernel:
    """Gabor kernel with the DC term of its real part removed, L2-normalized."""
    h = gabor_response(sigma_x, sigma_y, u, v, size)
    h = h - h.real.mean()
    # the imaginary part is odd on a symmetric grid; zero its rounding residue
    h = h - 1j * h.imag.mean()
    norm = np.sqrt(np.sum(np.abs(h) ** 2))
    if norm == 0:
        raise ValueError("degenerate Gabor kernel (all coefficients vanish)")
    return GaborKernel(size, sigma_x, sigma_y, u, v, h / norm)


def _unit(angle_deg: float) -> tuple[float, float]:
    t = np.deg2rad(angle_deg)
    return round(np.cos(t), 12) + 0.0, round(np.sin(t), 12) + 0.0


def filter_bank(orientations: int = N_ORIENTATIONS, frequency: float = FREQUENCY,
                sigma: float = SIGMA, size: int = KERNEL_SIZE) -> list[GaborKernel]:
    """Kernels with modulation directions evenly spaced over [0, 180) degrees."""
    bank = []
    for k in range(orientations):
        c, s = _unit(180.0 * k / orientations)
        bank.append(gabor_kernel(sigma, sigma, frequency * c, frequency * s, size))
    return bank


def filter_magnitude(patch: np.ndarray, kernel: GaborKernel) -> np.ndarray:
    re = ndimage.correlate(patch, kernel.values.real, mode="nearest")
    im = ndimage.correlate(patch, kernel.values.imag, mode="nearest")
    return np.hypot(re, im)


def resample(arr: np.ndarray, size: int = PATCH) -> np.ndarray:
    """Bilinear resampling with corner alignment; identity when shapes match."""
    h, w = arr.shape
    ys = np.linspace(0.0, h - 1, size)
    xs = np.linspace(0.0, w - 1, size)
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    return ndimage.map_coordinates(arr, [yy, xx], order=1, mode="nearest")


def standardize(vec: np.ndarray, eps: float = 1e-9) -> np.ndarray:
    sd = vec.std()
    if sd <= eps:
        return np.zeros_like(vec)
    return (vec - vec.mean()) / sd


def extract_features(img, region: Region | Sequence[int], bank: Sequence[GaborKernel]) -> np.ndarray:
    """Feature vector for a candidate box: orientation-major, row-major blocks.

    ``region`` is a ``Region`` or an inclusive ``(x0, y0, x1, y1)`` box.
    """
    bbox = region.bbox if isinstance(region, Region) else tuple(region)
    x0, y0, x1, y1 = (int(v) for v in bbox)
    arr = np.asarray(img, dtype=np.float64)
    if x1 < x0 or y1 < y0:
        raise ValueError(f"degenerate bounding box {bbox}")
    if x0 < 0 or y0 < 0 or y1 >= arr.shape[0] or x1 >= arr.shape[1]:
        raise ValueError(f"bounding box {bbox} outside image of shape {arr.shape}")
    patch = arr[y0:y1 + 1, x0:x1 + 1]
    blocks = [resample(filter_magnitude(patch, k)).ravel() for k in bank]
    return standardize(np.concatenate(blocks))


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    basis: np.ndarray                 # (k, d), rows orthonormal
    explained_variance: np.ndarray    # (k,), non-increasing
    total_variance: float = float("nan")

    @property
    def explained_ratio(self) -> np.ndarray:
        return self.explained_variance / self.total_variance

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "basis": self.basis.tolist(),
                "explained_variance": self.explained_variance.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "PcaModel":
        mean = np.asarray(d["mean"], dtype=np.float64)
        basis = np.asarray(d["basis"], dtype=np.float64)
        ev = np.asarray(d["explained_variance"], dtype=np.float64)
        if basis.ndim != 2 or basis.shape[1] != mean.size or ev.shape != (basis.shape[0],):
            raise ValueError("inconsistent PCA array shapes")
        return cls(mean, basis, ev)


def pca_fit(samples, k: int = N_COMPONENTS) -> PcaModel:
    """Principal components of ``samples`` (rows are observations)."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("samples must be a 2-D matrix")
    n = x.shape[0]
    if n <= k:
        raise ValueError(f"need more than {k} samples to fit {k} components, got {n}")
    mean = x.mean(axis=0)
    xc = x - mean
    if not np.any(xc):
        raise ValueError("samples have zero variance")
    # right singular vectors of the centred data = covariance eigenvectors
    _, sv, vt = np.linalg.svd(xc, full_matrices=False)
    basis = vt[:k].copy()
    for row in basis:
        nz = np.flatnonzero(np.abs(row) > 1e-12)
        if nz.size and row[nz[0]] < 0:
            row *= -1.0
    var = sv ** 2 / (n - 1)
    return PcaModel(mean, basis, var[:k].copy(), float(var.sum()))


def pca_project(model: PcaModel, v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != model.mean.size:
        raise ValueError(f"expected vectors of length {model.mean.size}, got {v.shape[-1]}")
    return (v - model.mean) @ model.basis.T


def pca_reconstruct(model: PcaModel, coords) -> np.ndarray:
    return model.mean + np.asarray(coords) @ model.basis
