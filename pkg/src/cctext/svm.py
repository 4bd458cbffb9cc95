"""Binary RBF-kernel SVM: SMO training, prediction, cross-validation, model files."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels
from ._purepy import BOUND_EPS
from .errors import ModelFormatError
from .features import PcaModel, pca_project

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
KKT_TOL = 1e-3
MAX_ITER = 1_000_000
SV_EPS = 1e-8
C_GRID = (1.0, 10.0)
DEFAULT_SEED = 42


def s_grid() -> list[float]:
    """Bandwidth exponents -1.0, -0.9, ..., 1.0 (gamma = 10**s)."""
    return [round(-1.0 + 0.1 * i, 1) for i in range(21)]


@dataclass(frozen=True)
class SvmModel:
    support_vectors: np.ndarray   # (m, d)
    dual_coefs: np.ndarray        # (m,), alpha_i * y_i
    bias: float
    gamma: float
    c: float
    pca: PcaModel | None = None
    metadata: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Prediction:
    label: int
    margin: float


def rbf_kernel(a, b, gamma: float) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"vector shapes differ: {a.shape} vs {b.shape}")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    d = a - b
    return float(np.exp(-gamma * np.dot(d, d)))


def sq_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :] - 2.0 * a @ b.T
    return np.maximum(d, 0.0)


def rbf_matrix(a, b, gamma: float) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    return np.exp(-gamma * sq_distances(a, b))


def _check_training_set(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise ValueError("features must be (n, d) with one label per row")
    if not np.all(np.isfinite(x)):
        raise ValueError("features must be finite")
    if not np.all((y == 1) | (y == -1)):
        raise ValueError("labels must be +1 or -1")
    if np.all(y == 1) or np.all(y == -1):
        raise ValueError("training set must contain both classes")
    return x, y


def box_bounds(y: np.ndarray, c: float, class_weight: bool = True) -> np.ndarray:
    """Per-sample upper bounds; the larger class is scaled down to balance."""
    if not class_weight:
        return np.full(y.size, float(c))
    n_pos = np.count_nonzero(y > 0)
    n_neg = y.size - n_pos
    low = min(n_pos, n_neg)
    return np.where(y > 0, c * low / n_pos, c * low / n_neg)


def solve_dual(K, y, cbox, tol: float = KKT_TOL, max_iter: int = MAX_ITER):
    """Run the SMO kernel; returns ``(alpha, bias, iterations, gap)``."""
    alpha, rho, it, gap = _kernels.smo_solve(K, y, cbox, tol, max_iter)
    if it >= max_iter:
        log.warning("SMO stopped at the iteration limit (gap %.3g)", gap)
    return alpha, -rho, it, gap


def train(x, y, gamma: float, c: float, class_weight: bool = True,
          tol: float = KKT_TOL, max_iter: int = MAX_ITER) -> SvmModel:
    x, y = _check_training_set(x, y)
    if gamma <= 0 or c <= 0:
        raise ValueError("gamma and c must be positive")
    K = rbf_matrix(x, x, gamma)
    alpha, bias, it, gap = solve_dual(K, y, box_bounds(y, c, class_weight), tol, max_iter)
    sv = alpha > SV_EPS
    log.debug("SMO: %d iterations, gap %.2e, %d support vectors", it, gap, sv.sum())
    return SvmModel(support_vectors=x[sv].copy(), dual_coefs=(alpha * y)[sv],
                    bias=float(bias), gamma=float(gamma), c=float(c))


def decision_function(model: SvmModel, z) -> np.ndarray:
    """Margins for already-projected feature rows."""
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    return rbf_matrix(z, model.support_vectors, model.gamma) @ model.dual_coefs + model.bias


def _label(margin: float) -> int:
    return 1 if margin > 0 else -1


def predict(model: SvmModel, raw_features) -> Prediction:
    """Classify one raw feature vector (projected through the embedded PCA)."""
    z = pca_project(model.pca, raw_features) if model.pca is not None else np.asarray(raw_features)
    m = float(decision_function(model, z)[0])
    return Prediction(_label(m), m)


def predict_many(model: SvmModel, raw_features) -> list[Prediction]:
    raw = np.atleast_2d(np.asarray(raw_features, dtype=np.float64))
    if raw.shape[0] == 0:
        return []
    z = pca_project(model.pca, raw) if model.pca is not None else raw
    return [Prediction(_label(m), float(m)) for m in decision_function(model, z)]


def kkt_residuals(K, y, alpha, bias, cbox) -> np.ndarray:
    """Per-sample violation of the soft-margin optimality conditions.

    Bounds are judged with the same ``BOUND_EPS`` slack as the bias estimate:
    the clipped SMO update can leave an alpha one rounding step short of ``c``.
    """
    yf = y * (K @ (alpha * y) + bias)
    res = np.zeros_like(yf)
    lower = alpha <= BOUND_EPS
    upper = alpha >= cbox - BOUND_EPS
    free = ~lower & ~upper
    res[lower] = np.maximum(0.0, 1.0 - yf[lower])
    res[upper] = np.maximum(0.0, yf[upper] - 1.0)
    res[free] = np.abs(yf[free] - 1.0)
    return res


def stratified_folds(y, folds: int, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Fold index per sample, classes spread evenly, shuffled with ``seed``."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    assign = np.empty(y.size, dtype=np.intp)
    offset = 0
    for cls in (1, -1):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(idx.size)]
        assign[idx] = (np.arange(idx.size) + offset) % folds
        offset += idx.size
    return assign


@dataclass(frozen=True)
class CvResult:
    gamma: float
    c: float
    s: float
    accuracy: float
    table: dict   # (s, c) -> mean validation accuracy


def cross_validate(x, y, folds: int = 5, seed: int = DEFAULT_SEED, c_grid: Sequence[float] = C_GRID,
                   exponents: Sequence[float] | None = None, class_weight: bool = True,
                   tol: float = KKT_TOL, gamma_unit: float = 1.0) -> CvResult:
    """Grid search over ``gamma = gamma_unit * 10**s`` and ``c`` by stratified k-fold accuracy.

    ``gamma_unit`` makes ``s`` a bandwidth relative to the data scale; pass
    ``1 / total_variance`` so that ``s = 0`` puts a typical pair at ``exp(-2)``.
    Ties go to the smaller gamma, then the smaller c.
    """
    if gamma_unit <= 0:
        raise ValueError("gamma_unit must be positive")
    x, y = _check_training_set(x, y)
    if folds < 2 or x.shape[0] < folds:
        raise ValueError(f"need at least {folds} samples and 2 folds")
    exponents = s_grid() if exponents is None else list(exponents)
    assign = stratified_folds(y, folds, seed)
    d2 = sq_distances(x, x)
    splits = []
    for f in range(folds):
        tr, va = assign != f, assign == f
        if va.sum() == 0 or len(np.unique(y[tr])) < 2:
            log.info("skipping fold %d: training part has a single class", f)
            continue
        splits.append((np.flatnonzero(tr), np.flatnonzero(va)))
    if not splits:
        raise ValueError("every cross-validation fold was skipped")

    table = {}
    best = None
    for s in sorted(exponents):
        gamma = gamma_unit * 10.0 ** s
        K = np.exp(-gamma * d2)
        for c in sorted(c_grid):
            correct = []
            for tr, va in splits:
                ytr = y[tr]
                alpha, bias, _, _ = solve_dual(K[np.ix_(tr, tr)], ytr, box_bounds(ytr, c, class_weight), tol)
                margin = K[np.ix_(va, tr)] @ (alpha * ytr) + bias
                correct.append(np.mean(np.where(margin > 0, 1.0, -1.0) == y[va]))
            acc = float(np.mean(correct))
            table[(s, c)] = acc
            if best is None or acc > best[0]:
                best = (acc, s, c)
    acc, s, c = best
    return CvResult(gamma=gamma_unit * 10.0 ** s, c=float(c), s=s, accuracy=acc, table=table)


# --- model files --------------------------------------------------------------

def model_to_dict(model: SvmModel) -> dict:
    if model.pca is None:
        raise ValueError("a model file needs the PCA projection")
    return {
        "format_version": FORMAT_VERSION,
        "pca": model.pca.to_dict(),
        "svm": {
            "gamma": model.gamma,
            "c": model.c,
            "bias": model.bias,
            "support_vectors": model.support_vectors.tolist(),
            "dual_coefs": model.dual_coefs.tolist(),
        },
        "metadata": model.metadata,
    }


def save_model(model: SvmModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), sort_keys=True) + "\n")


def model_from_dict(doc: dict) -> SvmModel:
    try:
        version = doc["format_version"]
        if version != FORMAT_VERSION:
            raise ModelFormatError(f"unsupported model format_version {version!r}")
        s = doc["svm"]
        pca = PcaModel.from_dict(doc["pca"])
        sv = np.asarray(s["support_vectors"], dtype=np.float64)
        coefs = np.asarray(s["dual_coefs"], dtype=np.float64)
        model = SvmModel(sv, coefs, float(s["bias"]), float(s["gamma"]), float(s["c"]),
                         pca, dict(doc.get("metadata") or {}))
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model document: {exc}") from exc
    if sv.ndim != 2 or sv.shape[0] < 1 or sv.shape[1] != pca.basis.shape[0] or coefs.shape != (sv.shape[0],):
        raise ModelFormatError("support vector / coefficient shapes are inconsistent")
    if model.gamma <= 0 or model.c <= 0:
        raise ModelFormatError("gamma and c must be positive")
    if np.any(np.abs(coefs) > model.c * (1 + 1e-9)) or abs(coefs.sum()) > 1e-6:
        raise ModelFormatError("dual coefficients violate the box or balance constraint")
    return model


def load_model(path) -> SvmModel:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"cannot read model file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("model file must hold a JSON object")
    return model_from_dict(doc)


def with_pca(model: SvmModel, pca: PcaModel, **metadata) -> SvmModel:
    return replace(model, pca=pca, metadata={**model.metadata, **metadata})
