"""End-to-end detection, training, evaluation and benchmarking."""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from . import edgemap, features, imgproc, regions, svm
from .config import PipelineConfig
from .errors import DataError, InvariantError
from .evaluation import EvalReport, ImageScore, Rect, aggregate, icdar_metrics, parse_ground_truth

log = logging.getLogger(__name__)

STAGES = ("preprocess", "edge", "regions", "features", "classify")
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
BUNDLED_MODEL = Path(__file__).with_name("data") / "model.json"


@dataclass
class DetectionResult:
    image_id: str
    detections: list = field(default_factory=list)      # [(Rect, margin)]
    timings: dict = field(default_factory=dict)          # stage -> ms
    candidates: list = field(default_factory=list)       # regions sent to the classifier
    edge_map: edgemap.EdgeMap | None = None

    @property
    def total_ms(self) -> float:
        return sum(self.timings.values())

    def detections_json(self) -> list[dict]:
        return [{"x": r.x, "y": r.y, "w": r.w, "h": r.h, "margin": m} for r, m in self.detections]


def filter_bank_for(cfg: PipelineConfig):
    f = cfg.features
    return features.filter_bank(f.orientations, f.frequency, f.sigma, f.kernel_size)


def find_candidates(pre: np.ndarray, cfg: PipelineConfig, em: edgemap.EdgeMap | None = None):
    """Edge map -> labelled components -> pruned (and optionally merged) regions."""
    h, w = pre.shape
    if em is None:
        em = edgemap.edge_map(pre, edgemap.NoiseModel(cfg.edges.noise_sigma),
                              cfg.edges.directions, cfg.edges.confidence_window)
    regs = regions.extract_regions(regions.label_components(em.edges))
    regs = regions.prune_geometric(regs, (w, h), cfg.prune)
    regs = regions.prune_overlap(regs, cfg.prune)
    if cfg.merge.enabled:
        regs = regions.merge_regions_mst(regs, cfg.merge.link_distance_factor)
        regs = regions.prune_overlap(regs, cfg.prune)
    return regs


def detect_array(gray: np.ndarray, cfg: PipelineConfig, model: svm.SvmModel | None,
                 image_id: str = "image", keep_edges: bool = False) -> DetectionResult:
    """Run the full pipeline on a grayscale array.

    With ``model=None`` every surviving candidate is reported with margin 0.
    """
    gray = imgproc.as_gray(gray)
    res = DetectionResult(image_id)
    t = time.perf_counter()

    def lap(stage):
        nonlocal t
        now = time.perf_counter()
        res.timings[stage] = (now - t) * 1000.0
        t = now

    p = cfg.preprocess
    pre = imgproc.preprocess(gray, p.sharpen_alpha, p.clahe_tiles, p.clahe_clip, p.sharpen, p.clahe)
    lap("preprocess")
    em = edgemap.edge_map(pre, edgemap.NoiseModel(cfg.edges.noise_sigma),
                          cfg.edges.directions, cfg.edges.confidence_window)
    lap("edge")
    cands = find_candidates(pre, cfg, em)
    lap("regions")
    bank = filter_bank_for(cfg)
    feats = np.array([features.extract_features(gray, r, bank) for r in cands]).reshape(len(cands), features.FEATURE_LEN)
    lap("features")
    if model is None:
        preds = [svm.Prediction(1, 0.0) for _ in cands]
    else:
        preds = svm.predict_many(model, feats)
    lap("classify")

    if any(not np.isfinite(pr.margin) for pr in preds) or min(res.timings.values()) < 0:
        raise InvariantError(f"{image_id}: non-finite margin or negative stage time")
    res.candidates = cands
    res.detections = [(Rect(*r.as_xywh()), pr.margin) for r, pr in zip(cands, preds)
                      if model is None or pr.margin > 0]
    if keep_edges:
        res.edge_map = em
    return res


def detect(path, cfg: PipelineConfig, model: svm.SvmModel | None, keep_edges: bool = False) -> DetectionResult:
    path = Path(path)
    return detect_array(imgproc.load_gray(path), cfg, model, path.stem, keep_edges)


def resolve_model(cfg: PipelineConfig, override=None) -> svm.SvmModel:
    path = override or cfg.model_path or BUNDLED_MODEL
    return svm.load_model(path)


# --- training ---------------------------------------------------------------

def _crop_paths(directory: Path) -> list[Path]:
    if not directory.is_dir():
        return []
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


def crop_features(path: Path, bank) -> np.ndarray:
    gray = imgproc.load_gray(path)
    h, w = gray.shape
    return features.extract_features(gray, (0, 0, w - 1, h - 1), bank)


def _map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def train_from_corpus(corpus_dir, cfg: PipelineConfig, trained_at: str | None = None) -> svm.SvmModel:
    """Fit PCA and an RBF-SVM on ``text/`` and ``nontext/`` crops."""
    corpus_dir = Path(corpus_dir)
    pos = _crop_paths(corpus_dir / "text")
    neg = _crop_paths(corpus_dir / "nontext")
    if not pos or not neg:
        raise DataError(f"{corpus_dir}: both text/ and nontext/ must contain image crops "
                        f"(found {len(pos)} text, {len(neg)} nontext)")
    bank = filter_bank_for(cfg)
    raw = np.array(_map(partial(crop_features, bank=bank), pos + neg, cfg.workers))
    y = np.concatenate([np.ones(len(pos)), -np.ones(len(neg))])

    pca = features.pca_fit(raw, cfg.features.components)
    log.info("PCA: %d components explain %.1f%% of variance",
             cfg.features.components, 100.0 * pca.explained_ratio.sum())
    z = features.pca_project(pca, raw)
    s = cfg.svm
    folds = min(s.folds, len(pos), len(neg))
    unit = 1.0 / float(pca.explained_variance.sum())
    cv = svm.cross_validate(z, y, folds, s.seed, s.c_grid, class_weight=s.class_weight, gamma_unit=unit)
    log.info("cross-validation: gamma=10^%.1f c=%g accuracy=%.3f", cv.s, cv.c, cv.accuracy)
    model = svm.train(z, y, cv.gamma, cv.c, class_weight=s.class_weight)
    train_acc = float(np.mean(np.where(svm.decision_function(model, z) > 0, 1.0, -1.0) == y))
    return svm.with_pca(
        model, pca,
        trained_at=trained_at,
        sample_counts={"text": len(pos), "nontext": len(neg)},
        cv_accuracy=cv.accuracy,
        cv_exponent=cv.s,
        train_accuracy=train_acc,
        explained_variance_ratio=float(pca.explained_ratio.sum()),
    )


# --- evaluation -------------------------------------------------------------

def dataset_pairs(dataset_dir) -> list[tuple[Path, Path]]:
    """(image, ground-truth) pairs; ground truth for ``x.png`` is ``gt_x.txt``."""
    dataset_dir = Path(dataset_dir)
    if not dataset_dir.is_dir():
        raise DataError(f"{dataset_dir} is not a directory")
    images = sorted(p for p in dataset_dir.iterdir()
                    if p.suffix.lower() in IMAGE_SUFFIXES and not p.name.startswith("gt_"))
    if not images:
        raise DataError(f"{dataset_dir}: no images found")
    missing = [p.name for p in images if not (dataset_dir / f"gt_{p.stem}.txt").is_file()]
    if missing:
        raise DataError(f"missing ground-truth files for: {', '.join(missing)}")
    return [(p, dataset_dir / f"gt_{p.stem}.txt") for p in images]


def _score_one(pair, cfg: PipelineConfig, model, oracle: bool) -> tuple[ImageScore, list]:
    img_path, gt_path = pair
    gt = parse_ground_truth(gt_path)
    if oracle:
        det = [(r, 1.0) for r in gt]
    else:
        det = detect(img_path, cfg, model).detections
    p, r = icdar_metrics(gt, [d for d, _ in det], cfg.evaluation.match_scale)
    return ImageScore(img_path.stem, p, r, len(gt), len(det)), det


def evaluate_dataset(dataset_dir, cfg: PipelineConfig, model: svm.SvmModel | None,
                     oracle: bool = False) -> tuple[EvalReport, dict]:
    """Score every image; returns the report and ``{image_id: detections}``."""
    pairs = dataset_pairs(dataset_dir)
    results = _map(partial(_score_one, cfg=cfg, model=model, oracle=oracle), pairs, cfg.workers)
    report = aggregate(score for score, _ in results)
    dets = {score.image_id: det for score, det in results}
    return report, dets


# --- benchmark --------------------------------------------------------------

BENCH_HEADER = "pixels,total_ms,preprocess_ms,edge_ms,regions_ms,features_ms,classify_ms"


def rescale(gray: np.ndarray, factor: float) -> np.ndarray:
    h, w = gray.shape
    size = (max(1, round(w * factor)), max(1, round(h * factor)))
    im = Image.fromarray(imgproc.to_uint8(gray))
    return np.asarray(im.resize(size, Image.Resampling.BICUBIC), dtype=np.float64) / 255.0


def bench(images: Sequence[np.ndarray], cfg: PipelineConfig, model, repeats: int = 3) -> list[dict]:
    """Median per-stage timings for each image, ordered by pixel count."""
    if len(images) < 4:
        raise ValueError("benchmark needs at least 4 resolution grades")
    rows = []
    for gray in sorted(images, key=lambda g: g.size):
        runs = [detect_array(gray, cfg, model).timings for _ in range(repeats)]
        totals = [sum(r.values()) for r in runs]
        med = runs[totals.index(sorted(totals)[(len(totals) - 1) // 2])]
        row = {"pixels": int(gray.size), "total_ms": sum(med.values())}
        row.update({f"{s}_ms": med[s] for s in STAGES})
        rows.append(row)
    return rows


def bench_csv(rows: list[dict]) -> str:
    cols = BENCH_HEADER.split(",")
    lines = [BENCH_HEADER]
    for r in rows:
        lines.append(",".join(str(r["pixels"]) if c == "pixels" else f"{r[c]:.3f}" for c in cols))
    return "\n".join(lines) + "\n"


def loglog_slope(rows: list[dict]) -> float:
    x = np.log([r["pixels"] for r in rows])
    y = np.log([r["total_ms"] for r in rows])
    return float(np.polyfit(x, y, 1)[0])
