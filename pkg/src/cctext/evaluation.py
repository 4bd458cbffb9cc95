"""Rectangle-matching detection metrics (ICDAR / Wolf-Jolion style)."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DataError

# Perfect overlap scores 2 * A / (A + A) = 1; set to 1.0 for the unscaled ratio.
MATCH_SCALE = 2.0


@dataclass(frozen=True)
class Rect:
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError(f"rectangle sides must be >= 1, got {self.w}x{self.h}")

    @property
    def area(self) -> int:
        return self.w * self.h

    @classmethod
    def from_corners(cls, x1: int, y1: int, x2: int, y2: int) -> "Rect":
        """From inclusive corner coordinates."""
        return cls(x1, y1, x2 - x1 + 1, y2 - y1 + 1)

    def translated(self, dx: int, dy: int) -> "Rect":
        return Rect(self.x + dx, self.y + dy, self.w, self.h)


def intersection_area(a: Rect, b: Rect) -> int:
    w = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    h = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    return max(w, 0) * max(h, 0)


def area_recall(g: Rect, d: Rect) -> float:
    return intersection_area(g, d) / g.area


def area_precision(g: Rect, d: Rect) -> float:
    return intersection_area(g, d) / d.area


def _best_match_exact(r: Rect, candidates: Iterable[Rect], scale: Fraction) -> Fraction:
    best = Fraction(0)
    for c in candidates:
        best = max(best, scale * intersection_area(r, c) / (r.area + c.area))
    return best


def best_match(r: Rect, candidates: Iterable[Rect], scale: float = MATCH_SCALE) -> float:
    """Best scaled overlap ratio of ``r`` against ``candidates`` (0 if none)."""
    return float(_best_match_exact(r, candidates, Fraction(scale)))


def icdar_metrics(gt: Sequence[Rect], det: Sequence[Rect], scale: float = MATCH_SCALE) -> tuple[float, float]:
    """``(precision, recall)`` for one image.

    Sums are taken in exact rational arithmetic and rounded once.
    """
    if not det:
        return 1.0, (1.0 if not gt else 0.0)
    if not gt:
        return 0.0, 1.0
    k = Fraction(scale)
    precision = sum(_best_match_exact(d, gt, k) for d in det) / len(det)
    recall = sum(_best_match_exact(g, det, k) for g in gt) / len(gt)
    return float(precision), float(recall)


@dataclass
class ImageScore:
    image_id: str
    precision: float
    recall: float
    n_gt: int
    n_det: int


@dataclass
class EvalReport:
    precision: float
    recall: float
    per_image: list[ImageScore] = field(default_factory=list)

    def to_json(self) -> str:
        doc = {
            "precision": self.precision,
            "recall": self.recall,
            "per_image": [vars(s) for s in self.per_image],
        }
        return json.dumps(doc, indent=2) + "\n"

    def to_table(self) -> str:
        name_w = max([len("image")] + [len(s.image_id) for s in self.per_image])
        lines = [f"{'image':<{name_w}}  {'precision':>9}  {'recall':>9}  {'|G|':>4}  {'|D|':>4}"]
        for s in self.per_image:
            lines.append(f"{s.image_id:<{name_w}}  {s.precision:>9.4f}  {s.recall:>9.4f}  {s.n_gt:>4d}  {s.n_det:>4d}")
        lines.append(f"{'MEAN':<{name_w}}  {self.precision:>9.4f}  {self.recall:>9.4f}")
        return "\n".join(lines) + "\n"


def aggregate(scores: Iterable[ImageScore]) -> EvalReport:
    """Unweighted mean over images that have any ground truth or detection."""
    scores = sorted(scores, key=lambda s: s.image_id)
    counted = [s for s in scores if s.n_gt > 0 or s.n_det > 0]
    if counted:
        p = sum(s.precision for s in counted) / len(counted)
        r = sum(s.recall for s in counted) / len(counted)
    else:
        p = r = 1.0
    return EvalReport(p, r, scores)


def evaluate_lists(pairs: dict[str, tuple[Sequence[Rect], Sequence[Rect]]], scale: float = MATCH_SCALE) -> EvalReport:
    """Evaluate ``{image_id: (gt, det)}``."""
    scores = []
    for image_id, (gt, det) in pairs.items():
        p, r = icdar_metrics(gt, det, scale)
        scores.append(ImageScore(image_id, p, r, len(gt), len(det)))
    return aggregate(scores)


def parse_ground_truth(path) -> list[Rect]:
    """Read ``x1,y1,x2,y2[,transcript]`` lines with inclusive corners."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8-sig")
    except OSError as exc:
        raise DataError(f"cannot read ground truth {path}: {exc}") from exc
    rects = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",", 4)
        try:
            x1, y1, x2, y2 = (int(p.strip()) for p in parts[:4])
        except ValueError:
            raise DataError(f"{path}:{lineno}: expected 'x1,y1,x2,y2[,text]', got {raw!r}") from None
        if x2 < x1 or y2 < y1:
            raise DataError(f"{path}:{lineno}: inverted corners in {raw!r}")
        rects.append(Rect.from_corners(x1, y1, x2, y2))
    return rects


def format_ground_truth(rects: Iterable[Rect], texts: Iterable[str] | None = None) -> str:
    rects = list(rects)
    texts = list(texts) if texts is not None else [None] * len(rects)
    lines = []
    for r, t in zip(rects, texts):
        row = f"{r.x},{r.y},{r.x + r.w - 1},{r.y + r.h - 1}"
        lines.append(row if t is None else f"{row},{t}")
    return "\n".join(lines) + ("\n" if lines else "")
