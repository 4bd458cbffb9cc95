"""Connected components of the edge map, their statistics, and pruning."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from . import _kernels


@dataclass(frozen=True)
class Region:
    label: int
    bbox: tuple[int, int, int, int]   # x_min, y_min, x_max, y_max (inclusive)
    area: int
    euler: int
    centroid: tuple[float, float]     # x, y

    @property
    def width(self) -> int:
        return self.bbox[2] - self.bbox[0] + 1

    @property
    def height(self) -> int:
        return self.bbox[3] - self.bbox[1] + 1

    @property
    def box_area(self) -> int:
        return self.width * self.height

    def as_xywh(self) -> tuple[int, int, int, int]:
        return self.bbox[0], self.bbox[1], self.width, self.height

    def to_json(self) -> dict:
        x, y, w, h = self.as_xywh()
        return {"x": x, "y": y, "w": w, "h": h, "area": self.area, "euler": self.euler}


@dataclass(frozen=True)
class PruneConfig:
    min_area_fraction: float = 0.0002
    min_side: int = 4
    max_aspect: float = 15.0
    min_euler: int = -4
    overlap_containment: float = 0.8

    def __post_init__(self):
        if self.min_area_fraction < 0 or self.min_side < 1 or self.max_aspect < 1:
            raise ValueError("prune thresholds out of range")
        if not 0 < self.overlap_containment <= 1:
            raise ValueError("overlap_containment must lie in (0, 1]")


def label_components(edges) -> np.ndarray:
    """Label 4-connected foreground components, numbered in raster-scan order."""
    edges = np.asarray(edges, dtype=bool)
    if edges.ndim != 2:
        raise ValueError("edge map must be 2-D")
    labels, _ = _kernels.label_bfs(edges)
    return labels


def euler_number(mask) -> int:
    """Euler number (components - holes) of a mask under 4-connectivity.

    Counted from 2x2 quads of the zero-padded mask:
    ``(Q1 - Q3 + 2 * QD) / 4`` where Q1/Q3 are quads with one/three set pixels
    and QD the two diagonal patterns.
    """
    m = np.pad(np.asarray(mask, dtype=bool), 1).astype(np.int8)
    a, b = m[:-1, :-1], m[:-1, 1:]
    c, d = m[1:, :-1], m[1:, 1:]
    s = a + b + c + d
    q1 = np.count_nonzero(s == 1)
    q3 = np.count_nonzero(s == 3)
    qd = np.count_nonzero((s == 2) & (a == d))
    return int((q1 - q3 + 2 * qd) // 4)


def extract_regions(labels) -> list[Region]:
    labels = np.asarray(labels)
    out = []
    for lab, sl in enumerate(ndimage.find_objects(labels), start=1):
        if sl is None:
            continue
        sub = labels[sl] == lab
        ys, xs = np.nonzero(sub)
        y0, x0 = sl[0].start, sl[1].start
        out.append(Region(
            label=lab,
            bbox=(x0, y0, sl[1].stop - 1, sl[0].stop - 1),
            area=int(ys.size),
            euler=euler_number(sub),
            centroid=(float(xs.mean() + x0), float(ys.mean() + y0)),
        ))
    return out


def prune_geometric(regions: Iterable[Region], image_dims: tuple[int, int], cfg: PruneConfig = PruneConfig()) -> list[Region]:
    """Keep regions passing the area, side, aspect and Euler constraints.

    ``image_dims`` is ``(width, height)``.
    """
    min_area = cfg.min_area_fraction * image_dims[0] * image_dims[1]
    kept = []
    for r in regions:
        w, h = r.width, r.height
        if (r.area >= min_area and min(w, h) >= cfg.min_side
                and max(w, h) / min(w, h) <= cfg.max_aspect and r.euler >= cfg.min_euler):
            kept.append(r)
    return kept


def box_intersection(a: Sequence[int], b: Sequence[int]) -> int:
    """Overlap in pixels of two inclusive ``(x0, y0, x1, y1)`` boxes."""
    w = min(a[2], b[2]) - max(a[0], b[0]) + 1
    h = min(a[3], b[3]) - max(a[1], b[1]) + 1
    return max(w, 0) * max(h, 0)


def prune_overlap(regions: Iterable[Region], cfg: PruneConfig = PruneConfig()) -> list[Region]:
    """Drop the smaller box of every pair that overlaps by the containment ratio."""
    order = sorted(regions, key=lambda r: (-r.box_area, r.label))
    kept: list[Region] = []
    for r in order:
        if all(box_intersection(r.bbox, k.bbox) < cfg.overlap_containment * min(r.box_area, k.box_area)
               for k in kept):
            kept.append(r)
    return sorted(kept, key=lambda r: r.label)


def _mst_edges(points: np.ndarray) -> list[tuple[int, int, float]]:
    """Prim's algorithm on the complete Euclidean graph; ties go to lower indices."""
    n = len(points)
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    dist = np.hypot(*(points - points[0]).T)
    parent = np.zeros(n, dtype=np.intp)
    edges = []
    for _ in range(n - 1):
        cand = np.where(in_tree, np.inf, dist)
        v = int(np.argmin(cand))
        edges.append((int(parent[v]), v, float(cand[v])))
        in_tree[v] = True
        d = np.hypot(*(points - points[v]).T)
        closer = ~in_tree & (d < dist)
        dist[closer] = d[closer]
        parent[closer] = v
    return edges


def merge_regions_mst(regions: Sequence[Region], link_distance_factor: float = 1.5) -> list[Region]:
    """Group regions along a centroid spanning tree, cutting long links.

    A tree edge survives when its length is at most ``link_distance_factor``
    times the mean box height of its two endpoints. Each surviving group
    becomes one region spanning the union of its members.
    """
    regions = list(regions)
    if len(regions) <= 1:
        return regions
    pts = np.array([r.centroid for r in regions], dtype=np.float64)
    parent = list(range(len(regions)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for u, v, length in _mst_edges(pts):
        limit = link_distance_factor * (regions[u].height + regions[v].height) / 2.0
        if length <= limit:
            ru, rv = find(u), find(v)
            parent[max(ru, rv)] = min(ru, rv)

    groups: dict[int, list[Region]] = {}
    for i, r in enumerate(regions):
        groups.setdefault(find(i), []).append(r)
    merged = []
    for members in groups.values():
        if len(members) == 1:
            merged.append(members[0])
            continue
        area = sum(m.area for m in members)
        merged.append(Region(
            label=min(m.label for m in members),
            bbox=(min(m.bbox[0] for m in members), min(m.bbox[1] for m in members),
                  max(m.bbox[2] for m in members), max(m.bbox[3] for m in members)),
            area=area,
            euler=sum(m.euler for m in members),
            centroid=(sum(m.centroid[0] * m.area for m in members) / area,
                      sum(m.centroid[1] * m.area for m in members) / area),
        ))
    return sorted(merged, key=lambda r: r.label)


def regions_to_json(regions: Iterable[Region]) -> str:
    return json.dumps([r.to_json() for r in regions])
