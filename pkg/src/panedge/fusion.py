"""Fuse semantic edges, a center heatmap and an offset field into panoptic edges."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import CategoryOutOfRange, ShapeMismatch
from .labels import CategoryTaxonomy, canonicalize_instance_ids
from .numerics import ada_softmax

NO_INSTANCE = 0


@dataclass(frozen=True)
class FusionParams:
    taxonomy: CategoryTaxonomy
    center_threshold: float = 0.1
    nms_window: int = 7
    max_instances: int = 200

    def __post_init__(self):
        if not 0.0 < self.center_threshold < 1.0:
            raise ValueError(f"center_threshold must lie in (0, 1), got {self.center_threshold}")
        if self.nms_window < 1 or self.nms_window % 2 == 0:
            raise ValueError(f"nms_window must be a positive odd integer, got {self.nms_window}")
        if not 1 <= self.max_instances < self.taxonomy.stride:
            raise ValueError(
                f"max_instances must lie in 1..{self.taxonomy.stride - 1}, got {self.max_instances}")


class ClusteredCenter(NamedTuple):
    cy: int
    cx: int
    score: float


def extract_centers(heatmap, params: FusionParams) -> list[ClusteredCenter]:
    """Thresholded window maxima, best first, at most ``max_instances`` of them."""
    heatmap = np.asarray(heatmap, dtype=np.float64)
    keep = kernels.nms_peaks(heatmap, params.center_threshold, params.nms_window)
    rows, cols = np.nonzero(keep)
    scores = heatmap[rows, cols]
    # np.nonzero is row-major, so a stable sort keeps (row, col) order among equal scores
    order = np.argsort(-scores, kind="stable")[: params.max_instances]
    return [ClusteredCenter(int(rows[i]), int(cols[i]), float(scores[i])) for i in order]


def _thing_mask(semantic, taxonomy):
    if semantic.size and (semantic.min() < 0 or semantic.max() > taxonomy.num_categories):
        raise CategoryOutOfRange(f"semantic categories must lie in 0..{taxonomy.num_categories}")
    return taxonomy.thing_lookup()[semantic]


def assign_instances(semantic, offsets, centers, params: FusionParams) -> np.ndarray:
    """1-based index of the nearest center to ``pixel + offset`` for each thing pixel.

    Non-thing pixels get ``NO_INSTANCE`` (0). With no centers every thing
    pixel falls back to index 1.
    """
    semantic = np.asarray(semantic, dtype=np.int64)
    offsets = np.asarray(offsets, dtype=np.float64)
    if offsets.shape != (2,) + semantic.shape:
        raise ShapeMismatch(f"offsets {offsets.shape} do not match semantic map {semantic.shape}")
    thing = _thing_mask(semantic, params.taxonomy)
    out = np.zeros(semantic.shape, dtype=np.int64)
    rows, cols = np.nonzero(thing)
    if rows.size == 0:
        return out
    if not centers:
        out[rows, cols] = 1
        return out
    qy = rows + offsets[0, rows, cols]
    qx = cols + offsets[1, rows, cols]
    cy = np.array([c.cy for c in centers], dtype=np.float64)
    cx = np.array([c.cx for c in centers], dtype=np.float64)
    out[rows, cols] = kernels.nearest_center(qy, qx, cy, cx) + 1
    return out


def fuse_panoptic(semantic, heatmap, offsets, params: FusionParams) -> np.ndarray:
    semantic = np.asarray(semantic, dtype=np.int64)
    heatmap = np.asarray(heatmap, dtype=np.float64)
    if semantic.ndim != 2 or heatmap.shape != semantic.shape:
        raise ShapeMismatch(f"heatmap {heatmap.shape} does not match semantic map {semantic.shape}")
    tax = params.taxonomy
    thing = _thing_mask(semantic, tax)
    centers = extract_centers(heatmap, params) if thing.any() else []
    instance = assign_instances(semantic, offsets, centers, params)
    raw = semantic * tax.stride + np.where(thing, instance, 0)
    return canonicalize_instance_ids(raw, tax)


def semantic_from_scores(scores, temperature: float = 1.0) -> np.ndarray:
    """Argmax category map from ``(K+1, H, W)`` logits via the temperature softmax."""
    return np.argmax(ada_softmax(scores, temperature), axis=0).astype(np.int64)
