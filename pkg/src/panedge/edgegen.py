"""Ground-truth panoptic edges and the center/offset training targets."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidSegmentLabel, MissingCenter, NonPositiveSigma
from .labels import CategoryTaxonomy, validate_map


@dataclass(frozen=True)
class InstanceCenter:
    category: int
    instance_id: int
    cy: float
    cx: float


def default_sigma(height: int, width: int) -> float:
    """8 px at 1024-pixel short side, scaled down for small images, never below 1 px."""
    return max(1.0, 8.0 * min(height, width) / 1024.0)


def panoptic_to_edges(seg, radius: int, taxonomy: CategoryTaxonomy | None = None) -> np.ndarray:
    """Erode every segment by a (2r+1)-square and keep what the erosion removed.

    A pixel is an edge pixel iff some in-image pixel within Chebyshev distance
    ``radius`` carries a different label. Edge pixels keep their segment label;
    everything else becomes 0. The image border does not create edges.
    """
    seg = np.asarray(seg)
    if seg.ndim != 2:
        raise InvalidSegmentLabel(f"expected a 2-D segmentation map, got shape {seg.shape}")
    if radius < 1:
        raise ValueError(f"edge radius must be >= 1, got {radius}")
    seg = seg.astype(np.int64)
    if taxonomy is not None:
        zeros = np.flatnonzero(seg == 0)
        if zeros.size:
            r, c = divmod(int(zeros[0]), seg.shape[1])
            raise InvalidSegmentLabel(f"unassigned pixel (label 0) at ({r}, {c})")
        problems = validate_map(seg, taxonomy)
        if problems:
            raise InvalidSegmentLabel(str(problems[0]))
    mask = kernels.edge_mask(seg, radius)
    return np.where(mask, seg, 0)


def instance_centers(edges, taxonomy: CategoryTaxonomy) -> list[InstanceCenter]:
    """Centroid of each thing instance's edge pixels, ordered by label."""
    edges = np.asarray(edges, dtype=np.int64)
    d = taxonomy.stride
    thing = taxonomy.thing_lookup()
    cats = edges // d
    in_range = (cats > 0) & (cats <= taxonomy.num_categories)
    sel = np.zeros(edges.shape, dtype=bool)
    sel[in_range] = thing[cats[in_range]]
    rows, cols = np.nonzero(sel)
    if rows.size == 0:
        return []
    uniq, inv = np.unique(edges[rows, cols], return_inverse=True)
    counts = np.bincount(inv)
    sy = np.bincount(inv, weights=rows.astype(np.float64))
    sx = np.bincount(inv, weights=cols.astype(np.float64))
    return [
        InstanceCenter(int(lab // d), int(lab % d), float(y / n), float(x / n))
        for lab, y, x, n in zip(uniq, sy, sx, counts)
    ]


def make_center_heatmap(centers, height: int, width: int, sigma: float) -> np.ndarray:
    """Per-pixel maximum of unit-peak Gaussians placed at each center."""
    if not sigma > 0:
        raise NonPositiveSigma(f"sigma must be positive, got {sigma}")
    cy = np.array([c.cy for c in centers], dtype=np.float64)
    cx = np.array([c.cx for c in centers], dtype=np.float64)
    return kernels.gaussian_max(cy, cx, height, width, sigma)


def make_offset_field(edges, centers, taxonomy: CategoryTaxonomy) -> np.ndarray:
    """Offsets ``center - pixel`` at thing-edge pixels, zero elsewhere.

    Returns a ``(2, H, W)`` array, channel 0 = dy, channel 1 = dx.
    """
    edges = np.asarray(edges, dtype=np.int64)
    d = taxonomy.stride
    out = np.zeros((2,) + edges.shape, dtype=np.float64)
    thing = taxonomy.thing_lookup()
    cats = edges // d
    in_range = (cats > 0) & (cats <= taxonomy.num_categories)
    sel = np.zeros(edges.shape, dtype=bool)
    sel[in_range] = thing[cats[in_range]]
    rows, cols = np.nonzero(sel)
    if rows.size == 0:
        return out
    lookup = {c.category * d + c.instance_id: (c.cy, c.cx) for c in centers}
    uniq, inv = np.unique(edges[rows, cols], return_inverse=True)
    missing = [int(u) for u in uniq if int(u) not in lookup]
    if missing:
        raise MissingCenter(f"no center for thing instance label(s) {missing}")
    cy = np.array([lookup[int(u)][0] for u in uniq])
    cx = np.array([lookup[int(u)][1] for u in uniq])
    out[0, rows, cols] = cy[inv] - rows
    out[1, rows, cols] = cx[inv] - cols
    return out


def make_targets(edges, taxonomy: CategoryTaxonomy, sigma: float | None = None):
    """Center heatmap and offset field for a ground-truth edge map."""
    edges = np.asarray(edges, dtype=np.int64)
    h, w = edges.shape
    if sigma is None:
        sigma = default_sigma(h, w)
    centers = instance_centers(edges, taxonomy)
    return make_center_heatmap(centers, h, w, sigma), make_offset_field(edges, centers, taxonomy)
