"""Synthetic panoptic scenes and controlled prediction perturbations.

Randomness comes from SplitMix64 (Steele, Lea & Flood 2014): output ``n`` of
the stream seeded with ``s`` is ``mix(s + n * 0x9E3779B97F4A7C15)`` with all
arithmetic mod 2**64. It is counter-based, so streams are generated in
vectorised blocks and are identical on every platform and numpy version.
Uniform doubles take the top 53 bits; normals use Box-Muller.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .edgegen import InstanceCenter, default_sigma, instance_centers, make_center_heatmap, panoptic_to_edges
from .errors import InfeasibleParams, ShapeMismatch
from .fusion import FusionParams, extract_centers
from .labels import CategoryTaxonomy

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def next_u64(self, n: int) -> np.ndarray:
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + _GOLDEN * np.arange(1, n + 1, dtype=np.uint64)
            out = _mix(z)
        self.state = (self.state + n * 0x9E3779B97F4A7C15) & _MASK64
        return out

    def uniform(self, n: int) -> np.ndarray:
        """Doubles in [0, 1)."""
        return (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))

    def integers(self, low: int, high: int, n: int) -> np.ndarray:
        """Integers in [low, high] inclusive."""
        span = high - low + 1
        return low + np.floor(self.uniform(n) * span).astype(np.int64)

    def integer(self, low: int, high: int) -> int:
        return int(self.integers(low, high, 1)[0])

    def normal(self, n: int) -> np.ndarray:
        m = (n + 1) // 2
        u1 = 1.0 - self.uniform(m)  # (0, 1]
        u2 = self.uniform(m)
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
        return z[:n]


def substream(seed: int, tag: int) -> SplitMix64:
    """Independent generator for one purpose derived from a user seed."""
    return SplitMix64(int(SplitMix64(seed ^ (tag * 0xD1B54A32D192ED03 & _MASK64)).next_u64(1)[0]))


@dataclass(frozen=True)
class SynthParams:
    height: int = 64
    width: int = 64
    max_instances: int = 8
    min_instance_size: int = 6
    shape_kinds: tuple = ("rectangle", "ellipse")
    taxonomy: CategoryTaxonomy = field(default_factory=CategoryTaxonomy.cityscapes)
    seed: int = 0
    radius: int = 2
    min_center_distance: float = 0.0
    max_attempts: int = 200


@dataclass(frozen=True)
class PerturbParams:
    semantic_flip_rate: float = 0.0
    center_jitter: float = 0.0
    offset_noise: float = 0.0
    seed: int = 0
    sigma: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.semantic_flip_rate <= 1.0:
            raise ValueError(f"semantic_flip_rate must lie in [0, 1], got {self.semantic_flip_rate}")
        if self.center_jitter < 0 or self.offset_noise < 0:
            raise ValueError("center_jitter and offset_noise must be non-negative")


def _check_feasible(p: SynthParams):
    tax = p.taxonomy
    if p.min_instance_size < 2 * (p.radius + 1):
        raise InfeasibleParams(
            f"min_instance_size {p.min_instance_size} is below 2*(r+1) = {2 * (p.radius + 1)}")
    if p.max_instances < 0:
        raise InfeasibleParams("max_instances must be >= 0")
    if p.max_instances > 0 and not tax.thing_categories:
        raise InfeasibleParams("instances requested but the taxonomy has no thing categories")
    if not tax.stuff_categories:
        raise InfeasibleParams("the background needs at least one stuff category")
    if p.max_instances * max(len(tax.thing_categories), 1) >= tax.stride:
        raise InfeasibleParams("max_instances times the thing-category count must stay below the stride")
    if p.height < p.min_instance_size + 2 or p.width < p.min_instance_size + 2:
        raise InfeasibleParams(f"{p.height}x{p.width} canvas is too small for size {p.min_instance_size}")
    if not set(p.shape_kinds) <= {"rectangle", "ellipse"} or not p.shape_kinds:
        raise InfeasibleParams(f"unknown shape kinds {p.shape_kinds}")


def _shape_mask(kind, y0, x0, sh, sw, height, width):
    mask = np.zeros((height, width), dtype=bool)
    if kind == "rectangle":
        mask[y0:y0 + sh, x0:x0 + sw] = True
        return mask
    yy, xx = np.mgrid[0:sh, 0:sw]
    ry, rx = sh / 2.0, sw / 2.0
    inside = ((yy + 0.5 - ry) / ry) ** 2 + ((xx + 0.5 - rx) / rx) ** 2 <= 1.0
    mask[y0:y0 + sh, x0:x0 + sw] = inside
    return mask


def _render(background, shapes):
    seg = background.copy()
    for label, mask in shapes:
        seg[mask] = label
    return seg


def _centers_separated(seg, p: SynthParams) -> bool:
    if p.min_center_distance <= 0:
        return True
    centers = instance_centers(panoptic_to_edges(seg, p.radius), p.taxonomy)
    pts = np.array([(c.cy, c.cx) for c in centers], dtype=np.float64).reshape(-1, 2)
    if len(pts) < 2:
        return True
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
    np.fill_diagonal(d2, np.inf)
    return bool(d2.min() >= p.min_center_distance ** 2)


def generate_scene(params: SynthParams) -> np.ndarray:
    """Random panoptic segmentation map: stuff bands with thing shapes on top.

    Shapes are painted in the order drawn. Instances left with fewer than
    ``min_instance_size`` visible pixels are dropped, and when
    ``min_center_distance`` is set a placement that brings two edge centroids
    closer than that is rejected.
    """
    _check_feasible(params)
    p = params
    tax = p.taxonomy
    d = tax.stride
    h, w = p.height, p.width
    rng = SplitMix64(p.seed)

    stuff = sorted(tax.stuff_categories)
    things = sorted(tax.thing_categories)
    n_bands = min(rng.integer(1, 3), len(stuff), h)
    cuts = sorted(set(rng.integers(1, h - 1, n_bands - 1).tolist())) if n_bands > 1 else []
    order = np.argsort(rng.uniform(len(stuff)), kind="stable")
    background = np.empty((h, w), dtype=np.int64)
    for band, (a, b) in enumerate(zip([0] + cuts, cuts + [h])):
        background[a:b] = stuff[int(order[band])] * d

    target = rng.integer(0, p.max_instances) if p.max_instances else 0
    shapes = []  # (label, mask) in paint order
    next_id = {}
    max_side_h = max(p.min_instance_size, h // 3)
    max_side_w = max(p.min_instance_size, w // 3)
    attempts = 0
    while len(shapes) < target and attempts < p.max_attempts:
        attempts += 1
        cat = things[rng.integer(0, len(things) - 1)]
        kind = p.shape_kinds[rng.integer(0, len(p.shape_kinds) - 1)]
        sh = rng.integer(p.min_instance_size, max_side_h)
        sw = rng.integer(p.min_instance_size, max_side_w)
        y0 = rng.integer(0, h - sh)
        x0 = rng.integer(0, w - sw)
        mask = _shape_mask(kind, y0, x0, sh, sw, h, w)
        iid = next_id.get(cat, 0) + 1
        trial = shapes + [(cat * d + iid, mask)]
        seg = _render(background, trial)
        # drop instances that are now (nearly) hidden
        while True:
            labels, counts = np.unique(seg, return_counts=True)
            visible = dict(zip(labels.tolist(), counts.tolist()))
            kept = [s for s in trial if visible.get(s[0], 0) >= p.min_instance_size]
            if len(kept) == len(trial):
                break
            trial = kept
            seg = _render(background, trial)
        if not trial or trial[-1][0] != cat * d + iid:
            continue
        if not _centers_separated(seg, p):
            continue
        shapes = trial
        next_id[cat] = iid
    return _render(background, shapes)


def perturb_prediction(semantic, heatmap, offsets, params: PerturbParams, taxonomy: CategoryTaxonomy):
    """Degrade a (semantic, heatmap, offsets) triple in a seeded, controlled way.

    * each edge pixel switches to a uniformly drawn other category with
      probability ``semantic_flip_rate``;
    * heatmap peaks move by Gaussian jitter and the map is re-rendered;
    * thing-edge offsets get i.i.d. Gaussian noise.

    Zero-valued knobs leave the matching input untouched.
    """
    semantic = np.asarray(semantic, dtype=np.int64)
    heatmap = np.asarray(heatmap, dtype=np.float64)
    offsets = np.asarray(offsets, dtype=np.float64)
    if heatmap.shape != semantic.shape or offsets.shape != (2,) + semantic.shape:
        raise ShapeMismatch(
            f"inconsistent shapes: semantic {semantic.shape}, heatmap {heatmap.shape}, offsets {offsets.shape}")
    k = taxonomy.num_categories
    new_sem = semantic.copy()
    new_hm = heatmap.copy()
    new_off = offsets.copy()

    if params.semantic_flip_rate > 0 and k > 1:
        rng = substream(params.seed, 1)
        rows, cols = np.nonzero(semantic)
        flip = rng.uniform(rows.size) < params.semantic_flip_rate
        # draw from the K-1 other categories
        shift = rng.integers(1, k - 1, rows.size)
        old = semantic[rows, cols]
        new = (old - 1 + shift) % k + 1
        new_sem[rows[flip], cols[flip]] = new[flip]

    if params.center_jitter > 0:
        rng = substream(params.seed, 2)
        peaks = extract_centers(heatmap, FusionParams(taxonomy))
        noise = rng.normal(2 * len(peaks)).reshape(-1, 2) * params.center_jitter
        h, w = semantic.shape
        moved = [InstanceCenter(0, 0, float(np.clip(c.cy + dy, 0, h - 1)), float(np.clip(c.cx + dx, 0, w - 1)))
                 for c, (dy, dx) in zip(peaks, noise)]
        sigma = params.sigma or default_sigma(h, w)
        new_hm = make_center_heatmap(moved, h, w, sigma)

    if params.offset_noise > 0:
        rng = substream(params.seed, 3)
        thing = taxonomy.thing_lookup()[np.clip(semantic, 0, k)]
        rows, cols = np.nonzero(thing)
        noise = rng.normal(2 * rows.size).reshape(2, -1) * params.offset_noise
        new_off[0, rows, cols] += noise[0]
        new_off[1, rows, cols] += noise[1]

    return new_sem, new_hm, new_off
