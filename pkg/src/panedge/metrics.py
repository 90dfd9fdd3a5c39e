"""Panoptic Quality for edge maps.

Segments are label-equivalence classes of edge pixels (not connected
components). A predicted and a ground-truth segment of the same category may
match when their pixel IoU exceeds the threshold (10% by default); matching
is greedy by descending IoU with deterministic tie-breaks. Per-category PQ,
SQ and RQ are averaged without weights over the categories that occur in
either map, overall and separately for thing and stuff categories.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InvalidThreshold, ShapeMismatch, TaxonomyMismatch
from .kernels import _window_reduce
from .labels import CategoryTaxonomy, validate_map

DEFAULT_THRESHOLD = 0.1


class EdgeSegment(NamedTuple):
    label: int
    category: int
    pixels: frozenset


def segments_of(labels, taxonomy: CategoryTaxonomy) -> list[EdgeSegment]:
    """One segment per distinct nonzero label, ordered by label."""
    labels = np.asarray(labels, dtype=np.int64)
    rows, cols = np.nonzero(labels)
    vals = labels[rows, cols]
    order = np.argsort(vals, kind="stable")
    rows, cols, vals = rows[order], cols[order], vals[order]
    uniq, starts = np.unique(vals, return_index=True)
    bounds = list(starts[1:]) + [vals.size]
    segs = []
    for lab, a, b in zip(uniq, starts, bounds):
        pix = frozenset(zip(rows[a:b].tolist(), cols[a:b].tolist()))
        segs.append(EdgeSegment(int(lab), int(lab // taxonomy.stride), pix))
    return segs


def edge_iou(a, b) -> float:
    a, b = set(a), set(b)
    union = len(a | b)
    if union == 0:
        return 0.0
    return len(a & b) / union


def _check_threshold(threshold):
    if not 0.0 < threshold <= 1.0:
        raise InvalidThreshold(f"IoU threshold must lie in (0, 1], got {threshold}")


def _greedy(candidates):
    """candidates: (iou, gt_label, pred_label) triples. Returns the chosen subset."""
    used_gt, used_pred, chosen = set(), set(), []
    for iou, g, p in sorted(candidates, key=lambda c: (-c[0], c[1], c[2])):
        if g in used_gt or p in used_pred:
            continue
        used_gt.add(g)
        used_pred.add(p)
        chosen.append((iou, g, p))
    return chosen


class MatchResult(NamedTuple):
    tp: list  # (pred_label, gt_label, iou)
    fp: list  # pred labels
    fn: list  # gt labels


def match_segments(pred: list[EdgeSegment], gt: list[EdgeSegment],
                   threshold: float = DEFAULT_THRESHOLD) -> MatchResult:
    _check_threshold(threshold)
    cands = []
    for g in gt:
        for p in pred:
            if g.category != p.category:
                continue
            iou = edge_iou(p.pixels, g.pixels)
            if iou > threshold:
                cands.append((iou, g.label, p.label))
    chosen = _greedy(cands)
    tp = [(p, g, iou) for iou, g, p in chosen]
    gt_hit = {g for _, g, _ in chosen}
    pred_hit = {p for _, _, p in chosen}
    return MatchResult(tp, [s.label for s in pred if s.label not in pred_hit],
                       [s.label for s in gt if s.label not in gt_hit])


@dataclass
class CategoryStats:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    ious: list = field(default_factory=list)

    @property
    def sum_iou(self) -> float:
        return math.fsum(self.ious)

    @property
    def rq(self) -> float:
        denom = self.tp + 0.5 * self.fp + 0.5 * self.fn
        return self.tp / denom if denom else 0.0

    @property
    def sq(self) -> float:
        return self.sum_iou / self.tp if self.tp else 0.0

    @property
    def pq(self) -> float:
        denom = self.tp + 0.5 * self.fp + 0.5 * self.fn
        return self.sum_iou / denom if denom else 0.0

    def merge(self, other: "CategoryStats") -> None:
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn
        self.ious.extend(other.ious)


class Quality(NamedTuple):
    pq: float
    sq: float
    rq: float
    n: int


def _mean_quality(rows: list[CategoryStats]) -> Quality:
    # an empty group means neither side has a segment there: nothing to get wrong
    if not rows:
        return Quality(1.0, 1.0, 1.0, 0)
    n = len(rows)
    return Quality(math.fsum(r.pq for r in rows) / n, math.fsum(r.sq for r in rows) / n,
                   math.fsum(r.rq for r in rows) / n, n)


@dataclass
class PQReport:
    taxonomy: CategoryTaxonomy
    iou_threshold: float = DEFAULT_THRESHOLD
    per_category: dict = field(default_factory=dict)

    def _group(self, cats) -> Quality:
        return _mean_quality([self.per_category[c] for c in sorted(self.per_category) if c in cats])

    @property
    def overall(self) -> Quality:
        return self._group(set(self.per_category))

    @property
    def things(self) -> Quality:
        return self._group(self.taxonomy.thing_categories)

    @property
    def stuff(self) -> Quality:
        return self._group(self.taxonomy.stuff_categories)

    def merge(self, other: "PQReport") -> None:
        if other.taxonomy != self.taxonomy or other.iou_threshold != self.iou_threshold:
            raise TaxonomyMismatch("cannot merge reports with different taxonomy or threshold")
        for c, stats in other.per_category.items():
            self.per_category.setdefault(c, CategoryStats()).merge(stats)

    def to_dict(self) -> dict:
        out = {"iou_threshold": self.iou_threshold}
        for suffix, q in (("", self.overall), ("_th", self.things), ("_st", self.stuff)):
            out["pq" + suffix] = q.pq
            out["sq" + suffix] = q.sq
            out["rq" + suffix] = q.rq
            out["n" + suffix] = q.n
        names = self.taxonomy.names
        per = {}
        for c in sorted(self.per_category):
            s = self.per_category[c]
            row = {"pq": s.pq, "sq": s.sq, "rq": s.rq, "tp": s.tp, "fp": s.fp, "fn": s.fn,
                   "sum_iou": s.sum_iou, "isthing": self.taxonomy.is_thing(c)}
            if names:
                row["name"] = names[c - 1]
            per[str(c)] = row
        out["per_category"] = per
        return out


def _dilate(mask, t):
    return _window_reduce(mask.astype(np.uint8), t, np.max).astype(bool)


def _pair_stats(pred, gt, dilation):
    """Areas of every segment and intersections of every overlapping (gt, pred) pair."""
    if dilation == 0:
        pl, pc = np.unique(pred[pred > 0], return_counts=True)
        gl, gc = np.unique(gt[gt > 0], return_counts=True)
        both = (pred > 0) & (gt > 0)
        pairs, pcount = np.unique(np.stack([gt[both], pred[both]]), axis=1, return_counts=True)
        inter = {(int(g), int(p)): int(n) for (g, p), n in zip(pairs.T, pcount)}
        return (dict(zip(pl.tolist(), pc.tolist())), dict(zip(gl.tolist(), gc.tolist())), inter)
    pmasks = {int(l): _dilate(pred == l, dilation) for l in np.unique(pred[pred > 0])}
    gmasks = {int(l): _dilate(gt == l, dilation) for l in np.unique(gt[gt > 0])}
    inter = {}
    for g, gm in gmasks.items():
        for p, pm in pmasks.items():
            n = int(np.count_nonzero(gm & pm))
            if n:
                inter[(g, p)] = n
    return ({k: int(m.sum()) for k, m in pmasks.items()}, {k: int(m.sum()) for k, m in gmasks.items()}, inter)


def edge_pq(pred, gt, taxonomy: CategoryTaxonomy, threshold: float = DEFAULT_THRESHOLD,
            dilation: int = 0, ignore=None) -> PQReport:
    """Edge Panoptic Quality of one prediction against one ground truth.

    ``dilation`` > 0 grows every segment by that Chebyshev radius before IoU.
    ``ignore`` is an optional boolean mask of pixels removed from both maps.
    """
    _check_threshold(threshold)
    if dilation < 0:
        raise ValueError(f"dilation must be >= 0, got {dilation}")
    pred = np.asarray(pred, dtype=np.int64)
    gt = np.asarray(gt, dtype=np.int64)
    if pred.shape != gt.shape or pred.ndim != 2:
        raise ShapeMismatch(f"prediction {pred.shape} and ground truth {gt.shape} differ")
    for name, arr in (("prediction", pred), ("ground truth", gt)):
        bad = validate_map(arr, taxonomy)
        if bad:
            raise TaxonomyMismatch(f"{name} is not valid under the taxonomy: {bad[0]}")
    if ignore is not None:
        ignore = np.asarray(ignore, dtype=bool)
        if ignore.shape != pred.shape:
            raise ShapeMismatch(f"ignore mask {ignore.shape} does not match {pred.shape}")
        pred = np.where(ignore, 0, pred)
        gt = np.where(ignore, 0, gt)

    d = taxonomy.stride
    parea, garea, inter = _pair_stats(pred, gt, dilation)
    cands = []
    for (g, p), n in inter.items():
        if g // d != p // d:
            continue
        iou = n / (garea[g] + parea[p] - n)
        if iou > threshold:
            cands.append((iou, g, p))
    chosen = _greedy(cands)

    report = PQReport(taxonomy, threshold)
    stats = report.per_category
    for iou, g, _ in chosen:
        s = stats.setdefault(g // d, CategoryStats())
        s.tp += 1
        s.ious.append(iou)
    gt_hit = {g for _, g, _ in chosen}
    pred_hit = {p for _, _, p in chosen}
    for g in garea:
        if g not in gt_hit:
            stats.setdefault(g // d, CategoryStats()).fn += 1
    for p in parea:
        if p not in pred_hit:
            stats.setdefault(p // d, CategoryStats()).fp += 1
    report.per_category = dict(sorted(stats.items()))
    return report
