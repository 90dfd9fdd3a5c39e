"""Losses with analytic gradients, temperature softmax and criss-cross attention.

Array conventions: semantic logits are ``(K+1, H, W)`` with channel 0 the
non-edge class; heatmaps are ``(H, W)``; offset fields are ``(2, H, W)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import kernels
from .errors import (
    CategoryOutOfRange,
    DimensionMismatch,
    NegativeComponent,
    NonPositiveEps,
    NonPositiveTemperature,
    ShapeMismatch,
)

PROB_EPS = 1e-12


@dataclass(frozen=True)
class LossWeights:
    alpha_s: float = 1.0
    alpha_c: float = 200.0
    alpha_o: float = 0.01

    def __post_init__(self):
        w = (self.alpha_s, self.alpha_c, self.alpha_o)
        if any(a < 0 for a in w):
            raise ValueError(f"loss weights must be non-negative, got {w}")
        if not any(w):
            raise ValueError("at least one loss weight must be positive")


class LossValue(NamedTuple):
    total: float
    l_s: float
    l_c: float
    l_o: float
    gamma: float


class SemanticLoss(NamedTuple):
    loss: float
    grad_logits: np.ndarray
    grad_temperature: float
    gamma: float


@dataclass(frozen=True)
class AttentionWeights:
    """Channel projections of the criss-cross block.

    ``wq`` and ``wk`` map C channels down to C', ``wv`` maps C to C.
    """
    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray

    @classmethod
    def random(cls, channels: int, reduced: int, rng: np.random.Generator, scale: float = 1.0):
        def draw(m, n):
            return rng.normal(0.0, scale / np.sqrt(n), size=(m, n))
        return cls(draw(reduced, channels), draw(reduced, channels), draw(channels, channels))


def _check_temperature(temperature):
    if not temperature > 0:
        raise NonPositiveTemperature(f"temperature must be positive, got {temperature}")


def ada_softmax(logits, temperature: float = 1.0) -> np.ndarray:
    """Channel-wise softmax of ``logits / temperature`` (axis 0)."""
    _check_temperature(temperature)
    z = np.asarray(logits, dtype=np.float64) / temperature
    z = z - z.max(axis=0, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=0, keepdims=True)


def semantic_edge_loss(logits, gt, temperature: float) -> SemanticLoss:
    """Edge/non-edge reweighted per-channel binary cross entropy on a temperature softmax.

    ``gamma`` is the fraction of non-edge pixels in ``gt``; positive terms are
    weighted by gamma and negative terms by 1 - gamma. Probabilities are
    clamped to [1e-12, 1 - 1e-12]; gradients are exact for the clamped loss.
    """
    _check_temperature(temperature)
    x = np.asarray(logits, dtype=np.float64)
    gt = np.asarray(gt)
    if x.ndim != 3 or x.shape[1:] != gt.shape:
        raise ShapeMismatch(f"logits {x.shape} do not match ground truth {gt.shape}")
    k1 = x.shape[0]
    if gt.size and (gt.min() < 0 or gt.max() >= k1):
        raise CategoryOutOfRange(f"ground-truth categories must lie in 0..{k1 - 1}")
    gamma = float(np.count_nonzero(gt == 0)) / gt.size

    y = ada_softmax(x, temperature)
    target = (np.arange(k1)[:, None, None] == gt[None]).astype(np.float64)
    yc = np.clip(y, PROB_EPS, 1.0 - PROB_EPS)
    inside = (y > PROB_EPS) & (y < 1.0 - PROB_EPS)
    loss = np.sum(-gamma * target * np.log(yc) - (1.0 - gamma) * (1.0 - target) * np.log1p(-yc))

    g = np.where(inside, -gamma * target / yc + (1.0 - gamma) * (1.0 - target) / (1.0 - yc), 0.0)
    # softmax backward, then through z = x / T
    gz = y * (g - np.sum(g * y, axis=0, keepdims=True))
    grad_x = gz / temperature
    grad_t = float(-np.sum(gz * x) / (temperature * temperature))
    return SemanticLoss(float(loss), grad_x, grad_t, gamma)


def center_loss(pred, gt) -> tuple[float, np.ndarray]:
    """Sum of squared heatmap differences and its gradient."""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ShapeMismatch(f"heatmaps differ in shape: {pred.shape} vs {gt.shape}")
    diff = pred - gt
    return float(np.sum(diff * diff)), 2.0 * diff


def offset_loss(pred, gt, mask) -> tuple[float, np.ndarray]:
    """L1 offset error summed over the masked pixels; subgradient 0 at equality."""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if pred.shape != gt.shape or pred.ndim != 3 or pred.shape[0] != 2 or mask.shape != pred.shape[1:]:
        raise ShapeMismatch(f"offset shapes disagree: pred {pred.shape}, gt {gt.shape}, mask {mask.shape}")
    diff = (pred - gt) * mask
    return float(np.sum(np.abs(diff))), np.sign(diff)


def total_loss(l_s: float, l_c: float, l_o: float, weights: LossWeights = LossWeights(),
               gamma: float = 0.0) -> LossValue:
    for name, v in (("l_s", l_s), ("l_c", l_c), ("l_o", l_o)):
        if not (np.isfinite(v) and v >= 0):
            raise NegativeComponent(f"{name} must be finite and non-negative, got {v}")
    total = weights.alpha_s * l_s + weights.alpha_c * l_c + weights.alpha_o * l_o
    return LossValue(float(total), float(l_s), float(l_c), float(l_o), float(gamma))


def criss_cross_attention(features, weights: AttentionWeights, recursions: int = 2) -> np.ndarray:
    """Row-and-column attention with a residual connection, applied ``recursions`` times.

    Every position attends to all positions sharing its row or column (itself
    once). Both passes use the same projections.
    """
    f = np.asarray(features, dtype=np.float64)
    if recursions not in (1, 2):
        raise ValueError(f"recursions must be 1 or 2, got {recursions}")
    if f.ndim != 3:
        raise DimensionMismatch(f"features must be C x H x W, got shape {f.shape}")
    c = f.shape[0]
    wq, wk, wv = (np.asarray(w, dtype=np.float64) for w in (weights.wq, weights.wk, weights.wv))
    if wq.ndim != 2 or wq.shape[1] != c or wk.shape != wq.shape or wv.shape != (c, c):
        raise DimensionMismatch(
            f"projection shapes {wq.shape}, {wk.shape}, {wv.shape} do not fit {c} channels")
    for _ in range(recursions):
        q = np.einsum("kc,chw->khw", wq, f)
        k = np.einsum("kc,chw->khw", wk, f)
        v = np.einsum("kc,chw->khw", wv, f)
        f = kernels.criss_cross_pass(f, q, k, v)
    return f


def finite_diff_gradient(f: Callable[[np.ndarray], float], x, eps: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function of a flat vector."""
    if not eps > 0:
        raise NonPositiveEps(f"eps must be positive, got {eps}")
    x = np.array(x, dtype=np.float64).ravel()
    grad = np.empty_like(x)
    for i in range(x.size):
        xi = x[i]
        x[i] = xi + eps
        fp = f(x.copy())
        x[i] = xi - eps
        fm = f(x.copy())
        x[i] = xi
        grad[i] = (fp - fm) / (2.0 * eps)
    return grad


def relative_error(a, b) -> float:
    a = np.ravel(a)
    b = np.ravel(b)
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(a - b) / scale)
