"""Analytic-vs-finite-difference checks for every loss gradient."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import center_loss, finite_diff_gradient, offset_loss, relative_error, semantic_edge_loss

KINK_GAP = 1e-3


@dataclass
class SuiteResult:
    name: str
    trials: int
    max_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance


def _semantic_instance(rng):
    k1 = int(rng.integers(2, 5))
    h, w = 4, 4
    logits = rng.normal(0.0, 2.0, size=(k1, h, w))
    gt = rng.integers(0, k1, size=(h, w))
    gt[rng.random((h, w)) < 0.5] = 0
    t = float(rng.uniform(0.5, 2.0))
    return logits, gt, t


def check_semantic_logits(rng, eps=1e-6):
    logits, gt, t = _semantic_instance(rng)
    res = semantic_edge_loss(logits, gt, t)
    num = finite_diff_gradient(lambda v: semantic_edge_loss(v.reshape(logits.shape), gt, t).loss, logits, eps)
    return relative_error(res.grad_logits, num)


def check_semantic_temperature(rng, eps=1e-6):
    logits, gt, t = _semantic_instance(rng)
    res = semantic_edge_loss(logits, gt, t)
    num = finite_diff_gradient(lambda v: semantic_edge_loss(logits, gt, float(v[0])).loss, [t], eps)
    return relative_error([res.grad_temperature], num)


def check_center(rng, eps=1e-6):
    pred = rng.random((8, 8))
    gt = rng.random((8, 8))
    _, grad = center_loss(pred, gt)
    num = finite_diff_gradient(lambda v: center_loss(v.reshape(pred.shape), gt)[0], pred, eps)
    return relative_error(grad, num)


def check_offset(rng, eps=1e-6):
    shape = (2, 4, 4)
    pred = rng.normal(0.0, 3.0, size=shape)
    gt = rng.normal(0.0, 3.0, size=shape)
    mask = rng.random(shape[1:]) < 0.6
    _, grad = offset_loss(pred, gt, mask)
    num = finite_diff_gradient(lambda v: offset_loss(v.reshape(shape), gt, mask)[0], pred, eps)
    smooth = (np.abs(pred - gt) > KINK_GAP).ravel()
    return relative_error(grad.ravel()[smooth], num[smooth])


SUITES = {
    "semantic_edge_loss/logits": check_semantic_logits,
    "semantic_edge_loss/temperature": check_semantic_temperature,
    "center_loss": check_center,
    "offset_loss": check_offset,
}


def run_gradcheck(trials: int = 100, tolerance: float = 1e-4, seed: int = 0) -> list[SuiteResult]:
    results = []
    for i, (name, check) in enumerate(SUITES.items()):
        rng = np.random.default_rng([seed, i])
        worst = max(check(rng) for _ in range(trials)) if trials > 0 else 0.0
        results.append(SuiteResult(name, trials, worst, tolerance))
    return results
