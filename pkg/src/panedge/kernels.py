"""Hot per-pixel kernels.

Every kernel exists twice: a numba ``@njit`` loop (``*_nb``) and a vectorised
numpy version (``*_np``). The public names dispatch on ``USE_NUMBA`` from
:mod:`panedge._accel`. Both variants take and return plain arrays so they can
be compared directly in tests and in ``benchmarks/bench_kernels.py``.
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._accel import USE_NUMBA, njit

__all__ = [
    "edge_mask",
    "gaussian_max",
    "nms_peaks",
    "nearest_center",
    "criss_cross_pass",
]


# -- boundary detection -----------------------------------------------------

@njit
def edge_mask_nb(labels, radius):
    h, w = labels.shape
    out = np.zeros((h, w), dtype=np.bool_)
    for i in range(h):
        i0 = max(i - radius, 0)
        i1 = min(i + radius + 1, h)
        for j in range(w):
            j0 = max(j - radius, 0)
            j1 = min(j + radius + 1, w)
            v = labels[i, j]
            found = False
            for a in range(i0, i1):
                for b in range(j0, j1):
                    if labels[a, b] != v:
                        found = True
                        break
                if found:
                    break
            out[i, j] = found
    return out


def _window_reduce(a, radius, reduce):
    k = 2 * radius + 1
    # edge padding == "outside the image counts as the same segment"
    p = np.pad(a, radius, mode="edge")
    m = reduce(sliding_window_view(p, k, axis=0), axis=-1)
    return reduce(sliding_window_view(m, k, axis=1), axis=-1)


def edge_mask_np(labels, radius):
    labels = np.asarray(labels)
    if labels.size == 0:
        return np.zeros(labels.shape, dtype=bool)
    return _window_reduce(labels, radius, np.min) != _window_reduce(labels, radius, np.max)


# -- gaussian heatmap ---------------------------------------------------------

@njit
def gaussian_max_nb(cy, cx, height, width, sigma):
    out = np.zeros((height, width), dtype=np.float64)
    denom = 2.0 * sigma * sigma
    for i in range(height):
        for j in range(width):
            best = 0.0
            for n in range(cy.shape[0]):
                dy = i - cy[n]
                dx = j - cx[n]
                g = np.exp(-(dy * dy + dx * dx) / denom)
                if g > best:
                    best = g
            out[i, j] = best
    return out


def gaussian_max_np(cy, cx, height, width, sigma):
    out = np.zeros((height, width), dtype=np.float64)
    denom = 2.0 * sigma * sigma
    rows = np.arange(height, dtype=np.float64)[:, None]
    cols = np.arange(width, dtype=np.float64)[None, :]
    for y, x in zip(cy, cx):
        dy = rows - y
        dx = cols - x
        np.maximum(out, np.exp(-(dy * dy + dx * dx) / denom), out=out)
    return out


# -- peak extraction ----------------------------------------------------------

@njit
def nms_peaks_nb(heatmap, threshold, window):
    h, w = heatmap.shape
    rad = window // 2
    keep = np.zeros((h, w), dtype=np.bool_)
    for i in range(h):
        for j in range(w):
            v = heatmap[i, j]
            if not v >= threshold:
                continue
            ok = True
            for a in range(max(i - rad, 0), min(i + rad + 1, h)):
                for b in range(max(j - rad, 0), min(j + rad + 1, w)):
                    if a == i and b == j:
                        continue
                    u = heatmap[a, b]
                    if u > v or (u == v and (a < i or (a == i and b < j))):
                        ok = False
                        break
                if not ok:
                    break
            keep[i, j] = ok
    return keep


def nms_peaks_np(heatmap, threshold, window):
    heatmap = np.asarray(heatmap, dtype=np.float64)
    h, w = heatmap.shape
    rad = window // 2
    p = np.pad(heatmap, rad, mode="constant", constant_values=-np.inf)
    keep = heatmap >= threshold
    for dy in range(-rad, rad + 1):
        for dx in range(-rad, rad + 1):
            if dy == 0 and dx == 0:
                continue
            nb = p[rad + dy:rad + dy + h, rad + dx:rad + dx + w]
            if dy < 0 or (dy == 0 and dx < 0):
                # earlier in row-major order: ties go to the neighbour
                keep &= heatmap > nb
            else:
                keep &= heatmap >= nb
    return keep


# -- nearest center assignment ----------------------------------------------

@njit
def nearest_center_nb(qy, qx, cy, cx):
    n = qy.shape[0]
    out = np.empty(n, dtype=np.int64)
    for k in range(n):
        best = np.inf
        arg = 0
        for m in range(cy.shape[0]):
            dy = qy[k] - cy[m]
            dx = qx[k] - cx[m]
            d = dy * dy + dx * dx
            if d < best:
                best = d
                arg = m
        out[k] = arg
    return out


def nearest_center_np(qy, qx, cy, cx, chunk=4096):
    qy = np.asarray(qy, dtype=np.float64)
    qx = np.asarray(qx, dtype=np.float64)
    out = np.empty(qy.shape[0], dtype=np.int64)
    for s in range(0, qy.shape[0], chunk):
        dy = qy[s:s + chunk, None] - cy[None, :]
        dx = qx[s:s + chunk, None] - cx[None, :]
        out[s:s + chunk] = np.argmin(dy * dy + dx * dx, axis=1)
    return out


# -- criss-cross attention ----------------------------------------------------

@njit
def criss_cross_pass_nb(feat, query, key, value):
    c, h, w = feat.shape
    cq = query.shape[0]
    out = np.empty_like(feat)
    e = np.empty(w + h - 1, dtype=np.float64)
    for i in range(h):
        for j in range(w):
            for b in range(w):
                acc = 0.0
                for k in range(cq):
                    acc += query[k, i, j] * key[k, i, b]
                e[b] = acc
            n = w
            for a in range(h):
                if a == i:
                    continue
                acc = 0.0
                for k in range(cq):
                    acc += query[k, i, j] * key[k, a, j]
                e[n] = acc
                n += 1
            top = e.max()
            total = 0.0
            for n in range(e.shape[0]):
                e[n] = np.exp(e[n] - top)
                total += e[n]
            for ch in range(c):
                acc = 0.0
                for b in range(w):
                    acc += e[b] * value[ch, i, b]
                n = w
                for a in range(h):
                    if a == i:
                        continue
                    acc += e[n] * value[ch, a, j]
                    n += 1
                out[ch, i, j] = acc / total + feat[ch, i, j]
    return out


def criss_cross_pass_np(feat, query, key, value):
    h, w = feat.shape[1:]
    e_row = np.einsum("cij,cib->ijb", query, key)
    e_col = np.einsum("cij,caj->ija", query, key)
    # the position itself is already in its row
    idx = np.arange(h)
    e_col[idx, :, idx] = -np.inf
    e = np.concatenate([e_row, e_col], axis=2)
    e = np.exp(e - e.max(axis=2, keepdims=True))
    e /= e.sum(axis=2, keepdims=True)
    out = np.einsum("ijb,cib->cij", e[..., :w], value)
    out += np.einsum("ija,caj->cij", e[..., w:], value)
    return out + feat


_IMPL = "nb" if USE_NUMBA else "np"


def _pick(name):
    return globals()[f"{name}_{_IMPL}"]


def edge_mask(labels, radius):
    """Boolean map of pixels with a differently-labelled pixel within Chebyshev ``radius``."""
    return _pick("edge_mask")(np.ascontiguousarray(labels, dtype=np.int64), int(radius))


def gaussian_max(cy, cx, height, width, sigma):
    cy = np.ascontiguousarray(cy, dtype=np.float64)
    cx = np.ascontiguousarray(cx, dtype=np.float64)
    return _pick("gaussian_max")(cy, cx, int(height), int(width), float(sigma))


def nms_peaks(heatmap, threshold, window):
    """Mask of thresholded window maxima; ties go to the earliest pixel in row-major order."""
    heatmap = np.ascontiguousarray(heatmap, dtype=np.float64)
    return _pick("nms_peaks")(heatmap, float(threshold), int(window))


def nearest_center(qy, qx, cy, cx):
    """Index of the nearest center for each query point (first index wins ties)."""
    args = [np.ascontiguousarray(a, dtype=np.float64) for a in (qy, qx, cy, cx)]
    return _pick("nearest_center")(*args)


def criss_cross_pass(feat, query, key, value):
    args = [np.ascontiguousarray(a, dtype=np.float64) for a in (feat, query, key, value)]
    return _pick("criss_cross_pass")(*args)
