import numpy as np
import pytest

from panedge import kernels
from panedge.labels import CategoryTaxonomy


@pytest.fixture
def cityscapes():
    return CategoryTaxonomy.cityscapes()


@pytest.fixture
def small_tax():
    """Category 1 is a thing, 11 is stuff; everything else fills the partition."""
    return CategoryTaxonomy(19, frozenset({1, 12, 13, 14}), frozenset(set(range(2, 20)) - {12, 13, 14}))


@pytest.fixture(params=["nb", "np"])
def backend(request):
    """Name -> kernel for one concrete backend, bypassing the env switch."""
    suffix = request.param
    return {name: getattr(kernels, f"{name}_{suffix}")
            for name in ("edge_mask", "gaussian_max", "nms_peaks", "nearest_center", "criss_cross_pass")}


def brute_force_edges(seg, r):
    """Per-pixel scan of the (2r+1)^2 neighbourhood, clipped to the image."""
    h, w = seg.shape
    out = np.zeros_like(seg)
    for i in range(h):
        for j in range(w):
            for a in range(i - r, i + r + 1):
                for b in range(j - r, j + r + 1):
                    if 0 <= a < h and 0 <= b < w and seg[a, b] != seg[i, j]:
                        out[i, j] = seg[i, j]
    return out


def square_scene():
    seg = np.full((8, 8), 11000, dtype=np.int64)
    seg[2:6, 2:6] = 1001
    return seg


_ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """Call with (number, description, passed, detail) to log one acceptance line."""
    def record(number, description, passed, detail=""):
        _ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {description}"
                                 + (f" ({detail})" if detail else ""))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
