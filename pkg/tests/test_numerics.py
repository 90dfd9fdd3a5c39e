import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from panedge.errors import (
    CategoryOutOfRange, DimensionMismatch, NegativeComponent, NonPositiveEps, NonPositiveTemperature, ShapeMismatch,
)
from panedge.gradcheck import check_center, check_offset, check_semantic_logits, check_semantic_temperature
from panedge.numerics import (
    AttentionWeights, LossWeights, ada_softmax, center_loss, criss_cross_attention, finite_diff_gradient,
    offset_loss, relative_error, semantic_edge_loss, total_loss,
)


def px(values):
    return np.array(values, dtype=np.float64).reshape(-1, 1, 1)


def test_softmax_examples():
    assert ada_softmax(px([0, 0]), 3.7).ravel().tolist() == [0.5, 0.5]
    np.testing.assert_allclose(ada_softmax(px([np.log(2), 0]), 1.0).ravel(), [2 / 3, 1 / 3], rtol=1e-15)
    np.testing.assert_allclose(ada_softmax(px([5, -5]), 1e6).ravel(), [0.5, 0.5], atol=1e-5)
    with pytest.raises(NonPositiveTemperature):
        ada_softmax(px([1, 2]), 0.0)


def test_softmax_survives_huge_logits():
    p = ada_softmax(px([1e300, -1e300, 0]), 1.0).ravel()
    assert p.tolist() == [1.0, 0.0, 0.0]


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, (4, 2, 3), elements=st.floats(-1e3, 1e3)), st.floats(1e-3, 1e6))
def test_softmax_sums_to_one(logits, t):
    assert np.all(np.abs(ada_softmax(logits, t).sum(axis=0) - 1.0) <= 1e-9)


def test_semantic_loss_confident_correct_is_tiny():
    logits = np.zeros((3, 4, 4))
    logits[0] = 100.0
    res = semantic_edge_loss(logits, np.zeros((4, 4), dtype=int), 1.0)
    assert res.gamma == 1.0
    assert 0.0 <= res.loss < 1e-6 * 16


def test_semantic_loss_gamma():
    gt = np.zeros((4, 4), dtype=int)
    gt[0, :] = [1, 2, 1, 2]
    assert semantic_edge_loss(np.zeros((3, 4, 4)), gt, 1.0).gamma == 0.75


def test_semantic_loss_matches_formula():
    rng = np.random.default_rng(2)
    logits = rng.normal(size=(3, 2, 2))
    gt = np.array([[0, 1], [2, 0]])
    t = 1.3
    z = logits / t
    y = np.exp(z) / np.exp(z).sum(axis=0)
    gamma = 0.5
    expected = 0.0
    for k in range(3):
        for i in range(2):
            for j in range(2):
                yb = 1.0 if gt[i, j] == k else 0.0
                expected += -gamma * yb * np.log(y[k, i, j]) - (1 - gamma) * (1 - yb) * np.log(1 - y[k, i, j])
    assert semantic_edge_loss(logits, gt, t).loss == pytest.approx(expected, rel=1e-12)


def test_semantic_loss_errors():
    with pytest.raises(ShapeMismatch):
        semantic_edge_loss(np.zeros((3, 4, 4)), np.zeros((4, 5), dtype=int), 1.0)
    with pytest.raises(CategoryOutOfRange):
        semantic_edge_loss(np.zeros((3, 2, 2)), np.full((2, 2), 3), 1.0)


def test_semantic_gradients_example():
    rng = np.random.default_rng(7)
    logits = rng.normal(size=(3, 4, 4))
    gt = rng.integers(0, 3, size=(4, 4))
    res = semantic_edge_loss(logits, gt, 1.3)
    num = finite_diff_gradient(lambda v: semantic_edge_loss(v.reshape(3, 4, 4), gt, 1.3).loss, logits, 1e-6)
    assert relative_error(res.grad_logits, num) < 1e-5


@pytest.mark.parametrize("check", [check_semantic_logits, check_semantic_temperature, check_center, check_offset])
def test_gradients_on_random_instances(check):
    rng = np.random.default_rng(11)
    assert max(check(rng) for _ in range(25)) < 1e-5


def test_semantic_loss_minimum_at_one_hot():
    gt = np.array([[0, 1], [2, 0]])
    good = np.where(np.arange(3)[:, None, None] == gt, 60.0, -60.0)
    rng = np.random.default_rng(1)
    best = semantic_edge_loss(good, gt, 1.0).loss
    # clamping leaves ~1e-12 per pixel
    assert best < 1e-10
    for _ in range(20):
        assert semantic_edge_loss(rng.normal(size=(3, 2, 2)), gt, 1.0).loss > best


def test_center_loss():
    a = np.zeros((3, 3))
    assert center_loss(a, a)[0] == 0.0
    b = a.copy()
    b[1, 2] = 3.0
    loss, grad = center_loss(b, a)
    assert loss == 9.0 and grad[1, 2] == 6.0
    with pytest.raises(ShapeMismatch):
        center_loss(a, np.zeros((3, 4)))


def test_center_loss_fd_example():
    rng = np.random.default_rng(4)
    pred, gt = rng.random((2, 8, 8))
    _, grad = center_loss(pred, gt)
    num = finite_diff_gradient(lambda v: center_loss(v.reshape(8, 8), gt)[0], pred, 1e-6)
    np.testing.assert_allclose(grad.ravel(), num, atol=1e-6)


def test_offset_loss():
    z = np.zeros((2, 3, 3))
    mask = np.zeros((3, 3), dtype=bool)
    mask[1, 1] = True
    assert offset_loss(z, z, mask)[0] == 0.0
    pred = z.copy()
    pred[:, 1, 1] = (3.0, 4.0)
    pred[:, 0, 0] = (9.0, 9.0)  # outside the mask
    loss, grad = offset_loss(pred, z, mask)
    assert loss == 7.0
    assert grad[:, 1, 1].tolist() == [1.0, 1.0] and not grad[:, 0, 0].any()
    assert not offset_loss(z, z, mask)[1].any()


def test_total_loss():
    assert total_loss(2.0, 3.0, 4.0, LossWeights(1, 0, 0)).total == 2.0
    assert total_loss(2.0, 3.0, 4.0, LossWeights(1, 1, 1)).total == 9.0
    assert total_loss(0.0, 0.0, 0.0).total == 0.0
    v = total_loss(1.5, 0.25, 8.0)
    assert v.total == pytest.approx(1.5 + 200 * 0.25 + 0.01 * 8.0, rel=1e-12)
    with pytest.raises(NegativeComponent):
        total_loss(-1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        LossWeights(0, 0, 0)


def test_finite_diff_examples():
    assert finite_diff_gradient(lambda v: v[0] ** 2, [3.0], 1e-3)[0] == pytest.approx(6.0, abs=1e-6)
    assert not finite_diff_gradient(lambda v: 4.2, np.ones(5)).any()
    x = np.random.default_rng(0).normal(size=10)
    np.testing.assert_allclose(finite_diff_gradient(lambda v: np.sum(v * v), x), 2 * x, atol=1e-6)
    with pytest.raises(NonPositiveEps):
        finite_diff_gradient(lambda v: 0.0, [1.0], 0.0)


def _weights(c, seed):
    return AttentionWeights.random(c, max(1, c // 2), np.random.default_rng(seed))


def test_cc_single_position():
    w = _weights(3, 0)
    f = np.array([1.0, -2.0, 0.5]).reshape(3, 1, 1)
    out = criss_cross_attention(f, w, recursions=1)
    np.testing.assert_allclose(out[:, 0, 0], w.wv @ f[:, 0, 0] + f[:, 0, 0], rtol=1e-14)


def test_cc_constant_map_stays_constant():
    f = np.broadcast_to(np.array([0.3, -1.0, 2.0, 0.7])[:, None, None], (4, 5, 6)).copy()
    for rec in (1, 2):
        out = criss_cross_attention(f, _weights(4, 1), rec)
        np.testing.assert_allclose(out, np.broadcast_to(out[:, :1, :1], out.shape), rtol=1e-12)


def test_cc_dependency_structure():
    rng = np.random.default_rng(3)
    f = rng.normal(size=(4, 5, 5))
    w = _weights(4, 2)
    g = f.copy()
    g[:, 3, 4] += 1e-3
    d1 = np.abs(criss_cross_attention(g, w, 1) - criss_cross_attention(f, w, 1))
    assert d1[:, 0, 0].max() < 1e-12
    assert d1[:, 3, 0].max() > 0
    d2 = np.abs(criss_cross_attention(g, w, 2) - criss_cross_attention(f, w, 2))
    assert d2[:, 0, 0].max() > 1e-8


def test_cc_errors():
    w = _weights(4, 0)
    with pytest.raises(DimensionMismatch):
        criss_cross_attention(np.zeros((3, 2, 2)), w)
    with pytest.raises(ValueError):
        criss_cross_attention(np.zeros((4, 2, 2)), w, recursions=3)
