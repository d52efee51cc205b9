import numpy as np
import pytest

from tinytts.errors import GraphConsistency
from tinytts.toytrain import autodiff as ad
from tinytts.toytrain.autodiff import Tensor, backward


def scalar_sum(t: Tensor) -> Tensor:
    """Reduce a 2-D tensor to a scalar with ones-matmuls (exercises matmul)."""
    n, m = t.data.shape
    left = ad.matmul(Tensor(np.ones((1, n))), t)
    return ad.narrow(ad.matmul(left, Tensor(np.ones((m, 1)))), (0, 0))


def numeric_grad(f, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + eps
        up = f()
        flat[i] = keep - eps
        down = f()
        flat[i] = keep
        gf[i] = (up - down) / (2 * eps)
    return g


def test_matmul_grad_2d():
    rng = np.random.default_rng(0)
    a = Tensor(rng.standard_normal((3, 4)))
    b = Tensor(rng.standard_normal((4, 2)))
    backward(scalar_sum(ad.matmul(a, b)))

    def f():
        return float((a.data @ b.data).sum())

    assert np.allclose(a.grad, numeric_grad(f, a.data), atol=1e-6)
    assert np.allclose(b.grad, numeric_grad(f, b.data), atol=1e-6)


def test_batched_matmul_shared_weight_grad():
    rng = np.random.default_rng(1)
    a = Tensor(rng.standard_normal((2, 3, 4)))
    w = Tensor(rng.standard_normal((4, 5)))
    out = ad.matmul(a, w)
    mask = np.ones((2, 3), dtype=bool)
    loss = ad.masked_mse(out, np.zeros_like(out.data), mask)
    backward(loss)

    def f():
        d = a.data @ w.data
        return float((d * d).sum() / (mask.sum() * 5))

    assert np.allclose(w.grad, numeric_grad(f, w.data), atol=1e-6)
    assert np.allclose(a.grad, numeric_grad(f, a.data), atol=1e-6)


def test_tanh_logistic_grads():
    rng = np.random.default_rng(3)
    x = Tensor(rng.standard_normal((4, 4)))
    backward(scalar_sum(ad.tanh(x)))

    def f_tanh():
        return float(np.tanh(x.data).sum())

    assert np.allclose(x.grad, numeric_grad(f_tanh, x.data), atol=1e-6)

    y = Tensor(rng.standard_normal((3, 2)))
    backward(scalar_sum(ad.logistic(y)))

    def f_sig():
        return float((1 / (1 + np.exp(-y.data))).sum())

    assert np.allclose(y.grad, numeric_grad(f_sig, y.data), atol=1e-6)


def test_masked_softmax_rows_and_grad():
    rng = np.random.default_rng(2)
    e = Tensor(rng.standard_normal((3, 5)))
    mask = np.array(
        [[True] * 5, [True, True, True, False, False], [True, False, False, False, False]]
    )
    p = ad.masked_softmax(e, mask)
    assert np.allclose(p.data.sum(axis=1), 1.0)
    assert np.all(p.data[~mask] == 0.0)

    weights = rng.standard_normal((3, 5))
    backward(scalar_sum(ad.mul(p, Tensor(weights))))

    def f():
        z = np.where(mask, e.data, -np.inf)
        z = z - z.max(axis=1, keepdims=True)
        ez = np.exp(z)
        prob = ez / ez.sum(axis=1, keepdims=True)
        return float((prob * weights).sum())

    assert np.allclose(e.grad, numeric_grad(f, e.data), atol=1e-6)
    # masked-out logits cannot influence the loss
    assert np.all(e.grad[~mask] == 0.0)


def test_concat_grads_route_correctly():
    a = Tensor(np.ones((2, 3)))
    b = Tensor(np.full((2, 2), 2.0))
    scale = np.arange(10.0).reshape(2, 5)
    backward(scalar_sum(ad.mul(ad.concat([a, b], axis=1), Tensor(scale))))
    assert np.allclose(a.grad, scale[:, :3])
    assert np.allclose(b.grad, scale[:, 3:])


def test_expand_sums_gradient():
    a = Tensor(np.ones((2, 1, 3)))
    out = ad.expand(a, (2, 4, 3))
    loss = ad.masked_mse(out, np.zeros((2, 4, 3)), np.ones((2, 4), dtype=bool))
    backward(loss)

    def f():
        d = np.broadcast_to(a.data, (2, 4, 3))
        return float((d * d).sum() / (8 * 3))

    assert np.allclose(a.grad, numeric_grad(f, a.data), atol=1e-6)


def test_embedding_grad_only_touches_used_rows():
    table = Tensor(np.ones((5, 3)))
    idx = np.array([[1, 1], [3, 0]])
    emb = ad.embedding(table, idx)
    loss = ad.masked_mse(emb, np.zeros((2, 2, 3)), np.ones((2, 2), dtype=bool))
    backward(loss)
    assert np.all(table.grad[2] == 0)
    assert np.all(table.grad[4] == 0)
    # row 1 used twice: twice the single-use gradient
    assert np.allclose(table.grad[1], 2 * table.grad[3])


def test_masked_mse_matches_reference():
    pred = Tensor(np.arange(12.0).reshape(2, 3, 2))
    target = np.ones((2, 3, 2))
    mask = np.array([[True, True, False], [True, False, False]])
    loss = ad.masked_mse(pred, target, mask)
    diff = (pred.data - target) * mask[..., None]
    assert float(loss.data) == pytest.approx((diff**2).sum() / (3 * 2))
    backward(loss)
    assert np.all(pred.grad[~mask] == 0.0)


def test_bce_logits_matches_reference():
    z = Tensor(np.array([[0.5, -2.0, 3.0]]))
    y = np.array([[1.0, 0.0, 1.0]])
    mask = np.array([[True, True, False]])
    loss = ad.masked_bce_logits(z, y, mask)
    p = 1 / (1 + np.exp(-z.data))
    ref = -(y * np.log(p) + (1 - y) * np.log(1 - p))
    assert float(loss.data) == pytest.approx((ref * mask).sum() / 2)
    backward(loss)
    assert z.grad[0, 2] == 0.0

    def f():
        per = np.maximum(z.data, 0) - z.data * y + np.log1p(np.exp(-np.abs(z.data)))
        return float((per * mask).sum() / 2)

    assert np.allclose(z.grad, numeric_grad(f, z.data), atol=1e-6)


def test_backward_requires_scalar_root():
    with pytest.raises(GraphConsistency):
        backward(Tensor(np.ones((2, 2))))


def test_repeated_operand_accumulates():
    x = Tensor(np.array([[2.0]]))
    backward(ad.narrow(ad.mul(x, x), (0, 0)))  # d(x^2)/dx = 2x
    assert x.grad[0, 0] == pytest.approx(4.0)


def test_diamond_graph_gradient():
    x = Tensor(np.array([[1.5]]))
    a = ad.tanh(x)
    b = ad.logistic(x)
    backward(ad.narrow(ad.mul(a, b), (0, 0)))

    def f():
        return float(np.tanh(x.data[0, 0]) * (1 / (1 + np.exp(-x.data[0, 0]))))

    assert np.allclose(x.grad, numeric_grad(f, x.data), atol=1e-8)
