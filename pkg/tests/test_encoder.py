import numpy as np
import pytest

from homgsl.encoder import (
    AdamState,
    DivergenceError,
    Encoder,
    adam_step,
    adam_update,
    encode,
    normalize_embedding,
    normalize_embedding_backward,
    reconstruction_loss_and_grad,
    reconstruction_target,
    weight_gradient,
)
from homgsl.graph import UndirectedGraph

from conftest import random_graph
from fd import central_diff, rel_err


def _enc(w, lr=1e-3):
    return Encoder(np.asarray(w, dtype=float), AdamState.zeros_like(np.asarray(w, dtype=float)), lr)


def test_encode_identity_and_zero(rng):
    h = rng.normal(size=(6, 4))
    assert np.allclose(encode(h, _enc(np.eye(4))), h)
    assert np.all(encode(h, _enc(np.zeros((4, 2)))) == 0)


def test_encode_matches_triple_loop(rng):
    h, w = rng.normal(size=(5, 3)), rng.normal(size=(3, 3))
    ref = np.zeros((5, 3))
    for i in range(5):
        for j in range(3):
            for t in range(3):
                ref[i, j] += h[i, t] * w[t, j]
    assert np.allclose(encode(h, _enc(w)), ref)


def test_encode_shape_mismatch(rng):
    with pytest.raises(ValueError):
        encode(rng.normal(size=(5, 3)), _enc(np.eye(4)))


def test_init_bounds_and_determinism():
    a = Encoder.init(30, 10, seed=7)
    b = Encoder.init(30, 10, seed=7)
    assert np.array_equal(a.weights, b.weights)
    assert np.abs(a.weights).max() <= np.sqrt(6 / 40)
    assert a.adam.step == 0


def test_recon_zero_embedding():
    g = UndirectedGraph.from_edges(2, [(0, 1)])
    loss, dz = reconstruction_loss_and_grad(np.zeros((2, 3)), g)
    assert reconstruction_target(g).tolist() == [[1, 1], [1, 1]]
    assert loss == pytest.approx(1.0)
    assert np.all(dz == 0)


def test_recon_exact_fit():
    g = UndirectedGraph.from_edges(3, [])
    loss, dz = reconstruction_loss_and_grad(np.eye(3), g)
    assert loss == 0.0 and np.all(dz == 0)


def test_recon_diag_zero_flag():
    g = UndirectedGraph.from_edges(2, [(0, 1)])
    loss, _ = reconstruction_loss_and_grad(np.zeros((2, 1)), g, diag_one=False)
    assert loss == pytest.approx(0.5)


@pytest.mark.parametrize("mean_scale", [True, False])
def test_recon_grad_finite_differences(rng, mean_scale):
    for _ in range(10):
        n, d = int(rng.integers(2, 11)), int(rng.integers(1, 5))
        g = random_graph(n, 0.4, rng)
        z = rng.normal(size=(n, d))
        _, dz = reconstruction_loss_and_grad(z, g, mean_scale=mean_scale)
        num = central_diff(lambda v: reconstruction_loss_and_grad(v, g, mean_scale=mean_scale)[0], z)
        assert rel_err(dz, num) < 1e-4


@pytest.mark.parametrize("diag_one", [True, False])
def test_recon_graph_path_matches_dense_oracle(rng, diag_one):
    for _ in range(10):
        n, d = int(rng.integers(2, 30)), int(rng.integers(1, 6))
        g = random_graph(n, 0.3, rng)
        z = rng.normal(size=(n, d))
        loss, dz = reconstruction_loss_and_grad(z, g, diag_one=diag_one)
        t = reconstruction_target(g, diag_one=diag_one)
        ref = np.sum((z @ z.T - t) ** 2) / n**2
        assert loss == pytest.approx(ref, rel=1e-10, abs=1e-14)
        loss_d, dz_d = reconstruction_loss_and_grad(z, t, diag_one=diag_one)
        assert loss_d == pytest.approx(ref, rel=1e-12)
        np.testing.assert_allclose(dz, dz_d, rtol=1e-9, atol=1e-12)


def test_recon_dense_grad_finite_differences(rng):
    n, d = 6, 3
    t = reconstruction_target(random_graph(n, 0.5, rng))
    z = rng.normal(size=(n, d))
    _, dz = reconstruction_loss_and_grad(z, t)
    assert rel_err(dz, central_diff(lambda v: reconstruction_loss_and_grad(v, t)[0], z)) < 1e-4


@pytest.mark.parametrize("mode", ["none", "l2", "minmax"])
def test_normalization_backward_finite_differences(rng, mode):
    for _ in range(10):
        z = rng.normal(size=(int(rng.integers(1, 8)), int(rng.integers(2, 6))))
        g = rng.normal(size=z.shape)
        _, cache = normalize_embedding(z, mode)
        num = central_diff(lambda v: float(np.sum(normalize_embedding(v, mode)[0] * g)), z)
        assert rel_err(normalize_embedding_backward(cache, g), num) < 1e-6


def test_normalization_outputs(rng):
    z = rng.normal(size=(5, 4))
    u, _ = normalize_embedding(z, "l2")
    np.testing.assert_allclose(np.linalg.norm(u, axis=1), 1.0)
    u, _ = normalize_embedding(z, "minmax")
    np.testing.assert_allclose(np.linalg.norm(u, axis=1), 1.0)
    assert u.min() == 0.0
    assert np.all((u @ u.T) >= 0)
    u, _ = normalize_embedding(np.ones((2, 3)), "minmax")
    assert np.all(u == 0)
    with pytest.raises(ValueError):
        normalize_embedding(z, "max")


def test_recon_permutation_equivariant(rng):
    g = random_graph(8, 0.4, rng)
    z = rng.normal(size=(8, 3))
    perm = rng.permutation(8)
    g2 = UndirectedGraph.from_edges(8, perm[g.edges])
    z2 = np.empty_like(z)
    z2[perm] = z
    assert reconstruction_loss_and_grad(z, g)[0] == pytest.approx(reconstruction_loss_and_grad(z2, g2)[0])


def test_recon_node_cap():
    with pytest.raises(MemoryError):
        reconstruction_loss_and_grad(np.zeros((5, 2)), np.zeros((5, 5)), max_nodes=4)


def test_weight_gradient_trivial(rng):
    dz = rng.normal(size=(4, 2))
    assert np.allclose(weight_gradient(np.eye(4), dz), dz)
    assert np.all(weight_gradient(rng.normal(size=(4, 3)), np.zeros((4, 2))) == 0)


def test_weight_gradient_through_composed_loss(rng):
    for _ in range(10):
        n, f, d = 7, 5, 3
        g = random_graph(n, 0.4, rng)
        h = rng.normal(size=(n, f))
        w = rng.normal(size=(f, d)) * 0.5
        _, dz = reconstruction_loss_and_grad(h @ w, g)
        num = central_diff(lambda v: reconstruction_loss_and_grad(h @ v, g)[0], w)
        assert rel_err(weight_gradient(h, dz), num) < 1e-4


def test_adam_zero_grad_keeps_weights(rng):
    w = rng.normal(size=(3, 2))
    out = adam_step(_enc(w), np.zeros_like(w))
    assert np.array_equal(out.weights, w)
    assert out.adam.step == 1


def test_adam_first_step_is_sign(rng):
    w = rng.normal(size=(4, 3))
    g = rng.normal(size=(4, 3))
    out = adam_step(_enc(w, lr=0.01), g)
    assert np.allclose(out.weights - w, -0.01 * np.sign(g), atol=1e-8)


def test_adam_rejects_non_finite(rng):
    with pytest.raises(DivergenceError):
        adam_step(_enc(np.zeros((2, 2))), np.array([[np.nan, 0], [0, 0]]))


def test_adam_minimizes_quadratic():
    # f(x) = sum (x - 3)^2, minimizer 3
    x, state = np.array([0.0, 10.0]), AdamState.zeros_like(np.zeros(2))
    losses = []
    for _ in range(100):
        losses.append(float(((x - 3) ** 2).sum()))
        x, state = adam_update(x, 2 * (x - 3), state, lr=0.1)
    assert all(b < a for a, b in zip(losses[5:], losses[6:]))
    assert state.step == 100
