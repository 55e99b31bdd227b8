import math

import numpy as np
import pytest

from helpers import six_node_dataset
from mgal.errors import DimensionError
from mgal.graphcore import NormalizedGraph, average_graphs, renormalize
from mgal.model import (
    ModelConfig,
    discriminator_forward,
    embed,
    generator_forward,
    head_forward_fc,
    head_forward_gconv,
    init_discriminator,
    init_glorot,
    init_params,
    load_params,
    save_params,
)
from mgal.ndcore import SparseMatrix, Tape, finite_diff_check, make_rng, mul, sum_all


def dense_softmax(x):
    e = np.exp(x - x.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def test_generator_single_node_identity():
    t = Tape()
    g = NormalizedGraph(SparseMatrix.identity(1))
    z = generator_forward(t.const([[0.7, -1.3]]), g, [t.var(np.eye(2))])
    np.testing.assert_array_equal(z.value, [[0.7, -1.3]])


def test_generator_default_shape():
    ds = six_node_dataset()
    X = ds.X[:, :2]
    params = init_params(ModelConfig(), 2, ds.m, ds.c, seed=0)
    assert params["gen.0"].shape == (2, 64) and params["gen.1"].shape == (64, 16)
    Z = embed(params, X, [renormalize(a) for a in ds.views])
    assert [z.shape for z in Z] == [(6, 16), (6, 16)]


def test_generator_shared_weights_identical_graphs():
    ds = six_node_dataset()
    params = init_params(ModelConfig(), ds.d, 2, ds.c, seed=1)
    g = renormalize(ds.views[0])
    z1, z2 = embed(params, ds.X, [g, renormalize(ds.views[0])])
    assert z1.tobytes() == z2.tobytes()


def test_generator_dimension_error():
    t = Tape()
    g = NormalizedGraph(SparseMatrix.identity(2))
    with pytest.raises(DimensionError):
        generator_forward(t.const(np.ones((2, 3))), g, [t.var(np.ones((2, 4)))])


def test_generator_matches_dense_oracle():
    ds = six_node_dataset()
    params = init_params(ModelConfig(gen_hidden=(5, 3)), ds.d, 2, 2, seed=4)
    for a, z in zip(ds.views, embed(params, ds.X, [renormalize(a) for a in ds.views])):
        A = a.to_dense() + np.eye(6)
        dinv = 1 / np.sqrt(A.sum(axis=1))
        S = A * dinv[:, None] * dinv[None, :]
        expect = S @ np.maximum(S @ ds.X @ params["gen.0"], 0) @ params["gen.1"]
        np.testing.assert_allclose(z, expect, rtol=1e-12, atol=1e-14)


def test_discriminator_zero_weights_uniform():
    cfg = ModelConfig()
    params = {k: np.zeros_like(v) for k, v in init_discriminator(cfg, 3, seed=0).items()}
    t = Tape()
    out = discriminator_forward(t.const(np.random.default_rng(0).normal(size=(4, 16))),
                                {k: t.const(v) for k, v in params.items()})
    np.testing.assert_allclose(out.value, np.full((4, 3), 1 / 3), rtol=0, atol=1e-15)


def test_discriminator_rows_sum_to_one():
    params = init_discriminator(ModelConfig(), 2, seed=5)
    t = Tape()
    out = discriminator_forward(t.const(np.random.default_rng(1).normal(size=(20, 16)) * 5),
                                {k: t.const(v) for k, v in params.items()})
    np.testing.assert_allclose(out.value.sum(axis=1), 1.0, atol=1e-12)
    assert np.all((out.value >= 0) & (out.value <= 1))


def test_discriminator_matches_hand_rolled_layers():
    params = init_discriminator(ModelConfig(), 2, seed=9)
    params = {k: v + (0.1 if ".b" in k else 0.0) for k, v in params.items()}
    z = np.linspace(-1, 1, 16).reshape(1, 16)
    h = z
    for i in range(3):
        h = h @ params[f"disc.W{i}"] + params[f"disc.b{i}"]
        if i < 2:
            h = np.maximum(h, 0)
    expect = dense_softmax(h)
    t = Tape()
    got = discriminator_forward(t.const(z), {k: t.const(v) for k, v in params.items()}).value
    np.testing.assert_allclose(got, expect, rtol=1e-13)


def test_discriminator_width_mismatch():
    params = init_discriminator(ModelConfig(), 2, seed=0)
    t = Tape()
    with pytest.raises(DimensionError):
        discriminator_forward(t.const(np.ones((2, 8))), {k: t.const(v) for k, v in params.items()})


def test_head_fc_zero_weight_uniform():
    t = Tape()
    Z = [t.const(np.ones((4, 3))), t.const(np.ones((4, 3)))]
    np.testing.assert_allclose(head_forward_fc(Z, t.var(np.zeros((6, 5)))).value, np.full((4, 5), 0.2), atol=1e-15)


def test_head_fc_single_view_is_plain_softmax():
    rng = np.random.default_rng(2)
    z, w = rng.normal(size=(5, 3)), rng.normal(size=(3, 4))
    t = Tape()
    np.testing.assert_allclose(head_forward_fc([t.const(z)], t.const(w)).value, dense_softmax(z @ w), rtol=1e-14)


def test_head_fc_hand_values():
    t = Tape()
    U = head_forward_fc([t.const([[1.0]]), t.const([[2.0]])], t.const([[1.0, 0.0], [0.0, 1.0]])).value
    e = math.e
    np.testing.assert_allclose(U, [[1 / (1 + e), e / (1 + e)]], rtol=1e-15)


def test_head_fc_dimension_error():
    t = Tape()
    with pytest.raises(DimensionError):
        head_forward_fc([t.const(np.ones((2, 3)))], t.const(np.ones((4, 2))))


def test_head_gconv_isolated_nodes_equals_fc():
    rng = np.random.default_rng(3)
    t = Tape()
    Z = [t.const(rng.normal(size=(4, 2))), t.const(rng.normal(size=(4, 2)))]
    W = t.const(rng.normal(size=(4, 3)))
    g = renormalize(SparseMatrix.zeros(4, 4))
    np.testing.assert_array_equal(head_forward_gconv(Z, W, g).value, head_forward_fc(Z, W).value)


def test_head_gconv_identical_views_average_is_view():
    ds = six_node_dataset()
    a = ds.views[0]
    avg = average_graphs([a, a])
    np.testing.assert_array_equal(avg.to_dense(), a.to_dense())
    rng = np.random.default_rng(4)
    t = Tape()
    Z = [t.const(rng.normal(size=(6, 2)))] * 2
    W = t.const(rng.normal(size=(4, 2)))
    np.testing.assert_array_equal(head_forward_gconv(Z, W, renormalize(avg)).value,
                                  head_forward_gconv(Z, W, renormalize(a)).value)


def test_head_gconv_path_dense_oracle():
    A = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
    rng = np.random.default_rng(5)
    z1, z2, w = rng.normal(size=(3, 2)), rng.normal(size=(3, 2)), rng.normal(size=(4, 3))
    At = A + np.eye(3)
    S = At / np.sqrt(np.outer(At.sum(1), At.sum(1)))
    expect = dense_softmax(S @ np.hstack([z1, z2]) @ w)
    t = Tape()
    got = head_forward_gconv([t.const(z1), t.const(z2)], t.const(w), renormalize(SparseMatrix.from_dense(A)))
    np.testing.assert_allclose(got.value, expect, rtol=1e-13)


def test_glorot_bound_and_range():
    w = init_glorot((1, 2), make_rng(0))
    assert math.sqrt(6 / 3) == pytest.approx(1.4142135623730951)
    assert np.all(np.abs(w) <= math.sqrt(2))


def test_glorot_reproducible():
    np.testing.assert_array_equal(init_glorot((3, 4), make_rng(11)), init_glorot((3, 4), make_rng(11)))


def test_glorot_mean_near_zero():
    b = math.sqrt(6 / (100 + 100))
    w = init_glorot((100, 100), make_rng(2))
    se = (b / math.sqrt(3)) / math.sqrt(w.size)
    assert abs(w.mean()) < 3 * se
    assert np.all(np.abs(w) <= b)


def test_discriminator_biases_start_at_zero():
    params = init_discriminator(ModelConfig(), 4, seed=0)
    assert all(not v.any() for k, v in params.items() if ".b" in k)
    assert params["disc.W2"].shape == (16, 4)


def test_permutation_equivariance():
    ds = six_node_dataset()
    cfg = ModelConfig()
    params = init_params(cfg, ds.d, 2, 2, seed=3)
    perm = np.array([3, 0, 5, 1, 4, 2])
    P = np.eye(6)[perm]

    def run(X, views):
        graphs = [renormalize(a) for a in views]
        Z = embed(params, X, graphs)
        t = Tape()
        U = head_forward_fc([t.const(z) for z in Z], t.const(params["head.W"])).value
        return Z, U

    Z, U = run(ds.X, ds.views)
    pviews = [SparseMatrix.from_dense(P @ a.to_dense() @ P.T) for a in ds.views]
    Zp, Up = run(ds.X[perm], pviews)
    for z, zp in zip(Z, Zp):
        np.testing.assert_allclose(zp, z[perm], rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(Up, U[perm], rtol=1e-12)


def test_network_outputs_pass_gradient_check():
    ds = six_node_dataset()
    cfg = ModelConfig(gen_hidden=(6, 4), disc_hidden=(5, 3))
    params = init_params(cfg, ds.d, 2, 2, seed=8)
    graphs = [renormalize(a) for a in ds.views]
    weights = np.random.default_rng(0).normal(size=(6, 2))

    def f(t, p):
        gen = [p["gen.0"], p["gen.1"]]
        Z = [generator_forward(t.const(ds.X), g, gen) for g in graphs]
        U = head_forward_fc(Z, p["head.W"])
        D = discriminator_forward(Z[1], {k: v for k, v in p.items() if k.startswith("disc.")})
        return sum_all(mul(U, weights)) + sum_all(mul(D, weights[:, ::-1]))

    report = finite_diff_check(f, params)
    assert report.passed, report


def test_checkpoint_roundtrip_bitwise(tmp_path):
    params = init_params(ModelConfig(), 3, 2, 2, seed=0)
    save_params(tmp_path / "ck.npz", params, meta={"head": "fc"})
    loaded, meta = load_params(tmp_path / "ck.npz")
    assert meta == {"head": "fc"}
    assert loaded.keys() == params.keys()
    for k in params:
        assert loaded[k].tobytes() == params[k].tobytes()
        assert loaded[k].shape == params[k].shape


def test_missing_checkpoint(tmp_path):
    with pytest.raises(FileNotFoundError, match="nope.npz"):
        load_params(tmp_path / "nope.npz")
