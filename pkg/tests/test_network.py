import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asset_health import network as N

from gradcheck import draw_inputs, fd_check


def test_softmax_examples():
    assert np.allclose(N.softmax(np.zeros(5)), 0.2)
    p = N.softmax([1000.0, 0.0])
    assert np.isfinite(p).all() and p[0] == 1.0
    assert np.allclose(N.softmax([math.log(1), math.log(3)]), [0.25, 0.75], atol=1e-15)


@given(st.lists(st.floats(-50, 50), min_size=2, max_size=8), st.floats(-100, 100))
def test_softmax_shift_invariant(z, c):
    p = N.softmax(z)
    assert abs(p.sum() - 1) <= 1e-12
    assert np.allclose(p, N.softmax(np.array(z) + c), atol=1e-12)


def test_cross_entropy_examples():
    assert N.cross_entropy([0, 0, 1, 0, 0], 2) == 0.0
    assert N.cross_entropy(np.full(5, 0.2), 0) == pytest.approx(math.log(5), abs=1e-15)
    assert N.cross_entropy([1, 0, 0, 0, 0], 3) == pytest.approx(27.631021115928547, abs=1e-12)


def _zeroed(model):
    for v in model.params.values():
        v[...] = 0.0
    return model


def test_zero_weights_give_uniform_output():
    m = _zeroed(N.SequenceClassifier.init(N.ClassifierConfig(3, 4, (5, 5))))
    p, _ = m.forward(np.random.default_rng(0).normal(size=(2, 4, 3)))
    assert np.allclose(p, 0.2, atol=1e-15)
    f = _zeroed(N.FnnBaseline.init(N.FnnConfig(3, (4,))))
    assert np.allclose(f.forward(np.ones(3))[0], 0.2, atol=1e-15)


def test_single_cell_hand_oracle():
    m = N.SequenceClassifier.init(N.ClassifierConfig(1, 1, (1,)))
    w = [0.5, -0.3, 0.8, 1.2]  # i, f, o, g
    b = [0.1, 1.0, -0.2, 0.05]
    m.params["lstm0.W"][:, 0] = w
    m.params["lstm0.b"][:] = b
    m.params["out.W"][:, 0] = [1.0, -1.0, 0.5, 0.0, 2.0]
    m.params["out.b"][:] = [0.0, 0.1, 0.0, -0.1, 0.0]
    x = 0.7
    sig = lambda v: 1 / (1 + math.exp(-v))
    i, f, o = sig(w[0] * x + b[0]), sig(w[1] * x + b[1]), sig(w[2] * x + b[2])
    g = math.tanh(w[3] * x + b[3])
    h = o * math.tanh(i * g)  # c_prev = 0
    logits = [a * h + c for a, c in zip([1.0, -1.0, 0.5, 0.0, 2.0], [0.0, 0.1, 0.0, -0.1, 0.0])]
    e = [math.exp(v) for v in logits]
    want = [v / sum(e) for v in e]
    got, _ = m.forward([[x]])
    assert np.allclose(got, want, atol=1e-14)


def test_batch_permutation_invariance():
    m = N.SequenceClassifier.init(N.ClassifierConfig(3, 3, (4, 4)), seed=1)
    X = np.random.default_rng(1).normal(size=(6, 3, 3))
    perm = np.array([3, 0, 5, 1, 4, 2])
    assert np.allclose(m.forward(X)[0][perm], m.forward(X[perm])[0], atol=1e-15)
    single = np.stack([m.forward(x)[0] for x in X])
    assert np.allclose(single, m.forward(X)[0], atol=1e-15)


def test_output_layer_gradient_closed_form():
    m = N.SequenceClassifier.init(N.ClassifierConfig(2, 2, (3,)), seed=2)
    x = np.random.default_rng(2).normal(size=(2, 2))
    p, cache = m.forward(x)
    g = m.backward(cache, [1])
    onehot = np.eye(5)[1]
    h = cache["head_in"][0]
    assert np.allclose(g["out.W"], np.outer(p - onehot, h), atol=1e-15)
    assert np.allclose(g["out.b"], p - onehot, atol=1e-15)


def test_floored_loss_has_zero_gradient():
    m = N.FnnBaseline.init(N.FnnConfig(2, ()), seed=0)
    m.params["out.W"][:] = 0.0
    m.params["out.b"][:] = [200.0, 0, 0, 0, 0]  # p(class 4) ~ e^-200 < floor
    _, cache = m.forward(np.ones(2))
    g = m.backward(cache, [4])
    assert g.loss == pytest.approx(-math.log(1e-12))
    assert all(np.all(v == 0) for v in g.grads.values())


def test_cache_from_other_model_rejected():
    cfg = N.ClassifierConfig(2, 2, (3,))
    a, b = N.SequenceClassifier.init(cfg, 0), N.SequenceClassifier.init(cfg, 1)
    _, cache = a.forward(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        b.backward(cache, [0])


# -- finite-difference gradient checks ---------------------------------------


@pytest.mark.parametrize("seed", range(10))
def test_lstm_gradient_check(seed):
    rng = np.random.default_rng(seed)
    m = N.SequenceClassifier.init(N.ClassifierConfig(3, 3, (4, 4)), seed=seed)
    X = rng.normal(size=(4, 3, 3))
    assert fd_check(m, X, rng.integers(0, 5, size=4)) < 1e-4


@pytest.mark.parametrize("seed", range(3))
def test_lstm_dense_head_gradient_check(seed):
    rng = np.random.default_rng(100 + seed)
    m = N.SequenceClassifier.init(N.ClassifierConfig(3, 3, (4, 4), dense_relu_width=4), seed=seed)
    X = draw_inputs(m, (4, 3, 3), rng)
    assert fd_check(m, X, rng.integers(0, 5, size=4)) < 1e-4


@pytest.mark.parametrize("seed", range(10))
def test_fnn_gradient_check(seed):
    rng = np.random.default_rng(seed)
    m = N.FnnBaseline.init(N.FnnConfig(3, (4, 4)), seed=seed)
    # nonzero biases keep all-dead layers from pinning pre-activations at 0
    for k in ("fc0.b", "fc1.b"):
        m.params[k][:] = rng.normal(scale=0.1, size=m.params[k].shape)
    X = draw_inputs(m, (4, 3), rng)
    assert fd_check(m, X, rng.integers(0, 5, size=4)) < 1e-4


# -- initialisation and serialisation ---------------------------------------


def test_init_rules():
    cfg = N.ClassifierConfig(6, 2, (10, 10))
    a, b = N.SequenceClassifier.init(cfg, 5), N.SequenceClassifier.init(cfg, 5)
    assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)
    assert np.array_equal(a.params["lstm0.b"][10:20], np.ones(10))
    assert np.count_nonzero(a.params["lstm0.b"]) == 10
    s = math.sqrt(6 / (6 + 10))
    assert np.abs(a.params["lstm0.W"]).max() <= s
    assert a.params["lstm0.W"].shape == (40, 6) and a.params["lstm1.W"].shape == (40, 10)
    assert a.params["out.W"].shape == (5, 10)
    c = N.SequenceClassifier.init(cfg, 6)
    assert not np.array_equal(a.params["lstm0.W"], c.params["lstm0.W"])


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 4), st.integers(1, 5))
def test_serialization_round_trip(seed, T, d):
    import json

    m = N.SequenceClassifier.init(N.ClassifierConfig(d, T, (3, 2), dense_relu_width=4), seed)
    back = N.model_from_dict(json.loads(m.to_json()))
    assert back.to_json() == m.to_json()
    X = np.random.default_rng(seed).normal(size=(3, T, d))
    assert np.array_equal(back.forward(X)[0], m.forward(X)[0])
    f = N.FnnBaseline.init(N.FnnConfig(d, (3,)), seed)
    assert N.model_from_dict(json.loads(f.to_json())).to_json() == f.to_json()


def test_from_dict_rejects_bad_shapes():
    d = N.SequenceClassifier.init(N.ClassifierConfig(2, 2, (3,))).to_dict()
    d["params"]["out.W"] = [[0.0] * 3] * 4
    with pytest.raises(ValueError, match="out.W"):
        N.model_from_dict(d)


def test_forward_finite_for_extreme_inputs():
    m = N.SequenceClassifier.init(N.ClassifierConfig(3, 2, (4, 4)), seed=0)
    p, _ = m.forward(np.full((2, 2, 3), 1e6))
    assert np.isfinite(p).all() and np.allclose(p.sum(-1), 1)
