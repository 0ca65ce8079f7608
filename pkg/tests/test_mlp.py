import warnings

import numpy as np
import pytest

from mutatree.mlp import (
    MlpConfig,
    MlpModel,
    compute_gradients,
    init_mlp,
    load_mlp,
    save_mlp,
    train_mlp,
    _AdamState,
)

from oracles import finite_difference_gradients


def _blob_data(n=400, seed=0):
    rng = np.random.default_rng(seed)
    X0 = rng.normal(loc=(-2.0, -2.0), scale=0.7, size=(n // 2, 2))
    X1 = rng.normal(loc=(2.0, 2.0), scale=0.7, size=(n // 2, 2))
    X = np.vstack([X0, X1])
    y = np.array([0] * (n // 2) + [1] * (n // 2))
    perm = rng.permutation(n)
    return X[perm], y[perm]


def test_separable_blobs_reach_high_accuracy():
    X, y = _blob_data()
    model = train_mlp(
        X, y, MlpConfig(layer_widths=(8, 4), epochs=60, learning_rate=1e-2, seed=1)
    )
    held_X, held_y = _blob_data(seed=99)
    accuracy = (model.predict(held_X) == held_y).mean()
    assert accuracy >= 0.95


def test_zero_epochs_returns_finite_initialization():
    X, y = _blob_data(n=50)
    model = train_mlp(X, y, MlpConfig(layer_widths=(4,), epochs=0, seed=2))
    probs = model.predict_proba(X)
    assert np.isfinite(probs).all()
    assert ((probs > 0) & (probs < 1)).all()


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(5, 4))
    y = rng.integers(0, 2, size=5).astype(float)
    model = init_mlp(4, MlpConfig(layer_widths=(5, 3), seed=4))
    grads_w, grads_b, _ = compute_gradients(model, X, y)
    fd_w, fd_b = finite_difference_gradients(model, X, y, step=1e-5)
    for analytic, numeric in zip(grads_w + grads_b, fd_w + fd_b):
        denom = np.maximum(np.abs(numeric), 1e-8)
        rel = np.abs(analytic - numeric) / denom
        assert rel.max() < 1e-4


def test_all_zero_weights_give_half():
    model = init_mlp(3, MlpConfig(layer_widths=(4,), seed=0))
    for W in model.weights:
        W[:] = 0.0
    for x in (np.zeros(3), np.ones(3), np.array([5.0, -2.0, 0.1])):
        assert model.predict_proba_one(x) == 0.5


def test_hand_computed_single_unit_forward_pass():
    # one hidden ReLU unit: h = relu(0.5*x0 - 0.25*x1 + 0.1); z = 2h - 1
    model = MlpModel(
        layer_widths=(1,),
        weights=[np.array([[0.5], [-0.25]]), np.array([[2.0]])],
        biases=[np.array([0.1]), np.array([-1.0])],
    )
    x = np.array([1.2, 0.4])
    h = max(0.0, 0.5 * 1.2 - 0.25 * 0.4 + 0.1)
    z = 2.0 * h - 1.0
    expected = 1.0 / (1.0 + np.exp(-z))
    assert abs(model.predict_proba_one(x) - expected) < 1e-12


def test_output_strictly_inside_unit_interval():
    rng = np.random.default_rng(5)
    model = init_mlp(4, MlpConfig(layer_widths=(6,), seed=6))
    for W in model.weights:
        W *= 50.0  # force saturated logits
    probs = model.predict_proba(rng.normal(size=(64, 4)) * 100)
    assert (probs > 0.0).all() and (probs < 1.0).all()


def test_adam_zero_gradient_leaves_parameters_unchanged():
    config = MlpConfig(layer_widths=(3,), seed=7)
    model = init_mlp(2, config)
    before_w = [W.copy() for W in model.weights]
    state = _AdamState(model, config)
    zero_w = [np.zeros_like(W) for W in model.weights]
    zero_b = [np.zeros_like(b) for b in model.biases]
    for _ in range(5):
        state.step(model, zero_w, zero_b)
    for W, orig in zip(model.weights, before_w):
        assert np.abs(W - orig).max() <= config.learning_rate * 1e-6


def test_dead_relu_path_scaling_invariance():
    # all-negative first-layer weights and bias: positive inputs are dead
    model = MlpModel(
        layer_widths=(2,),
        weights=[np.array([[-1.0, -2.0]]), np.array([[3.0], [1.0]])],
        biases=[np.array([-0.5, -0.1]), np.array([0.2])],
    )
    p1 = model.predict_proba_one(np.array([1.0]))
    p2 = model.predict_proba_one(np.array([10.0]))
    assert p1 == p2


def test_divergence_raises_with_epoch():
    X, y = _blob_data(n=60)
    with np.errstate(over="ignore", invalid="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        X = X * 1e308  # activations overflow, loss becomes non-finite
        with pytest.raises(RuntimeError, match="diverged at epoch"):
            train_mlp(X, y, MlpConfig(layer_widths=(4,), epochs=2, seed=8))


def test_training_is_deterministic():
    X, y = _blob_data(n=80)
    m1 = train_mlp(X, y, MlpConfig(layer_widths=(6,), epochs=3, seed=9))
    m2 = train_mlp(X, y, MlpConfig(layer_widths=(6,), epochs=3, seed=9))
    for a, b in zip(m1.weights, m2.weights):
        assert np.array_equal(a, b)


def test_width_mismatch_errors():
    model = init_mlp(4, MlpConfig(layer_widths=(3,), seed=10))
    with pytest.raises(ValueError, match="width"):
        model.predict_proba(np.zeros((2, 5)))


def test_validation_history_recorded():
    X, y = _blob_data(n=100)
    model = train_mlp(X, y, MlpConfig(layer_widths=(4,), epochs=4, seed=11))
    assert len(model.history["train_loss"]) == 4
    assert len(model.history["val_loss"]) == 4


def test_persistence_round_trip(tmp_path):
    X, y = _blob_data(n=60)
    model = train_mlp(X, y, MlpConfig(layer_widths=(5, 3), epochs=2, seed=12))
    path = tmp_path / "mlp.json"
    save_mlp(model, path)
    loaded = load_mlp(path)
    probe = np.array([[0.3, -0.8]])
    assert loaded.predict_proba(probe) == model.predict_proba(probe)
