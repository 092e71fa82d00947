import numpy as np
import pytest

from clusterprune.core import ContractError, EmbeddingMatrix, LabelVector, gather, gather_labels, identity_keeplist
from clusterprune.metrics import accuracy, cross_entropy
from clusterprune.probe import (
    ProbeConfig,
    ProbeModel,
    learning_curve,
    loss_and_gradient,
    predict_probs,
    read_curve,
    train_probe,
    write_curve,
)
from clusterprune.pruner import prune_random, subsample
from clusterprune.rng import cell_seed, make_rng, splitmix64
from clusterprune.synth import MixtureSpec, make_mixture


def two_blobs(n_per=100, gap=1.0, seed=0):
    rng = make_rng(seed)
    left = rng.normal(-gap, 0.1, size=(n_per, 1))
    right = rng.normal(gap, 0.1, size=(n_per, 1))
    X = EmbeddingMatrix(np.vstack([left, right]).astype(np.float32))
    y = LabelVector(np.array([0] * n_per + [1] * n_per, dtype=np.uint32), 2)
    return X, y


def test_separable_classes_reach_full_training_accuracy():
    X, y = two_blobs()
    model = train_probe(X, y, ProbeConfig(seed=3))
    assert accuracy(predict_probs(model, X), y) == 1.0


def test_no_signal_accuracy_near_chance():
    X = EmbeddingMatrix(np.ones((200, 4), dtype=np.float32))
    y = LabelVector(np.array([0] * 100 + [1] * 100, dtype=np.uint32), 2)
    model = train_probe(X, y, ProbeConfig(seed=9, epochs=50))
    acc = accuracy(predict_probs(model, X), y)
    assert abs(acc - 0.5) <= 0.1


def test_full_batch_loss_nonincreasing_per_epoch():
    # With a shared seed, a run of e epochs is a prefix of a run of e+1, so
    # separately trained models trace one descent trajectory.
    X, y = two_blobs(n_per=20, seed=4)
    cfg = ProbeConfig(batch_size=40, seed=11)
    losses = []
    for epochs in range(1, 11):
        model = train_probe(X, y, ProbeConfig(epochs=epochs, batch_size=40, seed=11))
        loss, _, _ = loss_and_gradient(
            model.weights, model.bias, X.as_float64(), y.class_ids.astype(np.int64),
            cfg.l2_penalty,
        )
        losses.append(loss)
    assert np.all(np.diff(losses) <= 1e-12)


def test_gradient_check_against_central_differences():
    rng = make_rng(42)
    x = rng.standard_normal((8, 3))
    ids = rng.integers(0, 3, 8)
    weights = rng.standard_normal((3, 3)) * 0.5
    bias = rng.standard_normal(3) * 0.1
    l2 = 1e-4
    _, d_weights, d_bias = loss_and_gradient(weights, bias, x, ids, l2)

    h = 1e-5
    num_w = np.zeros_like(weights)
    for i in range(3):
        for j in range(3):
            wp, wm = weights.copy(), weights.copy()
            wp[i, j] += h
            wm[i, j] -= h
            num_w[i, j] = (
                loss_and_gradient(wp, bias, x, ids, l2)[0]
                - loss_and_gradient(wm, bias, x, ids, l2)[0]
            ) / (2 * h)
    num_b = np.zeros_like(bias)
    for i in range(3):
        bp, bm = bias.copy(), bias.copy()
        bp[i] += h
        bm[i] -= h
        num_b[i] = (
            loss_and_gradient(weights, bp, x, ids, l2)[0]
            - loss_and_gradient(weights, bm, x, ids, l2)[0]
        ) / (2 * h)

    analytic = np.concatenate([d_weights.ravel(), d_bias])
    numeric = np.concatenate([num_w.ravel(), num_b])
    rel = np.linalg.norm(analytic - numeric) / max(
        np.linalg.norm(analytic), np.linalg.norm(numeric)
    )
    assert rel <= 1e-5


def test_predict_probs_rows_sum_to_one():
    rng = make_rng(1)
    model = ProbeModel(weights=rng.standard_normal((5, 8)) * 50, bias=rng.standard_normal(5))
    X = EmbeddingMatrix(rng.standard_normal((64, 8)).astype(np.float32))
    probs = predict_probs(model, X)
    assert np.abs(probs.sum(axis=1) - 1.0).max() <= 1e-9


def test_zero_model_is_uniform():
    model = ProbeModel(weights=np.zeros((4, 3)), bias=np.zeros(4))
    X = EmbeddingMatrix(np.ones((5, 3), dtype=np.float32))
    probs = predict_probs(model, X)
    assert np.abs(probs - 0.25).max() <= 1e-15


def test_logit_shift_invariance():
    rng = make_rng(2)
    weights = rng.standard_normal((3, 4))
    bias = rng.standard_normal(3)
    X = EmbeddingMatrix(rng.standard_normal((10, 4)).astype(np.float32))
    p1 = predict_probs(ProbeModel(weights=weights, bias=bias), X)
    p2 = predict_probs(ProbeModel(weights=weights, bias=bias + 123.456), X)
    assert np.abs(p1 - p2).max() <= 1e-12


def test_saturation_toward_class_zero():
    model = ProbeModel(weights=np.array([[50.0], [0.0]]), bias=np.zeros(2))
    X = EmbeddingMatrix(np.array([[1.0]], dtype=np.float32))
    probs = predict_probs(model, X)
    assert probs[0, 0] >= 0.99


def test_train_probe_deterministic():
    X, y = two_blobs(seed=6)
    a = train_probe(X, y, ProbeConfig(seed=7, epochs=10))
    b = train_probe(X, y, ProbeConfig(seed=7, epochs=10))
    assert np.array_equal(a.weights, b.weights)
    assert np.array_equal(a.bias, b.bias)


def test_train_probe_needs_enough_samples():
    X = EmbeddingMatrix(np.zeros((2, 3), dtype=np.float32))
    y = LabelVector(np.array([0, 1], dtype=np.uint32), 4)
    with pytest.raises(ContractError):
        train_probe(X, y, ProbeConfig())


def _curve_fixture():
    train_X, train_y = make_mixture(MixtureSpec(3, 8, 80, seed=5, means_seed=50))
    test_X, test_y = make_mixture(MixtureSpec(3, 8, 30, seed=6, means_seed=50))
    kl = prune_random(train_X.n_samples, 0.1, seed=2)
    return train_X, train_y, test_X, test_y, kl


def test_curve_single_repeat_full_size_matches_direct_run():
    train_X, train_y, test_X, test_y, kl = _curve_fixture()
    cfg = ProbeConfig(epochs=5, seed=21)
    curve = learning_curve(
        train_X, train_y, kl, test_X, test_y, [kl.n_kept], repeats=1, cfg=cfg
    )
    point = curve.points[0]
    assert point.std_loss == 0.0 and point.std_acc == 0.0

    seed = cell_seed(cfg.seed, 0, 0)
    sub = subsample(kl, kl.n_kept, seed=seed)
    from dataclasses import replace

    model = train_probe(
        gather(train_X, sub), gather_labels(train_y, sub), replace(cfg, seed=splitmix64(seed))
    )
    probs = predict_probs(model, test_X)
    assert point.mean_loss == cross_entropy(probs, test_y)
    assert point.mean_acc == accuracy(probs, test_y)


def test_curve_more_data_helps_on_separable_mixture():
    train_X, train_y = make_mixture(MixtureSpec(10, 64, 200, seed=11, means_seed=90))
    test_X, test_y = make_mixture(MixtureSpec(10, 64, 40, seed=12, means_seed=90))
    kl = identity_keeplist(train_X.n_samples)
    curve = learning_curve(
        train_X, train_y, kl, test_X, test_y, [50, 1000], repeats=3,
        cfg=ProbeConfig(epochs=30, seed=8),
    )
    assert curve.points[-1].mean_loss <= curve.points[0].mean_loss


def test_curve_deterministic_files(tmp_path):
    train_X, train_y, test_X, test_y, kl = _curve_fixture()
    cfg = ProbeConfig(epochs=3, seed=13)
    paths = []
    for name in ("a.csv", "b.csv"):
        curve = learning_curve(
            train_X, train_y, kl, test_X, test_y, [20, 40], repeats=2, cfg=cfg
        )
        path = tmp_path / name
        write_curve(curve, path)
        paths.append(path)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_curve_round_trip(tmp_path):
    train_X, train_y, test_X, test_y, kl = _curve_fixture()
    curve = learning_curve(
        train_X, train_y, kl, test_X, test_y, [20, 40], repeats=2,
        cfg=ProbeConfig(epochs=3, seed=13),
    )
    path = tmp_path / "c.csv"
    write_curve(curve, path)
    back = read_curve(path)
    assert back == curve


def test_curve_rejects_oversized_grid_entry():
    train_X, train_y, test_X, test_y, kl = _curve_fixture()
    with pytest.raises(ContractError, match="exceeds keep-list size"):
        learning_curve(
            train_X, train_y, kl, test_X, test_y, [kl.n_kept + 1], repeats=1,
            cfg=ProbeConfig(seed=0),
        )


def test_curve_rejects_duplicate_grid():
    train_X, train_y, test_X, test_y, kl = _curve_fixture()
    with pytest.raises(ContractError, match="duplicate"):
        learning_curve(
            train_X, train_y, kl, test_X, test_y, [20, 20], repeats=1,
            cfg=ProbeConfig(seed=0),
        )
