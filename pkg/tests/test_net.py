import numpy as np
import pytest

from wbopt.net import (
    DivergenceError,
    MlpParams,
    TrainConfig,
    forward,
    init_params,
    load_params,
    loss_and_grads,
    save_params,
    train,
)


def test_zero_weights_output_is_mean(rng):
    p = init_params(8, rng)
    for k in ("W1", "b1", "W2", "b2", "W3", "b3"):
        getattr(p, k)[...] = 0.0
    p.out_mean = rng.normal(size=15)
    x = rng.normal(size=18)
    assert np.array_equal(forward(p, x), p.out_mean)


def test_linear_single_path_analytic():
    rng = np.random.default_rng(0)
    p = init_params(4, rng, activation="linear")
    for k in ("W1", "b1", "W2", "b2", "W3", "b3"):
        getattr(p, k)[...] = 0.0
    # one active path: x[2] -> unit 1 -> unit 3 -> output 5
    p.W1[1, 2] = 2.0
    p.W2[3, 1] = -1.5
    p.W3[5, 3] = 0.5
    p.b3[5] = 0.25
    x = np.zeros(18)
    x[2] = 1.2
    y = forward(p, x)
    expected = np.zeros(15)
    expected[5] = 0.5 * (-1.5 * (2.0 * 1.2)) + 0.25
    assert np.allclose(y, expected, atol=1e-15)


def test_loss_zero_on_own_outputs(rng):
    p = init_params(16, rng)
    X = rng.normal(size=(6, 18))
    Y = forward(p, X)
    loss, grads = loss_and_grads(p, X, Y)
    assert loss == 0.0
    for k in ("W1", "b1", "W2", "b2", "W3", "b3"):
        assert np.array_equal(getattr(grads, k), np.zeros_like(getattr(grads, k)))


def test_duplicated_batch_invariance(rng):
    p = init_params(12, rng)
    X = rng.normal(size=(5, 18))
    Y = rng.normal(size=(5, 15))
    l1, g1 = loss_and_grads(p, X, Y)
    l2, g2 = loss_and_grads(p, np.vstack([X, X]), np.vstack([Y, Y]))
    assert abs(l1 - l2) < 1e-15
    for k in ("W1", "b1", "W2", "b2", "W3", "b3"):
        assert np.allclose(getattr(g1, k), getattr(g2, k), atol=1e-15)


@pytest.mark.parametrize("seed", range(10))
def test_gradients_match_finite_differences(seed):
    """The repo's canonical autograd check: every coordinate against central
    differences at 1e-4 relative."""
    rng = np.random.default_rng(seed)
    p = init_params(6, rng)
    p.in_mean = rng.normal(size=18) * 0.2
    p.in_std = rng.uniform(0.5, 2.0, 18)
    p.out_mean = rng.normal(size=15) * 0.2
    p.out_std = rng.uniform(0.5, 2.0, 15)
    X = rng.normal(size=(3, 18))
    Y = rng.normal(size=(3, 15))
    _, g = loss_and_grads(p, X, Y)
    h = 1e-6
    for name in ("W1", "b1", "W2", "b2", "W3", "b3"):
        arr = getattr(p, name)
        ga = getattr(g, name)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = arr[idx]
            arr[idx] = old + h
            lp, _ = loss_and_grads(p, X, Y)
            arr[idx] = old - h
            lm, _ = loss_and_grads(p, X, Y)
            arr[idx] = old
            fd = (lp - lm) / (2 * h)
            denom = max(1.0, abs(fd), abs(ga[idx]))
            assert abs(fd - ga[idx]) / denom <= 1e-4


def test_teacher_student_recovery():
    """Recovery of an in-class target function. The teacher's effective input
    dimensionality must be coverable by the 200-sample budget, hence the
    masked first layer."""
    rng = np.random.default_rng(3)
    teacher = init_params(256, rng)
    mask = np.full(18, 0.02)
    mask[:1] = 1.0
    teacher.W1 *= mask[None, :]
    teacher.W2 *= 0.5
    X = rng.uniform(-1, 1, (200, 18))
    Y = forward(teacher, X)
    _, report = train((X, Y), TrainConfig(epochs=500, seed=1, lr=5e-3,
                                          batch_size=32, weight_decay=0.5,
                                          input_noise=0.08))
    assert report.best_val <= 1e-4


def test_constant_target_converges():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(64, 18))
    Y = np.tile(rng.normal(size=15), (64, 1))
    _, report = train((X, Y), TrainConfig(epochs=60, seed=0, hidden=32))
    assert report.best_val <= 1e-8


def test_training_determinism():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(50, 18))
    Y = rng.normal(size=(50, 15))
    cfg = TrainConfig(epochs=20, seed=7, hidden=16)
    p1, r1 = train((X, Y), cfg)
    p2, r2 = train((X, Y), cfg)
    for k in ("W1", "b1", "W2", "b2", "W3", "b3"):
        assert np.array_equal(getattr(p1, k), getattr(p2, k))
    assert r1.val_losses == r2.val_losses


def test_divergence_reported_with_epoch():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(40, 18))
    Y = rng.normal(size=(40, 15))
    with pytest.raises(DivergenceError, match="epoch"):
        train((X, Y), TrainConfig(epochs=50, seed=0, lr=1e80, hidden=8,
                                  head_refit=False))


def test_save_load_roundtrip(tmp_path, rng):
    p = init_params(32, rng)
    p.in_mean = rng.normal(size=18)
    p.out_mean = rng.normal(size=15)
    path = str(tmp_path / "params.json")
    save_params(p, path)
    q = load_params(path)
    X = rng.normal(size=(10, 18))
    assert np.array_equal(forward(p, X), forward(q, X))


def test_load_rejects_corrupt_and_mismatched(tmp_path, rng):
    path = str(tmp_path / "bad.json")
    with open(path, "w") as f:
        f.write("{not json")
    with pytest.raises(ValueError, match="JSON"):
        load_params(path)

    p = init_params(8, rng)
    good = str(tmp_path / "good.json")
    save_params(p, good)
    import json
    doc = json.load(open(good))
    doc["dims"] = [17, 8, 8, 15]
    doc["W1"] = [row[:-1] for row in doc["W1"]]
    open(good, "w").write(json.dumps(doc))
    with pytest.raises(ValueError, match="dims"):
        load_params(good)


def test_forward_input_validation(rng):
    p = init_params(8, rng)
    with pytest.raises(ValueError, match="dim"):
        forward(p, np.zeros(17))
    with pytest.raises(ValueError, match="finite"):
        forward(p, np.full(18, np.nan))


def test_params_validation(rng):
    p = init_params(8, rng)
    with pytest.raises(ValueError, match="std"):
        MlpParams(W1=p.W1, b1=p.b1, W2=p.W2, b2=p.b2, W3=p.W3, b3=p.b3,
                  in_mean=p.in_mean, in_std=np.zeros(18),
                  out_mean=p.out_mean, out_std=p.out_std)
