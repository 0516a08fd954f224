"""Command-adaptation network: a three-weight-layer MLP mapping
(q_upper, rpy, h) -> q_ref_lower.

Plain-numpy forward, manual backprop, Adam. Inputs and outputs are
z-normalized with statistics taken from the training split and stored inside
the params file so inference is self-contained. The hidden nonlinearity is
tanh: smooth extrapolation for out-of-distribution commands is part of the
contract, so a continuously differentiable activation is the default.

Inference (`forward`) never mutates params; training is single-threaded over
minibatches so a (seed, data, config) triple reproduces parameters exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

FORMAT_VERSION = 1
IN_DIM = 18  # 14 arm joints + 3 rpy + 1 height
OUT_DIM = 15


@dataclass
class MlpParams:
    """Three weight layers [18, H, H, 15] plus normalization statistics."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    W3: np.ndarray
    b3: np.ndarray
    in_mean: np.ndarray
    in_std: np.ndarray
    out_mean: np.ndarray
    out_std: np.ndarray
    activation: str = "tanh"

    def __post_init__(self):
        if self.W1.shape[1] != IN_DIM or self.W3.shape[0] != OUT_DIM:
            raise ValueError(f"expected dims [{IN_DIM}, H, H, {OUT_DIM}]")
        H = self.W1.shape[0]
        if self.W2.shape != (H, H) or self.W3.shape[1] != H:
            raise ValueError("inconsistent hidden dims")
        for arr in (self.W1, self.b1, self.W2, self.b2, self.W3, self.b3,
                    self.in_mean, self.in_std, self.out_mean, self.out_std):
            if not np.all(np.isfinite(arr)):
                raise ValueError("non-finite parameters")
        if np.any(self.in_std <= 0) or np.any(self.out_std <= 0):
            raise ValueError("normalization std must be > 0")
        if self.activation not in ("tanh", "linear"):
            raise ValueError(f"unknown activation '{self.activation}'")

    @property
    def hidden(self) -> int:
        return self.W1.shape[0]

    def copy(self) -> "MlpParams":
        return MlpParams(**{k: (v.copy() if isinstance(v, np.ndarray) else v)
                            for k, v in self.__dict__.items()})


def init_params(hidden: int, rng: np.random.Generator, *,
                activation: str = "tanh") -> MlpParams:
    """Xavier-uniform initialization with identity normalization."""
    def layer(nout, nin):
        bound = np.sqrt(6.0 / (nin + nout))
        return rng.uniform(-bound, bound, (nout, nin))

    return MlpParams(
        W1=layer(hidden, IN_DIM), b1=np.zeros(hidden),
        W2=layer(hidden, hidden), b2=np.zeros(hidden),
        W3=layer(OUT_DIM, hidden), b3=np.zeros(OUT_DIM),
        in_mean=np.zeros(IN_DIM), in_std=np.ones(IN_DIM),
        out_mean=np.zeros(OUT_DIM), out_std=np.ones(OUT_DIM),
        activation=activation)


def _act(z: np.ndarray, tag: str) -> np.ndarray:
    return np.tanh(z) if tag == "tanh" else z


def _act_deriv(a: np.ndarray, tag: str) -> np.ndarray:
    # derivative expressed through the activation value
    return 1.0 - a * a if tag == "tanh" else np.ones_like(a)


def forward(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """De-normalized network output; accepts (18,) or (m, 18)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.shape[1] != IN_DIM:
        raise ValueError(f"expected input dim {IN_DIM}, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite input")
    Xn = (X - params.in_mean) / params.in_std
    a1 = _act(Xn @ params.W1.T + params.b1, params.activation)
    a2 = _act(a1 @ params.W2.T + params.b2, params.activation)
    Yn = a2 @ params.W3.T + params.b3
    Y = Yn * params.out_std + params.out_mean
    return Y[0] if single else Y


@dataclass
class Grads:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    W3: np.ndarray
    b3: np.ndarray


def loss_and_grads(params: MlpParams, X: np.ndarray, Y: np.ndarray
                   ) -> tuple[float, Grads]:
    """Mean-squared error over normalized outputs and exact gradients.

    The mean runs over both the batch and the 15 output dims, so duplicating
    a batch leaves loss and gradients unchanged.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    m = X.shape[0]
    tag = params.activation
    Xn = (X - params.in_mean) / params.in_std
    Yn = (Y - params.out_mean) / params.out_std
    a1 = _act(Xn @ params.W1.T + params.b1, tag)
    a2 = _act(a1 @ params.W2.T + params.b2, tag)
    out = a2 @ params.W3.T + params.b3

    diff = out - Yn
    loss = float(np.mean(diff * diff))
    scale = 2.0 / (m * OUT_DIM)
    d_out = scale * diff  # (m, 15)
    gW3 = d_out.T @ a2
    gb3 = d_out.sum(axis=0)
    d2 = (d_out @ params.W3) * _act_deriv(a2, tag)
    gW2 = d2.T @ a1
    gb2 = d2.sum(axis=0)
    d1 = (d2 @ params.W2) * _act_deriv(a1, tag)
    gW1 = d1.T @ Xn
    gb1 = d1.sum(axis=0)
    return loss, Grads(W1=gW1, b1=gb1, W2=gW2, b2=gb2, W3=gW3, b3=gb3)


@dataclass
class TrainConfig:
    epochs: int = 400
    batch_size: int = 64
    lr: float = 2e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 1e-5  # decoupled, applied to weights only
    lr_schedule: str = "cosine"  # or "constant"; Adam bounces without decay
    arm_init_scale: float = 1.0  # scale on W1's q_upper columns at init; 0
    # starts the net as a pure command map and lets the arm dependence grow
    # only where the data supports it
    head_refit: bool = True  # exact ridge refit of the output layer, kept
    head_refit_ridge: float = 1e-6  # only when it improves validation
    input_noise: float = 0.02  # train-time jitter, relative to per-dim std
    val_split: float = 0.2
    seed: int = 0
    hidden: int = 256
    activation: str = "tanh"

    def __post_init__(self):
        if not 0.0 < self.val_split < 1.0:
            raise ValueError("val_split must be in (0, 1)")
        if self.lr <= 0:
            raise ValueError("learning rate must be > 0")


@dataclass
class TrainReport:
    train_losses: list = field(default_factory=list)
    val_losses: list = field(default_factory=list)
    best_epoch: int = -1
    best_val: float = float("inf")

    def to_dict(self) -> dict:
        return {"best_epoch": self.best_epoch, "best_val": self.best_val,
                "train_losses": self.train_losses, "val_losses": self.val_losses}


class DivergenceError(RuntimeError):
    pass


def dataset_arrays(samples) -> tuple[np.ndarray, np.ndarray]:
    """(q_upper, rpy, h) inputs and q_ref_lower targets from dataset records."""
    X = np.array([np.concatenate([s.q_upper, s.rpy, [s.h]]) for s in samples])
    Y = np.array([s.q_ref_lower for s in samples])
    return X, Y


def train(data, config: TrainConfig | None = None,
          augment=None) -> tuple[MlpParams, TrainReport]:
    """Train on a dataset file path, dataset records, or an (X, Y) pair.

    Returns the best-validation-epoch parameters; deterministic per seed
    (shuffling included). `augment`, when given, maps (Xt, Yt) -> enlarged
    arrays and is applied to the training split only, after the split, so
    validation stays leak-free.
    """
    config = config or TrainConfig()
    if isinstance(data, str):
        from .dataset import read_dataset
        X, Y = dataset_arrays(read_dataset(data))
    elif isinstance(data, tuple):
        X, Y = np.asarray(data[0], dtype=float), np.asarray(data[1], dtype=float)
    else:
        X, Y = dataset_arrays(data)
    n = X.shape[0]
    rng = np.random.default_rng(config.seed)
    perm = rng.permutation(n)
    n_val = max(1, int(round(n * config.val_split)))
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    if train_idx.size == 0:
        raise ValueError("not enough samples for the requested split")
    Xt, Yt = X[train_idx], Y[train_idx]
    Xv, Yv = X[val_idx], Y[val_idx]
    if augment is not None:
        Xt, Yt = augment(Xt, Yt)

    params = init_params(config.hidden, rng, activation=config.activation)
    if config.arm_init_scale != 1.0:
        params.W1[:, :14] *= config.arm_init_scale
    params.in_mean = Xt.mean(axis=0)
    params.in_std = np.maximum(Xt.std(axis=0), 1e-6)
    params.out_mean = Yt.mean(axis=0)
    params.out_std = np.maximum(Yt.std(axis=0), 1e-6)

    names = ("W1", "b1", "W2", "b2", "W3", "b3")
    m_adam = {k: np.zeros_like(getattr(params, k)) for k in names}
    v_adam = {k: np.zeros_like(getattr(params, k)) for k in names}
    t = 0
    report = TrainReport()
    best = params.copy()
    nt = Xt.shape[0]
    for epoch in range(config.epochs):
        if config.lr_schedule == "cosine":
            lr = config.lr * 0.5 * (1.0 + np.cos(np.pi * epoch / config.epochs))
        else:
            lr = config.lr
        order = rng.permutation(nt)
        epoch_loss = 0.0
        nb = 0
        for start in range(0, nt, config.batch_size):
            idx = order[start:start + config.batch_size]
            Xb = Xt[idx]
            if config.input_noise:
                Xb = Xb + (config.input_noise * params.in_std
                           ) * rng.standard_normal(Xb.shape)
            loss, grads = loss_and_grads(params, Xb, Yt[idx])
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite loss at epoch {epoch}")
            epoch_loss += loss
            nb += 1
            t += 1
            for k in names:
                g = getattr(grads, k)
                m_adam[k] = config.beta1 * m_adam[k] + (1 - config.beta1) * g
                v_adam[k] = config.beta2 * v_adam[k] + (1 - config.beta2) * g * g
                mh = m_adam[k] / (1 - config.beta1 ** t)
                vh = v_adam[k] / (1 - config.beta2 ** t)
                p = getattr(params, k)
                p[...] -= lr * mh / (np.sqrt(vh) + config.eps)
                if config.weight_decay and k.startswith("W"):
                    # anneal the decay faster than the lr so its bias is
                    # released once the iterate sits in a smooth basin
                    p[...] -= lr * (lr / config.lr) * config.weight_decay * p
        val_loss, _ = loss_and_grads(params, Xv, Yv)
        report.train_losses.append(epoch_loss / max(1, nb))
        report.val_losses.append(val_loss)
        if val_loss < report.best_val:
            report.best_val = val_loss
            report.best_epoch = epoch
            best = params.copy()
    if config.head_refit:
        for ridge in (1e-8, 1e-6, 1e-4, 1e-2, 1.0):
            refit = _refit_head(best, Xt, Yt, ridge)
            val_loss, _ = loss_and_grads(refit, Xv, Yv)
            if val_loss < report.best_val:
                report.best_val = val_loss
                best = refit
    return best, report


def _refit_head(params: MlpParams, Xt: np.ndarray, Yt: np.ndarray,
                ridge: float) -> MlpParams:
    """Exact ridge solve of the output layer on the frozen hidden features.

    Gradient descent leaves the linear head slightly off its optimum; the
    closed-form refit removes that residual (a large win on small datasets).
    The ridge is relative to the mean feature-Gram eigenvalue.
    """
    tag = params.activation
    Xn = (Xt - params.in_mean) / params.in_std
    Yn = (Yt - params.out_mean) / params.out_std
    a1 = _act(Xn @ params.W1.T + params.b1, tag)
    a2 = _act(a1 @ params.W2.T + params.b2, tag)
    A = np.hstack([a2, np.ones((a2.shape[0], 1))])
    G = A.T @ A
    lam = ridge * np.trace(G) / A.shape[1]
    W = np.linalg.solve(G + lam * np.eye(A.shape[1]), A.T @ Yn)  # (H+1, 15)
    out = params.copy()
    out.W3 = W[:-1].T.copy()
    out.b3 = W[-1].copy()
    return out


def save_params(params: MlpParams, path: str) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "dims": [IN_DIM, params.hidden, params.hidden, OUT_DIM],
        "activation": params.activation,
    }
    for k in ("W1", "b1", "W2", "b2", "W3", "b3",
              "in_mean", "in_std", "out_mean", "out_std"):
        doc[k] = getattr(params, k).tolist()  # row-major
    with open(path, "w") as f:
        json.dump(doc, f)


def load_params(path: str) -> MlpParams:
    try:
        with open(path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise ValueError(f"params file is not valid JSON: {e}") from e
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported params format {doc.get('format_version')}")
    dims = doc.get("dims")
    if not dims or dims[0] != IN_DIM or dims[-1] != OUT_DIM:
        raise ValueError(f"params dims {dims} do not match [{IN_DIM}, H, H, {OUT_DIM}]")
    kwargs = {k: np.asarray(doc[k], dtype=float)
              for k in ("W1", "b1", "W2", "b2", "W3", "b3",
                        "in_mean", "in_std", "out_mean", "out_std")}
    return MlpParams(activation=doc.get("activation", "tanh"), **kwargs)
