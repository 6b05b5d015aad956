"""Training loop (Adam on a half-MSE objective, RMSE reporting) and pruning.

A run splits the dataset 70/15/15 with the config seed, fits the input
normalizer on the training split only, then takes Adam steps on the whole
training batch (or seeded minibatches).  Validation RMSE is tracked every
step; the best-validation model is what a run returns.  NaN anywhere in
the loss or parameters aborts with the offending step in the message.

Pruning scores every active edge by the standard deviation of its DR
output over the training inputs, drops edges scoring below tau times the
network-wide maximum, cascades unit removal downstream, and fine-tunes
the survivors.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, train_val_test_split, write_csv_rows
from .network import (
    Model,
    NetworkSpec,
    _forward_pass,
    fit_input_norm,
    init_model,
    network_backward,
    network_forward,
    param_count,
)


class TrainingDivergedError(RuntimeError):
    """Loss or parameters went non-finite during optimization."""


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int | None = None  # None = full training batch
    max_steps: int = 2000
    seed: int = 0
    early_stop_patience: int = 500
    prune_threshold: float = 0.05

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        for name in ("beta1", "beta2"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must be in (0, 1), got {v}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1 (or None for full batch)")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.early_stop_patience < 1:
            raise ValueError("early_stop_patience must be >= 1")
        if not 0 <= self.prune_threshold:
            raise ValueError("prune_threshold must be >= 0")


@dataclass
class TrainHistory:
    """Per-step RMSE curves plus wall-clock, and where the best model sat."""

    steps: list = field(default_factory=list)
    train_rmse: list = field(default_factory=list)
    val_rmse: list = field(default_factory=list)
    elapsed_ms: list = field(default_factory=list)
    best_step: int = -1
    best_val_rmse: float = float("inf")
    model: Model | None = None

    def record(self, step, tr, vr, ms):
        self.steps.append(int(step))
        self.train_rmse.append(float(tr))
        self.val_rmse.append(float(vr))
        self.elapsed_ms.append(float(ms))

    def save_csv(self, path) -> None:
        rows = zip(self.steps, self.train_rmse, self.val_rmse, self.elapsed_ms)
        write_csv_rows(path, ["step", "train_rmse", "val_rmse", "elapsed_ms"],
                       [list(r) for r in rows])


def rmse(predictions, targets) -> float:
    """sqrt(mean((p - t)^2)); rejects empty input."""
    p = np.asarray(predictions, dtype=np.float64).reshape(-1)
    t = np.asarray(targets, dtype=np.float64).reshape(-1)
    if p.size == 0 or t.size == 0:
        raise ValueError("rmse of empty arrays is undefined")
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {t.shape}")
    return float(np.sqrt(np.mean((p - t) ** 2)))


@dataclass
class AdamState:
    """First/second moment accumulators, one pair per parameter array."""

    m: list
    v: list

    @classmethod
    def for_params(cls, params) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params])


def adam_step(params, grads, state: AdamState, config: TrainConfig,
              step_index: int):
    """One in-place Adam update; ``step_index`` starts at 1 (bias correction)."""
    if step_index < 1:
        raise ValueError("step_index starts at 1")
    b1, b2 = config.beta1, config.beta2
    bc1 = 1.0 - b1**step_index
    bc2 = 1.0 - b2**step_index
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        p -= config.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + config.epsilon)
    return params, state


def _as_xy(dataset):
    if isinstance(dataset, Dataset):
        return dataset.X, dataset.y, dataset.splits
    X, y = dataset
    return (np.atleast_2d(np.asarray(X, dtype=np.float64)),
            np.asarray(y, dtype=np.float64).reshape(-1), None)


def _model_params(model: Model):
    """Flat list of trainable arrays; the dense pair rides along as one
    2-vector that is synced back to the model after each step."""
    params = list(model.thetas)
    if model.spec.dense_head:
        params.append(np.array([model.dense_w, model.dense_b]))
    return params


def _sync_dense(model: Model, params) -> None:
    if model.spec.dense_head:
        model.dense_w = float(params[-1][0])
        model.dense_b = float(params[-1][1])


def _grad_list(model: Model, grads):
    gs = list(grads.thetas)
    if model.spec.dense_head:
        gs.append(np.array([grads.dense_w, grads.dense_b]))
    return gs


def _check_finite(step: int, loss: float, params) -> None:
    if not np.isfinite(loss):
        raise TrainingDivergedError(f"loss became non-finite at step {step}")
    for p in params:
        if not np.all(np.isfinite(p)):
            raise TrainingDivergedError(f"parameters became non-finite at step {step}")


def _fit(model: Model, X_tr, y_tr, X_val, y_val, config: TrainConfig,
         max_steps: int, patience: int | None, history: TrainHistory) -> Model:
    """Shared optimizer core: mutates ``model``, records history, returns a
    copy of the best-validation model."""
    params = _model_params(model)
    state = AdamState.for_params(params)
    rng = np.random.default_rng(config.seed)
    n_tr = X_tr.shape[0]
    bs = config.batch_size
    order = None
    cursor = 0
    best = model.copy()
    best_val = np.inf
    best_step = -1
    t0 = time.perf_counter()
    # each step records RMSE of the parameters entering the step, then updates;
    # full-batch runs reuse the backward pass's own predictions for train RMSE
    for step in range(1, max_steps + 1):
        full = bs is None or bs >= n_tr
        if full:
            xb, yb = X_tr, y_tr
        else:
            if order is None or cursor + bs > n_tr:
                order = rng.permutation(n_tr)
                cursor = 0
            take = order[cursor:cursor + bs]
            cursor += bs
            xb, yb = X_tr[take], y_tr[take]
        loss, yhat, grads = network_backward(xb, yb, model)
        tr = rmse(yhat, yb) if full else rmse(network_forward(X_tr, model), y_tr)
        vr = rmse(network_forward(X_val, model), y_val)
        history.record(step, tr, vr, (time.perf_counter() - t0) * 1e3)
        if vr < best_val:
            best_val = vr
            best_step = step
            best = model.copy()
        if patience is not None and step - best_step >= patience:
            break
        adam_step(params, _grad_list(model, grads), state, config, step)
        _sync_dense(model, params)
        _check_finite(step, loss, params)
    history.best_step = best_step
    history.best_val_rmse = float(best_val)
    return best


def train(dataset, spec: NetworkSpec, config: TrainConfig | None = None):
    """Train a fresh model from ``spec`` on ``dataset``.

    ``dataset`` is a data.Dataset (its splits are used when present) or an
    (X, y) pair (split 70/15/15 with config.seed).  Returns
    (best_model, TrainHistory); the history also references the best model.
    """
    config = config or TrainConfig()
    X, y, splits = _as_xy(dataset)
    if X.shape[0] < 3:
        raise ValueError("dataset too small to split")
    if X.shape[1] != spec.input_dim:
        raise ValueError(
            f"spec.input_dim={spec.input_dim} but dataset has {X.shape[1]} features")
    if splits is None:
        splits = train_val_test_split(X.shape[0], config.seed)
    X_tr, y_tr = X[splits["train"]], y[splits["train"]]
    X_val, y_val = X[splits["val"]], y[splits["val"]]

    model = init_model(spec)
    model.input_norm = fit_input_norm(X_tr)
    history = TrainHistory()
    best = _fit(model, X_tr, y_tr, X_val, y_val, config,
                config.max_steps, config.early_stop_patience, history)
    history.model = best
    return best, history


def edge_scores(model: Model, X_train) -> list:
    """Per-layer arrays (fan_in, units): std of each edge's DR output over
    the training inputs; inactive edges score NaN."""
    _, caches = _forward_pass(model, X_train, want_grads=False)
    return [np.where(active, cache["f"].std(axis=0), np.nan)
            for active, cache in zip(model.edge_active, caches)]


def prune(model: Model, dataset, tau: float | None = None,
          config: TrainConfig | None = None, fine_tune_steps: int = 500) -> Model:
    """Drop low-variance edges, cascade dead units, fine-tune the rest.

    Edges scoring below ``tau`` x (network-wide max score) go inactive; a
    unit with no surviving incoming edges takes its outgoing edges with it.
    If that would disconnect the output, the original model is returned
    unchanged (with a warning).  Fine-tuning runs ``fine_tune_steps`` Adam
    steps on the training split.
    """
    config = config or TrainConfig()
    if tau is None:
        tau = config.prune_threshold
    X, y, splits = _as_xy(dataset)
    if splits is None:
        splits = train_val_test_split(X.shape[0], config.seed)
    X_tr, y_tr = X[splits["train"]], y[splits["train"]]
    X_val, y_val = X[splits["val"]], y[splits["val"]]

    scores = edge_scores(model, X_tr)
    max_score = np.nanmax([np.nanmax(s) if np.any(np.isfinite(s)) else 0.0
                           for s in scores])
    cut = tau * max_score

    pruned = model.copy()
    for k in range(len(pruned.edge_active)):
        keep = pruned.edge_active[k] & ~(scores[k] < cut)
        pruned.edge_active[k] = keep
    # cascade: a unit with no live inputs feeds nothing downstream
    for k in range(len(pruned.edge_active) - 1):
        dead_units = pruned.edge_active[k].sum(axis=0) == 0
        if np.any(dead_units):
            pruned.edge_active[k + 1][dead_units, :] = False
    if pruned.edge_active[-1].sum() == 0:
        warnings.warn("pruning would disconnect the output; returning the "
                      "model unchanged", RuntimeWarning, stacklevel=2)
        return model.copy()

    if param_count(pruned) == param_count(model):
        return pruned  # nothing fell below threshold

    if fine_tune_steps > 0:
        history = TrainHistory()
        pruned = _fit(pruned, X_tr, y_tr, X_val, y_val, config,
                      fine_tune_steps, None, history)
    return pruned
