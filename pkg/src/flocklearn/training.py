"""Mini-batch training loop and the Adam optimizer.

Windows are shuffled each epoch with the seeded generator, batches of
cfg.batch_size (last partial batch kept) run through the batched engine,
gradients are the arithmetic mean over batch members, and one Adam step is
taken per batch.  Everything is deterministic given (seed, config, data).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ContractError, ShapeError
from .network import (Model, backward_batch, cross_entropy_batch, forward_batch,
                      parameter_list)
from .rng import Rng


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    lookback: int = 30
    hidden_dim: int = 30
    batch_size: int = 10
    epochs: int = 50
    dropout_rate: float = 0.2
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def validate(self) -> None:
        for name in ("lookback", "hidden_dim", "batch_size", "epochs"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if self.learning_rate <= 0.0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(
                f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must fit in 64 unsigned bits, got {self.seed}")


@dataclass
class AdamState:
    """First/second moment accumulators, one pair per parameter array."""

    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    t: int = 0

    @classmethod
    def for_params(cls, params: list) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params], t=0)


def adam_step(params: list, grads: list, state: AdamState,
              cfg: TrainConfig) -> tuple[list, AdamState]:
    """One Adam update, in place on the parameter arrays.

    t <- t+1; m <- b1*m + (1-b1)*g; v <- b2*v + (1-b2)*g^2;
    theta <- theta - lr * (m/(1-b1^t)) / (sqrt(v/(1-b2^t)) + eps).
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeError(
            f"parameter/gradient/moment counts differ: "
            f"{len(params)}/{len(grads)}/{len(state.m)}")
    state.t += 1
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    bc1 = 1.0 - b1 ** state.t
    bc2 = 1.0 - b2 ** state.t
    for theta, g, m, v in zip(params, grads, state.m, state.v):
        if theta.shape != g.shape:
            raise ShapeError(
                f"param shape {theta.shape} != grad shape {g.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        theta -= cfg.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + cfg.adam_eps)
    return params, state


@dataclass
class EpochLog:
    epoch: int
    loss: float
    accuracy: float
    eval_accuracy: float | None = None


def _one_hot_rows(labels: np.ndarray, k: int) -> np.ndarray:
    out = np.zeros((labels.shape[0], k))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def _batch_accuracy(model: Model, X: np.ndarray, y: np.ndarray,
                    batch: int = 512) -> float:
    correct = 0
    for s in range(0, X.shape[0], batch):
        probs, _ = forward_batch(model, X[s:s + batch], training=False)
        correct += int((probs.argmax(axis=1) == y[s:s + batch]).sum())
    return correct / X.shape[0]


def train(model: Model, windows: np.ndarray, labels: np.ndarray,
          cfg: TrainConfig, rng: Rng | None = None,
          eval_windows: np.ndarray | None = None,
          eval_labels: np.ndarray | None = None,
          log_fn=None) -> tuple[Model, list[EpochLog]]:
    """Fit the model in place; returns it with one EpochLog per epoch.

    ``windows`` is (n, m, n_features) of raw (unnormalized) features,
    ``labels`` the matching integer classes.  Loss and accuracy in the log
    come from the training passes themselves (dropout active).  When an
    eval set is supplied, each epoch additionally records accuracy on it
    with dropout off, which is what the per-epoch accuracy summary of the
    evaluation module consumes.
    """
    cfg.validate()
    X = np.asarray(windows, dtype=np.float64)
    y = np.asarray(labels)
    if X.ndim != 3:
        raise ShapeError(f"windows must be 3-D, got shape {X.shape}")
    if X.shape[0] == 0:
        raise ContractError("training set is empty")
    if y.shape != (X.shape[0],):
        raise ShapeError(
            f"labels shape {y.shape} does not match {X.shape[0]} windows")
    y = y.astype(np.int64)
    if y.min() < 0 or y.max() >= model.n_classes:
        raise ContractError(
            f"labels outside [0, {model.n_classes}): {sorted(set(y.tolist()))[:6]}")

    if rng is None:
        rng = Rng(cfg.seed)
    params = parameter_list(model)
    state = AdamState.for_params(params)
    Y = _one_hot_rows(y, model.n_classes)
    n = X.shape[0]
    order = np.arange(n)
    log: list[EpochLog] = []

    for epoch in range(1, cfg.epochs + 1):
        rng.shuffle(order)
        total_loss = 0.0
        correct = 0
        for s in range(0, n, cfg.batch_size):
            idx = order[s:s + cfg.batch_size]
            Xb, Yb = X[idx], Y[idx]
            probs, cache = forward_batch(model, Xb, training=True, rng=rng,
                                         dropout_rate=cfg.dropout_rate)
            total_loss += cross_entropy_batch(probs, Yb) * idx.shape[0]
            correct += int((probs.argmax(axis=1) == y[idx]).sum())
            grads = backward_batch(model, cache, Yb)
            adam_step(params, parameter_list(grads), state, cfg)

        entry = EpochLog(epoch=epoch, loss=total_loss / n, accuracy=correct / n)
        if eval_windows is not None:
            entry.eval_accuracy = _batch_accuracy(model, eval_windows, eval_labels)
        log.append(entry)
        if log_fn is not None:
            log_fn(entry)
    return model, log
