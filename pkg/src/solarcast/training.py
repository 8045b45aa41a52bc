"""Mini-batch SGD over windowed samples.

Shuffling draws from a PCG64 generator seeded with ``[seed, 1]``, separate
from the stream used for weight initialisation, so results are reproducible
across platforms for a given numpy version.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, DivergenceError, NumericalError, ShapeError
from .features import DatasetSplit, NormStats, check_horizons
from .rnn import (RnnDims, RnnParams, bptt, forward, init_params, predict_batch,
                  save_checkpoint)

DEFAULT_EPOCHS = 1000
DEFAULT_BATCH_SIZE = 100
DEFAULT_LEARNING_RATE = 1e-3
DEFAULT_HIDDEN_DIM = 15


@dataclass(frozen=True)
class TrainConfig:
    """``mode`` is ``"fixed"`` (one horizon, one output) or ``"multi"``."""

    mode: str = "multi"
    horizons: tuple = (1, 2, 3, 4)
    epochs: int = DEFAULT_EPOCHS
    batch_size: int = DEFAULT_BATCH_SIZE
    learning_rate: float = DEFAULT_LEARNING_RATE
    seed: int = 0
    hidden_dim: int = DEFAULT_HIDDEN_DIM
    checkpoint_every: int = 0

    def __post_init__(self):
        if self.mode not in ("fixed", "multi"):
            raise ConfigurationError(f"unknown training mode {self.mode!r}")
        horizons = check_horizons(self.horizons)
        if self.mode == "fixed" and len(horizons) != 1:
            raise ConfigurationError("fixed-horizon mode takes exactly one horizon")
        if self.epochs < 0:
            raise ConfigurationError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise ConfigurationError("learning_rate must be > 0")
        if self.checkpoint_every < 0:
            raise ConfigurationError("checkpoint_every must be >= 0")

    @classmethod
    def parse_mode(cls, text, **kwargs):
        """Build from ``"fixed:2"`` or ``"multi:1,2,3,4"``."""
        kind, _, rest = text.partition(":")
        if kind not in ("fixed", "multi") or not rest:
            raise ConfigurationError(f"mode must look like fixed:H or multi:H1,H2,..., got {text!r}")
        try:
            horizons = tuple(int(h) for h in rest.split(","))
        except ValueError:
            raise ConfigurationError(f"bad horizon list in {text!r}") from None
        return cls(mode=kind, horizons=horizons, **kwargs)

    @property
    def mode_string(self):
        return f"{self.mode}:{','.join(str(h) for h in self.horizons)}"

    def dims(self, input_dim, seq_len):
        return RnnDims(input_dim, self.hidden_dim, 1, len(self.horizons), seq_len)


@dataclass
class TrainReport:
    train_mse: list = field(default_factory=list)
    test_mse: list = field(default_factory=list)
    wall_time: float = 0.0
    params: Optional[RnnParams] = None

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("epoch", "train_mse", "test_mse"))
            for epoch, (a, b) in enumerate(zip(self.train_mse, self.test_mse), start=1):
                w.writerow((epoch, repr(float(a)), "" if np.isnan(b) else repr(float(b))))

    @classmethod
    def read_csv(cls, path):
        report = cls()
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                report.train_mse.append(float(row["train_mse"]))
                report.test_mse.append(float(row["test_mse"]) if row["test_mse"] else np.nan)
        return report


def sgd_step(params: RnnParams, grads, lr: float) -> RnnParams:
    updated = []
    for name, p, g in zip(("W_hx", "W_hh", "b_h", "W_yh", "b_y"), params.arrays(), grads.arrays()):
        if p.shape != g.shape:
            raise ShapeError(f"gradient for {name} has shape {g.shape}, expected {p.shape}")
        with np.errstate(over="ignore", invalid="ignore"):
            new = p - lr * g
        if not np.isfinite(new).all():
            raise NumericalError(f"non-finite {name} after update; learning rate too high?")
        updated.append(new)
    return RnnParams(*updated)


def _full_pass_mse(params, X, y):
    if len(X) == 0:
        return float("nan")
    return float(np.mean((predict_batch(params, X) - y) ** 2))


def fit_arrays(dims: RnnDims, X, y, X_test=None, y_test=None, *, epochs=DEFAULT_EPOCHS,
               batch_size=DEFAULT_BATCH_SIZE, learning_rate=DEFAULT_LEARNING_RATE, seed=0,
               on_epoch: Optional[Callable[[int, RnnParams], None]] = None):
    """Train from ``[N, T, D]`` inputs and ``[N, O]`` targets.

    Test data is only ever read to record its loss.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 1:
        y = y[:, None]
    if len(X) == 0:
        raise ConfigurationError("empty training set")
    if X.ndim != 3 or X.shape[2] != dims.input_dim or y.shape != (len(X), dims.output_dim):
        raise ShapeError(f"inputs {X.shape} / targets {y.shape} do not match {dims}")
    if X_test is None:
        X_test = np.zeros((0,) + X.shape[1:])
        y_test = np.zeros((0, y.shape[1]))
    X_test = np.asarray(X_test, dtype=np.float64)
    y_test = np.asarray(y_test, dtype=np.float64)
    if y_test.ndim == 1:
        y_test = y_test[:, None]
    if len(X_test) and (X_test.shape[1:] != X.shape[1:] or y_test.shape != (len(X_test), y.shape[1])):
        raise ShapeError(f"test inputs {X_test.shape} / targets {y_test.shape} do not match training")
    if not len(X_test):
        X_test, y_test = np.zeros((0,) + X.shape[1:]), np.zeros((0, y.shape[1]))

    params = init_params(dims, seed)
    shuffle_rng = np.random.Generator(np.random.PCG64([seed, 1]))
    report = TrainReport()
    started = time.perf_counter()
    n = len(X)
    for epoch in range(1, epochs + 1):
        order = shuffle_rng.permutation(n)
        try:
            for s in range(0, n, batch_size):
                batch = order[s:s + batch_size]
                _, grads = bptt(params, forward(params, X[batch]), y[batch])
                params = sgd_step(params, grads, learning_rate)
            train_mse = _full_pass_mse(params, X, y)
        except NumericalError as exc:
            raise DivergenceError(f"training diverged in epoch {epoch}: {exc}", epoch) from exc
        if not np.isfinite(train_mse):
            raise DivergenceError(f"training MSE is not finite in epoch {epoch}", epoch)
        report.train_mse.append(train_mse)
        report.test_mse.append(_full_pass_mse(params, X_test, y_test))
        if on_epoch is not None:
            on_epoch(epoch, params)
    report.wall_time = time.perf_counter() - started
    report.params = params
    return params, report


def train(config: TrainConfig, split: DatasetSplit, checkpoint_path=None):
    """Train on ``split`` according to ``config``; returns ``(params, report)``.

    The horizon columns named by ``config.horizons`` are selected from the
    split's targets. When ``checkpoint_path`` is set the final parameters are
    written there, and also every ``config.checkpoint_every`` epochs.
    """
    missing = [h for h in config.horizons if h not in split.norm.horizons]
    if missing:
        raise ConfigurationError(f"dataset has no targets for horizons {missing}")
    train_w = split.train.select_horizons(config.horizons)
    test_w = split.test.select_horizons(config.horizons)
    dims = config.dims(train_w.inputs.shape[2], train_w.seq_len)

    on_epoch = None
    if checkpoint_path is not None and config.checkpoint_every:
        def save_periodically(epoch, params):
            if epoch % config.checkpoint_every == 0:
                save_checkpoint(checkpoint_path, params, dims)
        on_epoch = save_periodically

    params, report = fit_arrays(
        dims, train_w.inputs, train_w.targets, test_w.inputs, test_w.targets,
        epochs=config.epochs, batch_size=config.batch_size,
        learning_rate=config.learning_rate, seed=config.seed, on_epoch=on_epoch)
    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, params, dims)
    return params, report


def predict(params: RnnParams, window, stats: NormStats, clearsky_at_horizons, kt_max=2.0):
    """Forecast from one normalised ``[T, D]`` window.

    Returns ``(kt, ghi)`` arrays, one entry per output: the hour-mean clear-sky
    index clipped to ``[0, kt_max]`` and the corresponding GHI in W/m2.
    """
    window = np.asarray(window, dtype=np.float64)
    expected_d = params.W_hx.shape[1]
    if window.ndim != 2 or window.shape[1] != expected_d:
        raise ShapeError(f"window must be [T, {expected_d}], got {window.shape}")
    n_out = params.W_yh.shape[0]
    if len(stats.target_mean) != n_out:
        raise ShapeError(f"statistics cover {len(stats.target_mean)} horizons, model has {n_out}")
    cs = np.asarray(clearsky_at_horizons, dtype=np.float64).reshape(-1)
    if cs.shape != (n_out,):
        raise ShapeError(f"need {n_out} clear-sky values, got {cs.shape}")
    kt = np.clip(stats.denormalize_targets(forward(params, window).output), 0.0, kt_max)
    return kt, kt * cs
