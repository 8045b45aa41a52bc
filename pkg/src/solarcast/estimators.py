"""scikit-learn compatible wrappers around the functional core.

``SequenceScaler`` standardises windowed inputs per feature and
``RNNForecaster`` is the recurrent regressor. Both follow the usual
``fit``/``transform``/``predict`` protocol and expose hyper-parameters via
``get_params``/``set_params``.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_sequences, check_targets
from .features import zscore_stats
from .rnn import RnnDims, predict_batch
from .training import DEFAULT_HIDDEN_DIM, fit_arrays


class SequenceScaler(TransformerMixin, BaseEstimator):
    """Per-feature z-score over every time step of every window.

    Parameters
    ----------
    std_floor : float
        Features whose standard deviation falls below this raise
        :class:`~solarcast.errors.DegenerateFeatureError` in ``fit``.
    """

    def __init__(self, std_floor=1e-8):
        self.std_floor = std_floor

    def fit(self, X, y=None):
        X = check_sequences(X)
        self.mean_, self.scale_ = zscore_stats(X.reshape(-1, X.shape[2]), self.std_floor)
        self.n_features_in_ = X.shape[2]
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        X = check_sequences(X, self.n_features_in_)
        return (X - self.mean_) / self.scale_

    def inverse_transform(self, X):
        check_is_fitted(self, "mean_")
        X = check_sequences(X, self.n_features_in_)
        return X * self.scale_ + self.mean_


class RNNForecaster(RegressorMixin, BaseEstimator):
    """ReLU Elman network regressing targets from the last step of a window.

    Parameters
    ----------
    hidden_dim : int
    epochs : int
    batch_size : int
    learning_rate : float
        Plain SGD step size.
    seed : int
        Seeds both weight initialisation and per-epoch shuffling.

    Attributes
    ----------
    params_ : RnnParams
    dims_ : RnnDims
    train_mse_, test_mse_ : list of float
        Per-epoch losses; ``test_mse_`` is NaN unless ``eval_set`` was given.
    """

    def __init__(self, hidden_dim=DEFAULT_HIDDEN_DIM, epochs=1000, batch_size=100,
                 learning_rate=1e-3, seed=0):
        self.hidden_dim = hidden_dim
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.seed = seed

    def fit(self, X, y, eval_set=None):
        X = check_sequences(X)
        self._y_was_1d = np.ndim(y) == 1
        y = check_targets(y, len(X))
        dims = RnnDims(X.shape[2], self.hidden_dim, 1, y.shape[1], X.shape[1])
        X_test = y_test = None
        if eval_set is not None:
            X_test = check_sequences(eval_set[0], X.shape[2])
            y_test = check_targets(eval_set[1], len(X_test))
        params, report = fit_arrays(
            dims, X, y, X_test, y_test, epochs=self.epochs, batch_size=self.batch_size,
            learning_rate=self.learning_rate, seed=self.seed)
        self.params_ = params
        self.dims_ = dims
        self.train_mse_ = report.train_mse
        self.test_mse_ = report.test_mse
        self.n_features_in_ = X.shape[2]
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        X = check_sequences(X, self.n_features_in_)
        out = predict_batch(self.params_, X)
        return out[:, 0] if self._y_was_1d else out
