"""Input checks shared by the estimator wrappers."""

import numpy as np
from sklearn.utils.validation import check_array

from .errors import ShapeError


def check_sequences(X, n_features=None, seq_len=None):
    """Validate a ``[n_samples, seq_len, n_features]`` float array."""
    X = check_array(X, allow_nd=True, ensure_2d=False, dtype=np.float64)
    if X.ndim != 3:
        raise ShapeError(f"expected a 3-D array [n_samples, seq_len, n_features], got {X.ndim}-D")
    if n_features is not None and X.shape[2] != n_features:
        raise ShapeError(f"X has {X.shape[2]} features, expected {n_features}")
    if seq_len is not None and X.shape[1] != seq_len:
        raise ShapeError(f"X has {X.shape[1]} time steps, expected {seq_len}")
    return X


def check_targets(y, n_samples):
    y = check_array(y, ensure_2d=False, dtype=np.float64)
    if y.ndim == 1:
        y = y[:, None]
    if y.ndim != 2 or y.shape[0] != n_samples:
        raise ShapeError(f"y must have {n_samples} rows, got shape {y.shape}")
    return y
