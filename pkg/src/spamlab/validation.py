"""Input validation shared by the estimators."""

import numpy as np

from .corpus import LEGIT, SPAM


def spam_mask(y, n_expected: int | None = None) -> np.ndarray:
    """Normalize class labels to a boolean spam mask.

    Accepts the string labels ``"spam"``/``"legit"`` or binary values where
    1/True means spam.
    """
    values = list(y)
    if n_expected is not None and len(values) != n_expected:
        raise ValueError(f"expected {n_expected} labels, got {len(values)}")
    mask = np.empty(len(values), dtype=bool)
    for i, v in enumerate(values):
        if v == SPAM or (isinstance(v, (bool, int, np.integer, np.bool_)) and v == 1):
            mask[i] = True
        elif v == LEGIT or (isinstance(v, (bool, int, np.integer, np.bool_)) and v == 0):
            mask[i] = False
        else:
            raise ValueError(f"unrecognized class label: {v!r}")
    return mask


def check_presence_matrix(X, n_features: int | None = None) -> np.ndarray:
    """Validate a binary presence matrix and return it as booleans."""
    X = np.asarray(X)
    if X.ndim != 2:
        raise ValueError(f"presence matrix must be 2-dimensional, got shape {X.shape}")
    if X.dtype != bool:
        if not np.isin(X, (0, 1)).all():
            raise ValueError("presence matrix entries must be 0 or 1")
        X = X.astype(bool)
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(
            f"expected {n_features} attribute columns, got {X.shape[1]}")
    return X
