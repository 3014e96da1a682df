"""Input validation for the estimator-facing entry points."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array


def check_states(X, trailing_shape: tuple[int, ...]) -> np.ndarray:
    """Validate a finite float array whose last axes equal ``trailing_shape``."""
    X = check_array(X, ensure_2d=False, allow_nd=True, dtype=np.float64)
    k = len(trailing_shape)
    if X.ndim < k or X.shape[-k:] != tuple(trailing_shape):
        raise ValueError(f"expected trailing shape {tuple(trailing_shape)}, got {X.shape}")
    return X


def check_masks(mask, shape: tuple[int, ...]) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.shape != tuple(shape):
        raise ValueError(f"mask shape {mask.shape} does not match {tuple(shape)}")
    mask = mask.astype(bool)
    if not mask.any(axis=-1).all():
        raise ValueError("each mask row must allow at least one action")
    return mask
