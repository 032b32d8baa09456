"""Dense linear algebra and activations used by the networks.

Conventions fixed repo-wide: matrices are 2-D float64 numpy arrays in
row-major (C) order with shape (rows, cols); vectors are 1-D float64 arrays.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from .errors import ContractError, ShapeError


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product; raises ShapeError naming both shapes on mismatch."""
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    return a @ b


def sigmoid(v: np.ndarray) -> np.ndarray:
    """Elementwise logistic function 1/(1+exp(-x)), stable for large |x|."""
    return expit(np.asarray(v, dtype=np.float64))


def tanh(v: np.ndarray) -> np.ndarray:
    return np.tanh(np.asarray(v, dtype=np.float64))


def relu(v: np.ndarray) -> np.ndarray:
    return np.maximum(np.asarray(v, dtype=np.float64), 0.0)


def softmax(v: np.ndarray) -> np.ndarray:
    """Max-subtracted exponential normalization; safe for inputs up to ~1e308."""
    v = np.asarray(v, dtype=np.float64)
    if v.size == 0:
        raise ContractError("softmax of an empty vector")
    e = np.exp(v - np.max(v))
    return e / np.sum(e)
