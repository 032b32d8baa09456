"""1-D convolution over the time axis, used in front of the LSTM.

A window of L frames with C feature channels is convolved with F kernels of
length kernel_len (stride 1, no padding) and passed through relu, producing
floor((L - kernel_len) / stride) + 1 output frames of F channels each.  With
the defaults (kernel_len 2, stride 1) a 30-frame window becomes 29 frames.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ShapeError
from .numeric import relu
from .rng import Rng


@dataclass
class Conv1dParams:
    """kernels has shape (n_filters, kernel_len, in_channels); biases (n_filters,)."""

    kernels: np.ndarray
    biases: np.ndarray
    stride: int = 1

    @property
    def n_filters(self) -> int:
        return self.kernels.shape[0]

    @property
    def kernel_len(self) -> int:
        return self.kernels.shape[1]

    @property
    def in_channels(self) -> int:
        return self.kernels.shape[2]

    @classmethod
    def zeros(cls, n_filters: int, kernel_len: int, in_channels: int,
              stride: int = 1) -> "Conv1dParams":
        return cls(kernels=np.zeros((n_filters, kernel_len, in_channels)),
                   biases=np.zeros(n_filters), stride=stride)

    @classmethod
    def init_random(cls, n_filters: int, kernel_len: int, in_channels: int,
                    rng: Rng, stride: int = 1) -> "Conv1dParams":
        """Uniform +-1/sqrt(kernel_len * in_channels) kernels, zero bias."""
        fan_in = kernel_len * in_channels
        s = 1.0 / np.sqrt(fan_in)
        k = rng.uniform_array(n_filters * kernel_len * in_channels, -s, s)
        return cls(kernels=k.reshape(n_filters, kernel_len, in_channels),
                   biases=np.zeros(n_filters), stride=stride)


def conv1d_output_len(in_len: int, kernel_len: int, stride: int) -> int:
    if in_len < kernel_len:
        raise ContractError(
            f"input of length {in_len} is shorter than the kernel ({kernel_len})")
    return (in_len - kernel_len) // stride + 1


def conv1d_forward(params: Conv1dParams, xs: np.ndarray) -> tuple[np.ndarray, dict]:
    """Convolve (L, C) input; return (L_out, F) relu output and a backprop cache."""
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 2:
        raise ShapeError(f"conv input must be 2-D (time, channels), got shape {xs.shape}")
    L, C = xs.shape
    if C != params.in_channels:
        raise ShapeError(
            f"conv input has {C} channels, kernels expect {params.in_channels}")
    kl, st = params.kernel_len, params.stride
    L_out = conv1d_output_len(L, kl, st)

    # Gather the kl-frame patch under each output position, then one matmul.
    starts = np.arange(L_out) * st
    patches = np.empty((L_out, kl * C))
    for j, s0 in enumerate(starts):
        patches[j] = xs[s0:s0 + kl].ravel()
    kflat = params.kernels.reshape(params.n_filters, kl * C)
    pre = patches @ kflat.T + params.biases
    out = relu(pre)
    cache = {"patches": patches, "pre": pre, "in_shape": (L, C)}
    return out, cache


def conv1d_backward(params: Conv1dParams, cache: dict,
                    d_out: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of kernels, bias and input given d(loss)/d(output)."""
    d_out = np.asarray(d_out, dtype=np.float64)
    pre = cache["pre"]
    if d_out.shape != pre.shape:
        raise ShapeError(
            f"upstream gradient has shape {d_out.shape}, expected {pre.shape}")
    d_pre = d_out * (pre > 0.0)
    patches = cache["patches"]
    kl, st, C = params.kernel_len, params.stride, params.in_channels
    kflat = params.kernels.reshape(params.n_filters, kl * C)

    d_kflat = d_pre.T @ patches
    d_bias = d_pre.sum(axis=0)
    d_patches = d_pre @ kflat

    L, _ = cache["in_shape"]
    d_xs = np.zeros((L, C))
    for j in range(d_pre.shape[0]):
        s0 = j * st
        d_xs[s0:s0 + kl] += d_patches[j].reshape(kl, C)
    return d_kflat.reshape(params.kernels.shape), d_bias, d_xs
