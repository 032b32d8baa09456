"""Time-axis convolution against nested-loop oracles."""

import numpy as np
import pytest

from flocklearn.conv import (Conv1dParams, conv1d_backward, conv1d_forward,
                             conv1d_output_len)
from flocklearn.errors import ContractError, ShapeError
from flocklearn.rng import Rng


def nested_loop_oracle(params: Conv1dParams, xs: np.ndarray) -> np.ndarray:
    L, C = xs.shape
    kl, st, F = params.kernel_len, params.stride, params.n_filters
    L_out = (L - kl) // st + 1
    out = np.zeros((L_out, F))
    for ppos in range(L_out):
        for f in range(F):
            acc = params.biases[f]
            for tau in range(kl):
                for ch in range(C):
                    acc += params.kernels[f, tau, ch] * xs[ppos * st + tau, ch]
            out[ppos, f] = max(acc, 0.0)
    return out


def test_hand_case_single_filter():
    p = Conv1dParams(kernels=np.array([[[1.0], [1.0]]]), biases=np.zeros(1))
    out, _ = conv1d_forward(p, np.array([[1.0], [2.0], [3.0]]))
    assert out.shape == (2, 1)
    assert np.array_equal(out[:, 0], [3.0, 5.0])


def test_zero_kernels_negative_bias_clamps():
    p = Conv1dParams.zeros(4, 2, 3)
    p.biases[:] = -1.0
    out, _ = conv1d_forward(p, np.ones((6, 3)))
    assert np.array_equal(out, np.zeros((5, 4)))


def test_matches_nested_loop_oracle():
    rng = Rng(314)
    for case in range(60):
        C = 1 + case % 4
        kl = 1 + case % 3
        st = 1 + case % 2
        F = 1 + case % 5
        L = kl + case % 7
        p = Conv1dParams.init_random(F, kl, C, rng, stride=st)
        p.biases[:] = rng.uniform_array(F, -0.2, 0.2)
        xs = rng.uniform_array(L * C, -2, 2).reshape(L, C)
        out, _ = conv1d_forward(p, xs)
        ref = nested_loop_oracle(p, xs)
        assert out.shape == ref.shape
        assert np.abs(out - ref).max() < 1e-12


def test_output_length_formula():
    for L in range(1, 40):
        for kl in range(1, 6):
            for st in (1, 2, 3):
                if L < kl:
                    with pytest.raises(ContractError):
                        conv1d_output_len(L, kl, st)
                else:
                    n = conv1d_output_len(L, kl, st)
                    assert n == (L - kl) // st + 1
                    assert n >= 1


def test_short_input_rejected():
    p = Conv1dParams.zeros(1, 4, 2)
    with pytest.raises(ContractError):
        conv1d_forward(p, np.ones((3, 2)))


def test_channel_mismatch_rejected():
    p = Conv1dParams.zeros(1, 2, 3)
    with pytest.raises(ShapeError):
        conv1d_forward(p, np.ones((5, 2)))


def test_backward_finite_differences():
    rng = Rng(2718)
    p = Conv1dParams.init_random(3, 2, 2, rng)
    p.biases[:] = rng.uniform_array(3, -0.1, 0.1)
    xs = rng.uniform_array(12, -1, 1).reshape(6, 2)
    out, cache = conv1d_forward(p, xs)
    up = rng.uniform_array(out.size, -1, 1).reshape(out.shape)

    def loss():
        o, _ = conv1d_forward(p, xs)
        return float((o * up).sum())

    d_k, d_b, d_x = conv1d_backward(p, cache, up)
    h = 1e-6
    for arr, grad in ((p.kernels, d_k), (p.biases, d_b), (xs, d_x)):
        flat, gflat = arr.ravel(), grad.ravel()
        for idx in range(flat.size):
            keep = flat[idx]
            flat[idx] = keep + h
            lp = loss()
            flat[idx] = keep - h
            lm = loss()
            flat[idx] = keep
            fd = (lp - lm) / (2 * h)
            assert abs(fd - gflat[idx]) < 1e-6, (idx, fd, gflat[idx])
