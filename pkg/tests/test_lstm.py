"""Cell equations against scalar-loop oracles and hand-evaluated cases."""

import math

import numpy as np
import pytest

from flocklearn.errors import ContractError, ShapeError
from flocklearn.lstm import (LstmParams, LstmState, lstm_cell_forward,
                             lstm_sequence_forward)
from flocklearn.rng import Rng


def scalar_cell_oracle(p: LstmParams, x, h_prev, c_prev):
    """Direct per-element evaluation of the gate equations, no matrix ops."""
    H, D = p.hidden_dim, p.input_dim

    def sig(z):
        return 1.0 / (1.0 + math.exp(-z))

    h_out, c_out = [0.0] * H, [0.0] * H
    for r in range(H):
        ai = p.b_i[r]
        af = p.b_f[r]
        ac = p.b_c[r]
        ao = p.b_o[r]
        for d in range(D):
            ai += p.W_xi[r, d] * x[d]
            af += p.W_xf[r, d] * x[d]
            ac += p.W_xc[r, d] * x[d]
            ao += p.W_xo[r, d] * x[d]
        for q in range(H):
            ai += p.W_hi[r, q] * h_prev[q]
            af += p.W_hf[r, q] * h_prev[q]
            ac += p.W_hc[r, q] * h_prev[q]
            ao += p.W_ho[r, q] * h_prev[q]
        if p.use_peepholes:
            ai += p.W_ci[r] * c_prev[r]
            af += p.W_cf[r] * c_prev[r]
        i = sig(ai)
        f = sig(af)
        c = f * c_prev[r] + i * math.tanh(ac)
        if p.use_peepholes:
            ao += p.W_co[r] * c
        o = sig(ao)
        c_out[r] = c
        h_out[r] = o * math.tanh(c)
    return np.array(h_out), np.array(c_out)


def test_zero_params_zero_output():
    p = LstmParams.zeros(3, 4)
    state, cache = lstm_cell_forward(p, np.array([1.0, -2.0, 0.5]),
                                     LstmState.zeros(4))
    assert np.array_equal(state.h, np.zeros(4))
    assert np.array_equal(state.c, np.zeros(4))
    assert np.abs(cache.i - 0.5).max() == 0.0
    assert np.abs(cache.f - 0.5).max() == 0.0
    assert np.array_equal(cache.g, np.zeros(4))


def test_hand_evaluated_scalar_cell():
    p = LstmParams.zeros(1, 1)
    p.b_i[0] = 1000.0
    p.b_f[0] = 1000.0
    p.W_xc[0, 0] = 1.0
    state, _ = lstm_cell_forward(p, np.array([0.5]), LstmState.zeros(1))
    assert abs(state.c[0] - math.tanh(0.5)) < 1e-12
    assert abs(state.c[0] - 0.46212) < 1e-4


def _random_params(rng: Rng, D: int, H: int, peep: bool) -> LstmParams:
    p = LstmParams.init_random(D, H, rng, use_peepholes=peep)
    p.b_i[:] = rng.uniform_array(H, -0.5, 0.5)
    p.b_f[:] = rng.uniform_array(H, -0.5, 0.5)
    p.b_c[:] = rng.uniform_array(H, -0.5, 0.5)
    p.b_o[:] = rng.uniform_array(H, -0.5, 0.5)
    return p


@pytest.mark.parametrize("peep", [True, False])
def test_cell_matches_scalar_loop_oracle(peep):
    rng = Rng(1234 + int(peep))
    for case in range(100):
        D = 1 + case % 5
        H = 1 + (case // 5) % 6
        p = _random_params(rng, D, H, peep)
        x = rng.uniform_array(D, -2.0, 2.0)
        h0 = rng.uniform_array(H, -1.0, 1.0)
        c0 = rng.uniform_array(H, -1.0, 1.0)
        state, _ = lstm_cell_forward(p, x, LstmState(h=h0.copy(), c=c0.copy()))
        h_ref, c_ref = scalar_cell_oracle(p, x, h0, c0)
        assert np.abs(state.h - h_ref).max() < 1e-12
        assert np.abs(state.c - c_ref).max() < 1e-12


def test_cell_shape_errors():
    p = LstmParams.zeros(3, 4)
    with pytest.raises(ShapeError):
        lstm_cell_forward(p, np.zeros(2), LstmState.zeros(4))
    with pytest.raises(ShapeError):
        lstm_cell_forward(p, np.zeros(3), LstmState.zeros(5))


def test_sequence_length_one_equals_cell():
    rng = Rng(55)
    p = _random_params(rng, 4, 3, True)
    x = rng.uniform_array(4, -1.0, 1.0)
    h_seq, _ = lstm_sequence_forward(p, x[None, :])
    state, _ = lstm_cell_forward(p, x, LstmState.zeros(3))
    assert np.array_equal(h_seq, state.h)


def test_sequence_zero_params():
    p = LstmParams.zeros(2, 5)
    xs = np.random.default_rng(3).normal(size=(9, 2))
    h, _ = lstm_sequence_forward(p, xs)
    assert np.array_equal(h, np.zeros(5))


def test_sequence_empty_rejected():
    with pytest.raises(ContractError):
        lstm_sequence_forward(LstmParams.zeros(2, 2), np.zeros((0, 2)))


def test_dropout_zero_is_identity():
    rng = Rng(66)
    p = _random_params(rng, 3, 4, True)
    xs = rng.uniform_array(15, -1, 1).reshape(5, 3)
    h0, _ = lstm_sequence_forward(p, xs)
    h1, _ = lstm_sequence_forward(p, xs, dropout_rate=0.0, rng=Rng(1))
    assert np.array_equal(h0, h1)


def test_dropout_mask_inverted_scaling():
    rng = Rng(77)
    p = _random_params(rng, 3, 6, True)
    xs = rng.uniform_array(12, -1, 1).reshape(4, 3)
    h_plain, _ = lstm_sequence_forward(p, xs)
    mask_sum = 0.0
    n = 2000
    for _ in range(n):
        h, cache = lstm_sequence_forward(p, xs, dropout_rate=0.5, rng=rng)
        assert set(np.round(cache.dropout_mask, 6)) <= {0.0, 2.0}
        assert np.array_equal(h, h_plain * cache.dropout_mask)
        mask_sum += cache.dropout_mask.sum()
    # inverted scaling is unbiased: masks average to 1
    assert abs(mask_sum / (n * 6) - 1.0) < 0.05


def test_dropout_requires_rng():
    p = LstmParams.zeros(2, 2)
    with pytest.raises(ContractError):
        lstm_sequence_forward(p, np.zeros((3, 2)), dropout_rate=0.3)
    with pytest.raises(ContractError):
        lstm_sequence_forward(p, np.zeros((3, 2)), dropout_rate=1.0, rng=Rng(1))


def test_init_random_bounds_and_determinism():
    a = LstmParams.init_random(6, 5, Rng(9))
    b = LstmParams.init_random(6, 5, Rng(9))
    assert np.array_equal(a.W_xi, b.W_xi)
    assert np.array_equal(a.W_co, b.W_co)
    assert np.abs(a.W_xi).max() <= 1.0 / np.sqrt(6)
    assert np.abs(a.W_hi).max() <= 1.0 / np.sqrt(5)
    assert np.array_equal(a.b_i, np.zeros(5))
