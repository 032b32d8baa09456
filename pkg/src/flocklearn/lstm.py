"""Peephole LSTM cell and sequence fold.

Gate equations, evaluated in this exact order per step:

    i = sigmoid(W_xi x + W_hi h_prev + W_ci * c_prev + b_i)
    f = sigmoid(W_xf x + W_hf h_prev + W_cf * c_prev + b_f)
    c = f * c_prev + i * tanh(W_xc x + W_hc h_prev + b_c)
    o = sigmoid(W_xo x + W_ho h_prev + W_co * c + b_o)
    h = o * tanh(c)

The cell-state ("peephole") weights W_ci, W_cf, W_co are per-unit diagonal
vectors; note the output gate reads the *current* cell state.  Setting
``use_peepholes=False`` drops the three w_c* terms for comparison runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, ShapeError
from .numeric import sigmoid
from .rng import Rng


@dataclass
class LstmParams:
    """All weights of one LSTM layer.

    W_x* are (hidden_dim, input_dim); W_h* are (hidden_dim, hidden_dim);
    peephole vectors w_c* and biases b_* have length hidden_dim.
    """

    W_xi: np.ndarray
    W_hi: np.ndarray
    W_xf: np.ndarray
    W_hf: np.ndarray
    W_xc: np.ndarray
    W_hc: np.ndarray
    W_xo: np.ndarray
    W_ho: np.ndarray
    W_ci: np.ndarray
    W_cf: np.ndarray
    W_co: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_c: np.ndarray
    b_o: np.ndarray
    input_dim: int
    hidden_dim: int
    use_peepholes: bool = True

    @classmethod
    def zeros(cls, input_dim: int, hidden_dim: int, use_peepholes: bool = True) -> "LstmParams":
        xw = lambda: np.zeros((hidden_dim, input_dim))
        hw = lambda: np.zeros((hidden_dim, hidden_dim))
        v = lambda: np.zeros(hidden_dim)
        return cls(
            W_xi=xw(), W_hi=hw(), W_xf=xw(), W_hf=hw(),
            W_xc=xw(), W_hc=hw(), W_xo=xw(), W_ho=hw(),
            W_ci=v(), W_cf=v(), W_co=v(),
            b_i=v(), b_f=v(), b_c=v(), b_o=v(),
            input_dim=input_dim, hidden_dim=hidden_dim,
            use_peepholes=use_peepholes,
        )

    @classmethod
    def init_random(cls, input_dim: int, hidden_dim: int, rng: Rng,
                    use_peepholes: bool = True) -> "LstmParams":
        """Uniform +-1/sqrt(fan_in) weights, zero biases.

        Draw order (fixed for reproducibility): W_xi, W_hi, W_xf, W_hf,
        W_xc, W_hc, W_xo, W_ho row-major, then W_ci, W_cf, W_co.
        """
        sx = 1.0 / np.sqrt(input_dim)
        sh = 1.0 / np.sqrt(hidden_dim)

        def draw(rows, cols, s):
            return rng.uniform_array(rows * cols, -s, s).reshape(rows, cols)

        p = cls.zeros(input_dim, hidden_dim, use_peepholes)
        for name in ("W_xi", "W_hi", "W_xf", "W_hf", "W_xc", "W_hc", "W_xo", "W_ho"):
            if name[2] == "x":
                setattr(p, name, draw(hidden_dim, input_dim, sx))
            else:
                setattr(p, name, draw(hidden_dim, hidden_dim, sh))
        for name in ("W_ci", "W_cf", "W_co"):
            setattr(p, name, rng.uniform_array(hidden_dim, -sh, sh))
        return p


@dataclass
class LstmState:
    """Hidden output h and cell state c; initial state is all zeros."""

    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, hidden_dim: int) -> "LstmState":
        return cls(h=np.zeros(hidden_dim), c=np.zeros(hidden_dim))


@dataclass
class CellCache:
    """Gate activations of one step, kept for backpropagation."""

    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    i: np.ndarray
    f: np.ndarray
    g: np.ndarray       # tanh of the candidate pre-activation
    o: np.ndarray
    c: np.ndarray
    tanh_c: np.ndarray


@dataclass
class SequenceCache:
    steps: list = field(default_factory=list)
    dropout_mask: np.ndarray | None = None
    h_final: np.ndarray | None = None   # after dropout, if any


def lstm_cell_forward(params: LstmParams, x_t: np.ndarray,
                      prev: LstmState) -> tuple[LstmState, CellCache]:
    """One step of the gate equations above; returns new state and gate cache."""
    x_t = np.asarray(x_t, dtype=np.float64)
    if x_t.shape != (params.input_dim,):
        raise ShapeError(
            f"input has shape {x_t.shape}, expected ({params.input_dim},)")
    if prev.h.shape != (params.hidden_dim,) or prev.c.shape != (params.hidden_dim,):
        raise ShapeError(
            f"state has shapes h{prev.h.shape} c{prev.c.shape}, "
            f"expected ({params.hidden_dim},)")

    h_prev, c_prev = prev.h, prev.c
    peep = params.use_peepholes

    a_i = params.W_xi @ x_t + params.W_hi @ h_prev + params.b_i
    a_f = params.W_xf @ x_t + params.W_hf @ h_prev + params.b_f
    if peep:
        a_i = a_i + params.W_ci * c_prev
        a_f = a_f + params.W_cf * c_prev
    i = sigmoid(a_i)
    f = sigmoid(a_f)
    g = np.tanh(params.W_xc @ x_t + params.W_hc @ h_prev + params.b_c)
    c = f * c_prev + i * g
    a_o = params.W_xo @ x_t + params.W_ho @ h_prev + params.b_o
    if peep:
        a_o = a_o + params.W_co * c
    o = sigmoid(a_o)
    tanh_c = np.tanh(c)
    h = o * tanh_c

    state = LstmState(h=h, c=c)
    cache = CellCache(x=x_t, h_prev=h_prev, c_prev=c_prev,
                      i=i, f=f, g=g, o=o, c=c, tanh_c=tanh_c)
    return state, cache


def lstm_sequence_forward(params: LstmParams, xs, dropout_rate: float = 0.0,
                          rng: Rng | None = None) -> tuple[np.ndarray, SequenceCache]:
    """Fold the cell over a sequence from the zero state; return the last h.

    Many-to-one: only the final hidden output is returned.  Inverted dropout
    (scale kept units by 1/(1-rate)) is applied to that final h when
    ``dropout_rate > 0``; pass the training Rng to draw the mask.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim == 1:
        xs = xs[None, :]
    if xs.shape[0] == 0:
        raise ContractError("lstm_sequence_forward on an empty sequence")
    if not 0.0 <= dropout_rate < 1.0:
        raise ContractError(f"dropout rate must be in [0, 1), got {dropout_rate}")

    state = LstmState.zeros(params.hidden_dim)
    cache = SequenceCache()
    for t in range(xs.shape[0]):
        state, step = lstm_cell_forward(params, xs[t], state)
        cache.steps.append(step)

    h = state.h
    if dropout_rate > 0.0:
        if rng is None:
            raise ContractError("dropout requires an Rng")
        keep = 1.0 - dropout_rate
        mask = (rng.uniform_array(params.hidden_dim) < keep) / keep
        cache.dropout_mask = mask
        h = h * mask
    cache.h_final = h
    return h, cache
