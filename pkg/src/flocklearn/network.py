"""Window classifiers: plain LSTM and CNN+LSTM with hand-derived BPTT.

A model maps one look-back window of flock features, shape (m, n_features),
to class probabilities over the k collective activities.  Input features are
z-scored with statistics frozen into the model, the optional 1-D conv layer
shortens the window, the LSTM folds it to a final hidden vector, dropout
(training only) and a dense head produce logits, softmax gives probs.

Two equivalent computation paths exist.  ``forward``/``backward`` process a
single window through the per-step cell functions and are the reference used
by predict, evaluation and streaming.  ``forward_batch``/``backward_batch``
run a whole mini-batch at once with the four gate pre-activations fused into
one (batch, 4*hidden) block per step, which is what makes training tolerable
in pure numpy.  Property tests hold the two paths together to ~1e-12.

Gradient container reuses the parameter dataclasses, so every gradient array
mirrors its parameter's shape by construction.  The fused gate column layout
is [input | forget | candidate | output].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conv import Conv1dParams, conv1d_backward, conv1d_forward, conv1d_output_len
from .errors import ContractError, ShapeError
from .lstm import LstmParams, SequenceCache, lstm_sequence_forward
from .numeric import sigmoid, softmax
from .rng import Rng

KINDS = ("lstm", "cnn_lstm")
FEATURE_SETS = ("velocities", "centroid", "both")


@dataclass
class DenseParams:
    """Classification head: W (out_dim, in_dim), b (out_dim,)."""

    W: np.ndarray
    b: np.ndarray

    @property
    def out_dim(self) -> int:
        return self.W.shape[0]

    @property
    def in_dim(self) -> int:
        return self.W.shape[1]


@dataclass
class FeatureStats:
    """Per-feature z-score statistics, computed on the training split only."""

    mean: np.ndarray
    std: np.ndarray


@dataclass
class Model:
    kind: str                       # "lstm" or "cnn_lstm"
    conv: Conv1dParams | None       # present iff kind == "cnn_lstm"
    lstm: LstmParams
    head: DenseParams
    feature_stats: FeatureStats
    n_classes: int
    lookback: int
    feature_set: str

    @property
    def input_dim(self) -> int:
        """Feature dimension of the raw window."""
        if self.kind == "cnn_lstm":
            return self.conv.in_channels
        return self.lstm.input_dim


@dataclass
class Gradients:
    conv: Conv1dParams | None
    lstm: LstmParams
    head: DenseParams


def validate_model(model: Model) -> None:
    """Raise if the conv -> lstm -> head dimension chain is inconsistent."""
    if model.kind not in KINDS:
        raise ContractError(f"unknown model kind {model.kind!r}")
    if model.feature_set not in FEATURE_SETS:
        raise ContractError(f"unknown feature set {model.feature_set!r}")
    if (model.conv is not None) != (model.kind == "cnn_lstm"):
        raise ContractError("conv layer present iff kind is cnn_lstm")
    if model.kind == "cnn_lstm" and model.lstm.input_dim != model.conv.n_filters:
        raise ShapeError(
            f"lstm expects {model.lstm.input_dim} inputs but conv emits "
            f"{model.conv.n_filters} channels")
    if model.head.in_dim != model.lstm.hidden_dim:
        raise ShapeError(
            f"head expects {model.head.in_dim} inputs but lstm emits "
            f"{model.lstm.hidden_dim}")
    if model.head.out_dim != model.n_classes:
        raise ShapeError(
            f"head emits {model.head.out_dim} logits for {model.n_classes} classes")
    if model.lookback < 1:
        raise ContractError(f"lookback must be >= 1, got {model.lookback}")
    d = model.input_dim
    if model.feature_stats.mean.shape != (d,) or model.feature_stats.std.shape != (d,):
        raise ShapeError(
            f"feature stats have shapes {model.feature_stats.mean.shape}/"
            f"{model.feature_stats.std.shape}, expected ({d},)")


def initialize_model(kind: str, n_features: int, n_classes: int, lookback: int,
                     feature_set: str, rng: Rng, hidden_dim: int = 30,
                     n_filters: int = 32, kernel_len: int = 2, stride: int = 1,
                     use_peepholes: bool = True,
                     feature_stats: FeatureStats | None = None) -> Model:
    """Build a model with freshly drawn weights.

    Weights are uniform in +-1/sqrt(fan_in) per array, biases zero.  The
    draw order from ``rng`` is fixed: conv kernels first (cnn_lstm only),
    then the LSTM arrays in their documented order, then the head W.
    """
    kind = kind.lower()
    if kind not in KINDS:
        raise ContractError(f"kind must be one of {KINDS}, got {kind!r}")
    if feature_set not in FEATURE_SETS:
        raise ContractError(
            f"feature_set must be one of {FEATURE_SETS}, got {feature_set!r}")

    conv = None
    lstm_in = n_features
    if kind == "cnn_lstm":
        conv = Conv1dParams.init_random(n_filters, kernel_len, n_features,
                                        rng, stride=stride)
        lstm_in = n_filters
    lstm = LstmParams.init_random(lstm_in, hidden_dim, rng,
                                  use_peepholes=use_peepholes)
    sh = 1.0 / np.sqrt(hidden_dim)
    W = rng.uniform_array(n_classes * hidden_dim, -sh, sh).reshape(n_classes, hidden_dim)
    head = DenseParams(W=W, b=np.zeros(n_classes))
    if feature_stats is None:
        feature_stats = FeatureStats(mean=np.zeros(n_features), std=np.ones(n_features))
    model = Model(kind=kind, conv=conv, lstm=lstm, head=head,
                  feature_stats=feature_stats, n_classes=n_classes,
                  lookback=lookback, feature_set=feature_set)
    validate_model(model)
    return model


def zero_gradients(model: Model) -> Gradients:
    conv = None
    if model.conv is not None:
        conv = Conv1dParams.zeros(model.conv.n_filters, model.conv.kernel_len,
                                  model.conv.in_channels, model.conv.stride)
    lstm = LstmParams.zeros(model.lstm.input_dim, model.lstm.hidden_dim,
                            model.lstm.use_peepholes)
    head = DenseParams(W=np.zeros_like(model.head.W), b=np.zeros_like(model.head.b))
    return Gradients(conv=conv, lstm=lstm, head=head)


_LSTM_ARRAYS = ("W_xi", "W_hi", "W_xf", "W_hf", "W_xc", "W_hc", "W_xo", "W_ho",
                "W_ci", "W_cf", "W_co", "b_i", "b_f", "b_c", "b_o")


def parameter_list(obj: Model | Gradients) -> list[np.ndarray]:
    """All parameter (or gradient) arrays in one documented, fixed order.

    Order: conv kernels, conv biases (cnn_lstm only), the fifteen LSTM
    arrays W_xi..b_o as listed in _LSTM_ARRAYS, head W, head b.  The same
    order is used for model and gradient containers so the optimizer can
    zip them; arrays are the live objects, not copies.
    """
    out: list[np.ndarray] = []
    if obj.conv is not None:
        out.append(obj.conv.kernels)
        out.append(obj.conv.biases)
    for name in _LSTM_ARRAYS:
        out.append(getattr(obj.lstm, name))
    out.append(obj.head.W)
    out.append(obj.head.b)
    return out


# ---------------------------------------------------------------------------
# single-window path


def _normalize(model: Model, window: np.ndarray) -> np.ndarray:
    return (window - model.feature_stats.mean) / model.feature_stats.std


def _check_window(model: Model, window: np.ndarray) -> np.ndarray:
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 2:
        raise ShapeError(f"window must be 2-D (time, features), got shape {window.shape}")
    if window.shape[1] != model.input_dim:
        raise ShapeError(
            f"window has {window.shape[1]} features, model expects {model.input_dim}")
    if model.kind == "lstm":
        if window.shape[0] != model.lookback:
            raise ShapeError(
                f"window has {window.shape[0]} frames, model expects {model.lookback}")
    else:
        if window.shape[0] < model.conv.kernel_len:
            raise ShapeError(
                f"window of {window.shape[0]} frames is shorter than the conv "
                f"kernel ({model.conv.kernel_len})")
    return window


def forward(model: Model, window: np.ndarray, training: bool = False,
            rng: Rng | None = None, dropout_rate: float = 0.0) -> tuple[np.ndarray, dict]:
    """Class probabilities for one raw feature window; also returns the cache.

    Dropout is applied to the final LSTM output only when ``training`` is
    true and ``dropout_rate`` > 0 (inverted scaling, so inference needs no
    correction).  With training=False the call is a pure function.
    """
    window = _check_window(model, window)
    xn = _normalize(model, window)

    conv_cache = None
    seq = xn
    if model.kind == "cnn_lstm":
        seq, conv_cache = conv1d_forward(model.conv, xn)

    rate = dropout_rate if training else 0.0
    h, seq_cache = lstm_sequence_forward(model.lstm, seq, dropout_rate=rate, rng=rng)
    logits = model.head.W @ h + model.head.b
    probs = softmax(logits)
    cache = {
        "window_shape": window.shape,
        "kind": model.kind,
        "conv": conv_cache,
        "seq": seq_cache,
        "h": h,
        "probs": probs,
    }
    return probs, cache


def cross_entropy(probs: np.ndarray, target: np.ndarray) -> float:
    """-sum(target * log(probs)), probs clamped to >= 1e-12 before the log."""
    probs = np.asarray(probs, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if probs.shape != target.shape:
        raise ShapeError(
            f"probs shape {probs.shape} != target shape {target.shape}")
    return float(-(target * np.log(np.maximum(probs, 1e-12))).sum())


def backward(model: Model, cache: dict, target: np.ndarray) -> Gradients:
    """Analytic gradients of cross_entropy(forward(window), target).

    Walks the cached gate activations backwards through time.  The output
    gate reads the current cell state, so its pre-activation gradient feeds
    back into d(cell) at the same step, not just the previous one.
    """
    if not isinstance(cache, dict) or "seq" not in cache or "probs" not in cache:
        raise ContractError("backward needs the cache returned by forward")
    if cache.get("kind") != model.kind:
        raise ContractError(
            f"cache was produced by a {cache.get('kind')!r} model, not {model.kind!r}")
    target = np.asarray(target, dtype=np.float64)
    if target.shape != (model.n_classes,):
        raise ShapeError(
            f"target has shape {target.shape}, expected ({model.n_classes},)")

    grads = zero_gradients(model)
    seq_cache: SequenceCache = cache["seq"]
    probs = cache["probs"]
    h_final = cache["h"]

    dlogits = probs - target
    grads.head.W[:] = np.outer(dlogits, h_final)
    grads.head.b[:] = dlogits
    dh = model.head.W.T @ dlogits
    if seq_cache.dropout_mask is not None:
        dh = dh * seq_cache.dropout_mask

    p = model.lstm
    g = grads.lstm
    peep = p.use_peepholes
    T = len(seq_cache.steps)
    dc = np.zeros(p.hidden_dim)
    d_seq = np.empty((T, p.input_dim))

    for t in range(T - 1, -1, -1):
        s = seq_cache.steps[t]
        do = dh * s.tanh_c
        dao = do * s.o * (1.0 - s.o)
        dc = dc + dh * s.o * (1.0 - s.tanh_c ** 2)
        if peep:
            dc = dc + dao * p.W_co
        df = dc * s.c_prev
        daf = df * s.f * (1.0 - s.f)
        di = dc * s.g
        dai = di * s.i * (1.0 - s.i)
        dg = dc * s.i
        dag = dg * (1.0 - s.g ** 2)

        g.W_xi += np.outer(dai, s.x); g.W_hi += np.outer(dai, s.h_prev); g.b_i += dai
        g.W_xf += np.outer(daf, s.x); g.W_hf += np.outer(daf, s.h_prev); g.b_f += daf
        g.W_xc += np.outer(dag, s.x); g.W_hc += np.outer(dag, s.h_prev); g.b_c += dag
        g.W_xo += np.outer(dao, s.x); g.W_ho += np.outer(dao, s.h_prev); g.b_o += dao
        if peep:
            g.W_ci += dai * s.c_prev
            g.W_cf += daf * s.c_prev
            g.W_co += dao * s.c

        d_seq[t] = (p.W_xi.T @ dai + p.W_xf.T @ daf
                    + p.W_xc.T @ dag + p.W_xo.T @ dao)
        dh = (p.W_hi.T @ dai + p.W_hf.T @ daf
              + p.W_hc.T @ dag + p.W_ho.T @ dao)
        dc = dc * s.f
        if peep:
            dc = dc + dai * p.W_ci + daf * p.W_cf

    if model.kind == "cnn_lstm":
        d_k, d_b, _ = conv1d_backward(model.conv, cache["conv"], d_seq)
        grads.conv.kernels[:] = d_k
        grads.conv.biases[:] = d_b
    return grads


def predict(model: Model, window: np.ndarray) -> tuple[int, np.ndarray]:
    """Most probable class of a window; ties break toward the lowest index."""
    probs, _ = forward(model, window, training=False)
    return int(np.argmax(probs)), probs


# ---------------------------------------------------------------------------
# batched engine (training path)


def _fused_lstm_weights(p: LstmParams):
    """Stack the four gates' weights: rows [input | forget | candidate | output]."""
    W_x = np.concatenate([p.W_xi, p.W_xf, p.W_xc, p.W_xo], axis=0)
    W_h = np.concatenate([p.W_hi, p.W_hf, p.W_hc, p.W_ho], axis=0)
    b = np.concatenate([p.b_i, p.b_f, p.b_c, p.b_o])
    return W_x, W_h, b


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def forward_batch(model: Model, windows: np.ndarray, training: bool = False,
                  rng: Rng | None = None,
                  dropout_rate: float = 0.0) -> tuple[np.ndarray, dict]:
    """Probabilities for a (batch, m, n_features) stack of raw windows.

    Same computation as ``forward`` per window, up to float summation order.
    The gate pre-activations of all four gates and all batch members are
    produced by two matmuls per step; everything else is elementwise.
    """
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim != 3:
        raise ShapeError(
            f"batch must be 3-D (batch, time, features), got shape {windows.shape}")
    B, L, D = windows.shape
    if D != model.input_dim:
        raise ShapeError(
            f"batch has {D} features, model expects {model.input_dim}")

    X = (windows - model.feature_stats.mean) / model.feature_stats.std

    conv_cache = None
    if model.kind == "cnn_lstm":
        cp = model.conv
        kl, st, F = cp.kernel_len, cp.stride, cp.n_filters
        T = conv1d_output_len(L, kl, st)
        patches = np.empty((B, T, kl * D))
        for j in range(T):
            s0 = j * st
            patches[:, j, :] = X[:, s0:s0 + kl, :].reshape(B, kl * D)
        kflat = cp.kernels.reshape(F, kl * D)
        pre = patches @ kflat.T + cp.biases
        seq = np.maximum(pre, 0.0)
        conv_cache = {"patches": patches, "pre": pre}
    else:
        seq = X
        T = L

    p = model.lstm
    H = p.hidden_dim
    peep = p.use_peepholes
    W_x, W_h, b = _fused_lstm_weights(p)

    seqT = np.ascontiguousarray(seq.transpose(1, 0, 2))      # (T, B, Din)
    proj = (seqT.reshape(T * B, p.input_dim) @ W_x.T + b).reshape(T, B, 4 * H)

    h = np.zeros((B, H))
    c = np.zeros((B, H))
    I = np.empty((T, B, H)); Fg = np.empty((T, B, H))
    G = np.empty((T, B, H)); O = np.empty((T, B, H))
    C = np.empty((T, B, H)); TC = np.empty((T, B, H))
    Cprev = np.empty((T, B, H)); Hprev = np.empty((T, B, H))

    for t in range(T):
        a = proj[t] + h @ W_h.T
        a_i = a[:, :H]
        a_f = a[:, H:2 * H]
        a_g = a[:, 2 * H:3 * H]
        a_o = a[:, 3 * H:]
        if peep:
            a_i = a_i + c * p.W_ci
            a_f = a_f + c * p.W_cf
        i = sigmoid(a_i)
        f = sigmoid(a_f)
        g = np.tanh(a_g)
        Hprev[t] = h; Cprev[t] = c
        c = f * c + i * g
        if peep:
            a_o = a_o + c * p.W_co
        o = sigmoid(a_o)
        tc = np.tanh(c)
        h = o * tc
        I[t] = i; Fg[t] = f; G[t] = g; O[t] = o; C[t] = c; TC[t] = tc

    mask = None
    if training and dropout_rate > 0.0:
        if rng is None:
            raise ContractError("dropout requires an Rng")
        keep = 1.0 - dropout_rate
        mask = (rng.uniform_array(B * H).reshape(B, H) < keep) / keep
        h = h * mask

    logits = h @ model.head.W.T + model.head.b
    probs = _softmax_rows(logits)
    cache = {
        "kind": model.kind, "B": B, "T": T,
        "conv": conv_cache, "seqT": seqT,
        "I": I, "F": Fg, "G": G, "O": O, "C": C, "TC": TC,
        "Cprev": Cprev, "Hprev": Hprev,
        "mask": mask, "h": h, "probs": probs,
        "in_shape": (B, L, D),
    }
    return probs, cache


def cross_entropy_batch(probs: np.ndarray, targets: np.ndarray) -> float:
    """Mean cross-entropy over the batch rows."""
    if probs.shape != targets.shape:
        raise ShapeError(
            f"probs shape {probs.shape} != targets shape {targets.shape}")
    per = -(targets * np.log(np.maximum(probs, 1e-12))).sum(axis=1)
    return float(per.mean())


def backward_batch(model: Model, cache: dict, targets: np.ndarray) -> Gradients:
    """Gradients of the batch-mean loss; mirrors ``backward`` step for step.

    The per-step gate pre-activation gradients are parked in one (T, B, 4H)
    buffer so all weight gradients reduce to two big matmuls and a few sums
    after the time loop.
    """
    if not isinstance(cache, dict) or "seqT" not in cache:
        raise ContractError("backward_batch needs the cache from forward_batch")
    if cache.get("kind") != model.kind:
        raise ContractError(
            f"cache was produced by a {cache.get('kind')!r} model, not {model.kind!r}")
    targets = np.asarray(targets, dtype=np.float64)
    probs = cache["probs"]
    if targets.shape != probs.shape:
        raise ShapeError(
            f"targets shape {targets.shape} != probs shape {probs.shape}")

    B, T = cache["B"], cache["T"]
    p = model.lstm
    H = p.hidden_dim
    peep = p.use_peepholes
    W_x, W_h, _ = _fused_lstm_weights(p)
    I, Fg, G, O = cache["I"], cache["F"], cache["G"], cache["O"]
    C, TC, Cprev, Hprev = cache["C"], cache["TC"], cache["Cprev"], cache["Hprev"]

    grads = zero_gradients(model)

    dlogits = (probs - targets) / B
    grads.head.W[:] = dlogits.T @ cache["h"]
    grads.head.b[:] = dlogits.sum(axis=0)
    dh = dlogits @ model.head.W
    if cache["mask"] is not None:
        dh = dh * cache["mask"]

    DA = np.empty((T, B, 4 * H))
    dc = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        i, f, g, o = I[t], Fg[t], G[t], O[t]
        do = dh * TC[t]
        dao = do * o * (1.0 - o)
        dc = dc + dh * o * (1.0 - TC[t] ** 2)
        if peep:
            dc = dc + dao * p.W_co
        df = dc * Cprev[t]
        daf = df * f * (1.0 - f)
        di = dc * g
        dai = di * i * (1.0 - i)
        dg = dc * i
        dag = dg * (1.0 - g ** 2)
        DA[t, :, :H] = dai
        DA[t, :, H:2 * H] = daf
        DA[t, :, 2 * H:3 * H] = dag
        DA[t, :, 3 * H:] = dao
        dh = DA[t] @ W_h
        dc = dc * f
        if peep:
            dc = dc + dai * p.W_ci + daf * p.W_cf

    DA_flat = DA.reshape(T * B, 4 * H)
    dW_x = DA_flat.T @ cache["seqT"].reshape(T * B, p.input_dim)
    dW_h = DA_flat.T @ Hprev.reshape(T * B, H)
    db = DA_flat.sum(axis=0)

    gl = grads.lstm
    gl.W_xi[:], gl.W_xf[:] = dW_x[:H], dW_x[H:2 * H]
    gl.W_xc[:], gl.W_xo[:] = dW_x[2 * H:3 * H], dW_x[3 * H:]
    gl.W_hi[:], gl.W_hf[:] = dW_h[:H], dW_h[H:2 * H]
    gl.W_hc[:], gl.W_ho[:] = dW_h[2 * H:3 * H], dW_h[3 * H:]
    gl.b_i[:], gl.b_f[:] = db[:H], db[H:2 * H]
    gl.b_c[:], gl.b_o[:] = db[2 * H:3 * H], db[3 * H:]
    if peep:
        gl.W_ci[:] = (DA[:, :, :H] * Cprev).sum(axis=(0, 1))
        gl.W_cf[:] = (DA[:, :, H:2 * H] * Cprev).sum(axis=(0, 1))
        gl.W_co[:] = (DA[:, :, 3 * H:] * C).sum(axis=(0, 1))

    if model.kind == "cnn_lstm":
        cp = model.conv
        kl = cp.kernel_len
        _, L, D = cache["in_shape"]
        d_seqT = DA_flat @ W_x                            # (T*B, Din)
        d_seq = d_seqT.reshape(T, B, p.input_dim).transpose(1, 0, 2)
        cv = cache["conv"]
        d_pre = d_seq * (cv["pre"] > 0.0)
        dp_flat = d_pre.reshape(B * T, cp.n_filters)
        pa_flat = cv["patches"].reshape(B * T, kl * D)
        grads.conv.kernels[:] = (dp_flat.T @ pa_flat).reshape(cp.kernels.shape)
        grads.conv.biases[:] = d_pre.sum(axis=(0, 1))
    return grads
