"""Model checkpoints: versioned JSON with exact float round-trips.

Numbers are serialized with Python's shortest-repr float formatting, which
reconstructs the identical IEEE-754 double on load, so save -> load -> save
is byte-stable and a loaded model computes bit-identical outputs.  Keys are
sorted and separators fixed to keep the byte stream deterministic.

Top-level layout (documented field by field in docs/FORMATS.md):
    format: "flocklearn-checkpoint"     version: 1
    kind, n_classes, lookback, feature_set, use_peepholes
    dims: input_dim, hidden_dim (+ n_filters, kernel_len, stride for cnn_lstm)
    feature_stats: mean, std            conv: kernels, biases (cnn_lstm only)
    lstm: the fifteen weight/bias arrays     head: W, b
"""

from __future__ import annotations

import json
import os

import numpy as np

from .conv import Conv1dParams
from .errors import (CheckpointFormatError, CheckpointSchemaError,
                     CheckpointVersionError, FlockError)
from .fileio import atomic_write_bytes
from .lstm import LstmParams
from .network import DenseParams, FeatureStats, Model, validate_model

FORMAT_NAME = "flocklearn-checkpoint"
FORMAT_VERSION = 1

_LSTM_KEYS = ("W_xi", "W_hi", "W_xf", "W_hf", "W_xc", "W_hc", "W_xo", "W_ho",
              "W_ci", "W_cf", "W_co", "b_i", "b_f", "b_c", "b_o")


def model_to_dict(model: Model) -> dict:
    validate_model(model)
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": model.kind,
        "n_classes": model.n_classes,
        "lookback": model.lookback,
        "feature_set": model.feature_set,
        "use_peepholes": model.lstm.use_peepholes,
        "dims": {
            "input_dim": model.input_dim,
            "hidden_dim": model.lstm.hidden_dim,
        },
        "feature_stats": {
            "mean": model.feature_stats.mean.tolist(),
            "std": model.feature_stats.std.tolist(),
        },
        "lstm": {k: getattr(model.lstm, k).tolist() for k in _LSTM_KEYS},
        "head": {"W": model.head.W.tolist(), "b": model.head.b.tolist()},
    }
    if model.conv is not None:
        doc["dims"]["n_filters"] = model.conv.n_filters
        doc["dims"]["kernel_len"] = model.conv.kernel_len
        doc["dims"]["stride"] = model.conv.stride
        doc["conv"] = {
            "kernels": model.conv.kernels.tolist(),
            "biases": model.conv.biases.tolist(),
        }
    return doc


def checkpoint_bytes(model: Model) -> bytes:
    text = json.dumps(model_to_dict(model), sort_keys=True,
                      separators=(",", ":")) + "\n"
    return text.encode("utf-8")


def save_checkpoint(model: Model, path: str | os.PathLike) -> None:
    atomic_write_bytes(path, checkpoint_bytes(model))


def _arr(doc: dict, section: str, key: str, shape: tuple) -> np.ndarray:
    try:
        raw = doc[section][key]
    except (KeyError, TypeError):
        raise CheckpointSchemaError(f"checkpoint is missing {section}.{key}") from None
    a = np.asarray(raw, dtype=np.float64)
    if a.shape != shape:
        raise CheckpointSchemaError(
            f"{section}.{key} has shape {a.shape}, expected {shape}")
    return a


def model_from_dict(doc: dict) -> Model:
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise CheckpointFormatError(
            "file is not a model checkpoint (missing format marker)")
    if doc.get("version") != FORMAT_VERSION:
        raise CheckpointVersionError(
            f"checkpoint version {doc.get('version')!r} is not supported "
            f"(this build reads version {FORMAT_VERSION})")
    try:
        kind = doc["kind"]
        k = int(doc["n_classes"])
        lookback = int(doc["lookback"])
        feature_set = doc["feature_set"]
        peep = bool(doc["use_peepholes"])
        dims = doc["dims"]
        d_in = int(dims["input_dim"])
        hd = int(dims["hidden_dim"])
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointSchemaError(f"checkpoint header is incomplete: {e}") from None

    conv = None
    lstm_in = d_in
    if kind == "cnn_lstm":
        try:
            nf = int(dims["n_filters"])
            kl = int(dims["kernel_len"])
            st = int(dims["stride"])
        except (KeyError, TypeError, ValueError) as e:
            raise CheckpointSchemaError(f"conv dims incomplete: {e}") from None
        conv = Conv1dParams(
            kernels=_arr(doc, "conv", "kernels", (nf, kl, d_in)),
            biases=_arr(doc, "conv", "biases", (nf,)),
            stride=st)
        lstm_in = nf

    lstm = LstmParams.zeros(lstm_in, hd, use_peepholes=peep)
    for key in _LSTM_KEYS:
        shape = getattr(lstm, key).shape
        setattr(lstm, key, _arr(doc, "lstm", key, shape))
    head = DenseParams(W=_arr(doc, "head", "W", (k, hd)),
                       b=_arr(doc, "head", "b", (k,)))
    stats = FeatureStats(mean=_arr(doc, "feature_stats", "mean", (d_in,)),
                         std=_arr(doc, "feature_stats", "std", (d_in,)))
    model = Model(kind=kind, conv=conv, lstm=lstm, head=head,
                  feature_stats=stats, n_classes=k, lookback=lookback,
                  feature_set=feature_set)
    try:
        validate_model(model)
    except FlockError as e:
        raise CheckpointSchemaError(f"checkpoint is internally inconsistent: {e}") from None
    return model


def load_checkpoint(path: str | os.PathLike) -> Model:
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except OSError as e:
        raise CheckpointFormatError(f"cannot read checkpoint: {e}") from None
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointFormatError(
            f"checkpoint is not valid JSON (truncated or corrupt): {e}") from None
    return model_from_dict(doc)
