"""Online many-to-one prediction over a live flock position stream.

One row per second arrives with every animal's position.  The predictor
keeps a rolling buffer of the last `lookback` feature frames; memory and
per-row cost are constant in stream length.

The tricky part is matching the batch pipeline bit for bit.  Offline,
speeds come from global diffs with frame 0's speed copied from frame 1.
Online, frame 0's speed is unknown until the second row arrives, so the
first frame is buffered provisionally and patched when row 1 shows up.
Predictions only start at row `lookback`, well after the patch, so the
streamed window contents equal the batch windows exactly and inference
goes through the same one-window forward path as batch evaluation.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .errors import ContractError, ParseError, ShapeError
from .network import Model, predict
from .pipeline import LABEL_TOKENS

_BLOCKS = {"velocities": 1, "centroid": 1, "both": 2}


class StreamPredictor:
    """Feed (timestamp, positions) rows; get warmup markers then labels."""

    def __init__(self, model: Model):
        blocks = _BLOCKS.get(model.feature_set)
        if blocks is None:
            raise ContractError(f"unknown feature set {model.feature_set!r}")
        if model.input_dim % blocks != 0:
            raise ShapeError(
                f"model input dim {model.input_dim} is not divisible by its "
                f"{blocks} feature block(s)")
        if model.lookback < 2:
            raise ContractError(
                "streaming needs lookback >= 2: frame 0's speed is copied "
                "from frame 1, which is unknowable at the first row")
        self.model = model
        self.n_animals = model.input_dim // blocks
        self.lookback = model.lookback
        self._frames = deque(maxlen=self.lookback)
        self._prev_time: int | None = None
        self._prev_pos: np.ndarray | None = None
        self._first_frame_patched = False

    def _feature_row(self, speeds: np.ndarray, pos: np.ndarray) -> np.ndarray:
        fs = self.model.feature_set
        if fs == "velocities":
            return speeds
        dists = np.linalg.norm(pos - pos.mean(axis=0), axis=1)
        if fs == "centroid":
            return dists
        return np.concatenate([speeds, dists])

    def feed(self, timestamp: int, positions: np.ndarray):
        """Returns (kind, payload): ("warmup", None) or ("prediction",
        (label:int, probs)).  Timestamps must be strictly increasing."""
        positions = np.asarray(positions, dtype=float)
        if positions.shape != (self.n_animals, 2):
            raise ShapeError(
                f"expected positions of shape ({self.n_animals}, 2), got "
                f"{positions.shape}")
        if self._prev_time is not None and timestamp <= self._prev_time:
            raise ContractError(
                f"timestamps must increase: {timestamp} after "
                f"{self._prev_time}")

        if self._prev_pos is None:
            # provisional zero-speed first frame, patched on the next row
            speeds = np.zeros(self.n_animals)
        else:
            dt = float(timestamp - self._prev_time)
            speeds = np.linalg.norm(positions - self._prev_pos, axis=1) / dt
            if not self._first_frame_patched and len(self._frames) == 1:
                self._frames[0] = self._feature_row(speeds, self._first_pos)
                self._first_frame_patched = True
        if self._prev_pos is None:
            self._first_pos = positions.copy()

        self._frames.append(self._feature_row(speeds, positions))
        self._prev_time = int(timestamp)
        self._prev_pos = positions.copy()

        if len(self._frames) < self.lookback:
            return ("warmup", None)
        window = np.stack(self._frames, axis=0)
        label, probs = predict(self.model, window)
        return ("prediction", (label, probs))


def parse_stream_line(line: str, n_animals: int):
    """`timestamp,x1,y1,...` -> (timestamp, (n, 2) positions)."""
    parts = line.strip().split(",")
    if len(parts) != 1 + 2 * n_animals:
        raise ParseError(
            f"expected {1 + 2 * n_animals} comma-separated fields "
            f"(timestamp plus x,y for {n_animals} animals), got {len(parts)}")
    try:
        ts = int(parts[0])
        vals = np.array([float(v) for v in parts[1:]])
    except ValueError as exc:
        raise ParseError(f"non-numeric field: {exc}") from exc
    return ts, vals.reshape(n_animals, 2)


def format_prediction(timestamp: int, label: int, probs: np.ndarray) -> str:
    probs_txt = ",".join(repr(float(p)) for p in probs)
    return f"{timestamp},{LABEL_TOKENS[label]},{probs_txt}"


def format_warmup(timestamp: int) -> str:
    return f"{timestamp},warmup"
