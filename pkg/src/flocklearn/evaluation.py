"""Accuracy and confusion-matrix reporting for the skewed 3-class task.

Prediction here deliberately goes through the one-window forward path,
not the batched trainer path, so that batch evaluation and the streaming
predictor produce bit-identical outputs on the same data.

The rendered report puts the rare class first (display order herd,
active, not_active) because the interesting number on this task is the
herd row, and serializes floats with repr so parse(render(x)) == x.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ParseError, ShapeError
from .network import Model, predict
from .pipeline import LABEL_TOKENS, N_CLASSES, TOKEN_LABELS, WindowSet

# Fig-2-style display order: rare class on top
DISPLAY_ORDER = (2, 1, 0)

REPORT_HEADER = "collective-activity evaluation"
REPORT_VERSION = 1


@dataclass
class ConfusionMatrix:
    counts: np.ndarray          # (k, k) int64, rows true, cols predicted
    row_normalized: np.ndarray  # (k, k) float, zero-count rows all zero
    zero_rows: np.ndarray       # (k,) bool flags for empty true classes

    @classmethod
    def from_counts(cls, counts: np.ndarray) -> "ConfusionMatrix":
        counts = np.asarray(counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ShapeError(f"confusion counts must be square, got {counts.shape}")
        if (counts < 0).any():
            raise ContractError("confusion counts must be nonnegative")
        row_sums = counts.sum(axis=1)
        zero = row_sums == 0
        norm = np.zeros(counts.shape, dtype=float)
        nz = ~zero
        norm[nz] = counts[nz] / row_sums[nz, None]
        return cls(counts=counts, row_normalized=norm, zero_rows=zero)

    @classmethod
    def from_pairs(cls, y_true, y_pred, k: int = N_CLASSES) -> "ConfusionMatrix":
        y_true = np.asarray(y_true, dtype=np.int64)
        y_pred = np.asarray(y_pred, dtype=np.int64)
        if y_true.shape != y_pred.shape or y_true.ndim != 1:
            raise ShapeError(
                f"label vectors must be equal-length 1-d, got "
                f"{y_true.shape} and {y_pred.shape}")
        if y_true.size == 0:
            raise ContractError("cannot tally an empty prediction set")
        if ((y_true < 0) | (y_true >= k)).any() or ((y_pred < 0) | (y_pred >= k)).any():
            raise ContractError(f"labels must lie in [0, {k})")
        counts = np.zeros((k, k), dtype=np.int64)
        np.add.at(counts, (y_true, y_pred), 1)
        return cls.from_counts(counts)

    @property
    def k(self) -> int:
        return self.counts.shape[0]


@dataclass
class EvalReport:
    accuracy: float
    confusion: ConfusionMatrix
    per_class_recall: np.ndarray    # diagonal of the row-normalized matrix
    n_samples: int


def report_from_pairs(y_true, y_pred, k: int = N_CLASSES) -> EvalReport:
    cm = ConfusionMatrix.from_pairs(y_true, y_pred, k)
    n = int(cm.counts.sum())
    return EvalReport(
        accuracy=float(np.trace(cm.counts) / n),
        confusion=cm,
        per_class_recall=np.diag(cm.row_normalized).copy(),
        n_samples=n,
    )


def evaluate(model: Model, windows: WindowSet) -> EvalReport:
    """Predict every window (one at a time, see module docstring) and tally."""
    n = len(windows)
    if n == 0:
        raise ContractError("evaluate needs at least one window")
    if windows.X.shape[2] != model.input_dim:
        raise ShapeError(
            f"window feature dim {windows.X.shape[2]} does not match model "
            f"input dim {model.input_dim}")
    preds = np.empty(n, dtype=np.int64)
    for i in range(n):
        preds[i], _ = predict(model, windows.X[i])
    return report_from_pairs(windows.y, preds, model.n_classes)


def predictions(model: Model, windows: WindowSet) -> np.ndarray:
    """Per-window (label, p0..pk-1) through the same path as evaluate."""
    n = len(windows)
    out = np.empty((n, 1 + model.n_classes))
    for i in range(n):
        label, probs = predict(model, windows.X[i])
        out[i, 0] = label
        out[i, 1:] = probs
    return out


def mean_epoch_accuracy(log) -> tuple[float, float]:
    """Mean and population std of a per-epoch accuracy series."""
    vals = np.asarray(log, dtype=float)
    if vals.size == 0:
        raise ContractError("accuracy log is empty")
    return float(vals.mean()), float(vals.std())


# ---------------------------------------------------------------------------
# text report format (documented in docs/FORMATS.md)


def render_report(report: EvalReport) -> str:
    cm = report.confusion
    if cm.k != len(LABEL_TOKENS):
        raise ContractError(
            f"report rendering is defined for the {len(LABEL_TOKENS)}-class "
            f"task, got k={cm.k}")
    lines = [REPORT_HEADER, f"version: {REPORT_VERSION}",
             f"n_samples: {report.n_samples}",
             f"accuracy: {report.accuracy!r}"]
    recalls = " ".join(
        f"{LABEL_TOKENS[c]}={float(report.per_class_recall[c])!r}"
        for c in DISPLAY_ORDER)
    lines.append(f"per_class_recall: {recalls}")
    flagged = [LABEL_TOKENS[c] for c in DISPLAY_ORDER if cm.zero_rows[c]]
    lines.append("zero_rows: " + (",".join(flagged) if flagged else "none"))
    lines.append("counts:")
    for c in DISPLAY_ORDER:
        row = " ".join(str(int(cm.counts[c, d])) for d in DISPLAY_ORDER)
        lines.append(f"  {LABEL_TOKENS[c]} {row}")
    lines.append("row_normalized:")
    for c in DISPLAY_ORDER:
        row = " ".join(repr(float(cm.row_normalized[c, d]))
                       for d in DISPLAY_ORDER)
        lines.append(f"  {LABEL_TOKENS[c]} {row}")
    return "\n".join(lines) + "\n"


def _expect(cond: bool, lineno: int, msg: str) -> None:
    if not cond:
        raise ParseError(f"report line {lineno}: {msg}")


def parse_report(text: str) -> EvalReport:
    """Inverse of render_report; recomputes derived fields and checks them."""
    lines = text.splitlines()
    _expect(len(lines) >= 6 + 2 * len(DISPLAY_ORDER) + 2, 0,
            "report is truncated")
    _expect(lines[0] == REPORT_HEADER, 1, f"expected header {REPORT_HEADER!r}")
    _expect(lines[1] == f"version: {REPORT_VERSION}", 2,
            f"unsupported version line {lines[1]!r}")

    def field(idx: int, key: str) -> str:
        prefix = key + ": "
        _expect(lines[idx].startswith(prefix), idx + 1,
                f"expected field {key!r}")
        return lines[idx][len(prefix):]

    try:
        n_samples = int(field(2, "n_samples"))
        accuracy = float(field(3, "accuracy"))
        recall_txt = field(4, "per_class_recall")
        field(5, "zero_rows")
        _expect(lines[6] == "counts:", 7, "expected counts block")
        k = len(DISPLAY_ORDER)
        counts = np.zeros((k, k), dtype=np.int64)
        for r, c in enumerate(DISPLAY_ORDER):
            parts = lines[7 + r].split()
            _expect(len(parts) == 1 + k and parts[0] == LABEL_TOKENS[c],
                    8 + r, f"bad counts row for {LABEL_TOKENS[c]}")
            counts[c, list(DISPLAY_ORDER)] = [int(x) for x in parts[1:]]
        _expect(lines[7 + k] == "row_normalized:", 8 + k,
                "expected row_normalized block")
        norm_rows = {}
        for r, c in enumerate(DISPLAY_ORDER):
            parts = lines[8 + k + r].split()
            _expect(len(parts) == 1 + k and parts[0] == LABEL_TOKENS[c],
                    9 + k + r, f"bad normalized row for {LABEL_TOKENS[c]}")
            norm_rows[c] = [float(x) for x in parts[1:]]
    except (ValueError, IndexError) as exc:
        raise ParseError(f"malformed report: {exc}") from exc

    cm = ConfusionMatrix.from_counts(counts)
    _expect(int(cm.counts.sum()) == n_samples, 3,
            "counts do not sum to n_samples")
    report = EvalReport(
        accuracy=float(np.trace(cm.counts) / n_samples),
        confusion=cm,
        per_class_recall=np.diag(cm.row_normalized).copy(),
        n_samples=n_samples)
    _expect(report.accuracy == accuracy, 4,
            "stated accuracy disagrees with counts")
    for c in DISPLAY_ORDER:
        # rows were written from the same computation; exact match expected
        _expect(bool((cm.row_normalized[c, list(DISPLAY_ORDER)]
                      == np.array(norm_rows[c])).all()), 0,
                f"normalized row for {LABEL_TOKENS[c]} disagrees with counts")
    for token_eq in recall_txt.split():
        token, _, value = token_eq.partition("=")
        _expect(token in TOKEN_LABELS, 5, f"unknown class token {token!r}")
        _expect(float(value) == report.per_class_recall[TOKEN_LABELS[token]],
                5, f"stated recall for {token} disagrees with counts")
    return report
