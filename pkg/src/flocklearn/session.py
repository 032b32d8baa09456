"""File exchange with the browser labeling tool.

Two JSON documents, both versioned (field-by-field docs in
docs/FORMATS.md):

  session  self-contained scene for the viewer: time axis, per-frame
           animal positions, arena bounds for rendering scale, and any
           labels already assigned.
  labels   just the interval annotations, the only thing the UI is
           allowed to write back.

Sessions can get large (frames are T x n x 2), so export enforces a
configurable frame cap and tells the operator to split the day rather
than silently producing a file the browser will choke on.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import ContractError, ParseError, ValidationError
from .fileio import atomic_write_text
from .pipeline import (LABEL_TOKENS, TOKEN_LABELS, LabelInterval, Trajectory,
                       check_non_overlapping)

SESSION_FORMAT = "flock-session"
LABELS_FORMAT = "flock-labels"
SESSION_VERSION = 1
LABELS_VERSION = 1

DEFAULT_FRAME_CAP = 50_000


def common_timeline(trajs: list) -> tuple:
    """Timestamps shared by every animal, with positions stacked (T, n, 2)."""
    if not trajs:
        raise ContractError("no trajectories to build a timeline from")
    times = trajs[0].times
    for tr in trajs[1:]:
        times = np.intersect1d(times, tr.times, assume_unique=True)
    if times.size == 0:
        raise ValidationError("animals share no common timestamps")
    order = sorted(range(len(trajs)), key=lambda i: trajs[i].animal_id)
    ids = [trajs[i].animal_id for i in order]
    pos = np.empty((times.size, len(trajs), 2))
    for col, i in enumerate(order):
        idx = np.searchsorted(trajs[i].times, times)
        pos[:, col, :] = trajs[i].xy[idx]
    return ids, times, pos


def _labels_payload(intervals: list) -> list:
    out = []
    for iv in sorted(intervals, key=lambda iv: iv.t_start):
        out.append({"t_start": int(iv.t_start), "t_end": int(iv.t_end),
                    "activity": LABEL_TOKENS[iv.label]})
    return out


def build_session(trajs: list, intervals: list | None = None,
                  arena: tuple | None = None,
                  frame_cap: int = DEFAULT_FRAME_CAP) -> dict:
    """Session document from trajectories (+ optional existing labels)."""
    ids, times, pos = common_timeline(trajs)
    if times.size > frame_cap:
        raise ValidationError(
            f"session would hold {times.size} frames, above the cap of "
            f"{frame_cap}; split the trajectory file into shorter segments "
            f"and export each separately")
    if intervals:
        check_non_overlapping(intervals)
    if arena is None:
        # pad the data's bounding box so the viewer has breathing room
        lo = pos.reshape(-1, 2).min(axis=0)
        hi = pos.reshape(-1, 2).max(axis=0)
        span = np.maximum(hi - lo, 1.0)
        arena = (float(hi[0] + 0.05 * span[0]), float(hi[1] + 0.05 * span[1]))
    return {
        "format": SESSION_FORMAT,
        "version": SESSION_VERSION,
        "animal_ids": list(ids),
        "timestamps": [int(t) for t in times],
        "frames": [[[float(pos[t, j, 0]), float(pos[t, j, 1])]
                    for j in range(pos.shape[1])]
                   for t in range(pos.shape[0])],
        "arena": {"width": float(arena[0]), "height": float(arena[1])},
        "labels": _labels_payload(intervals or []),
    }


def session_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def save_session(path, doc: dict) -> None:
    atomic_write_text(path, session_json(doc))


def labels_document(intervals: list) -> dict:
    check_non_overlapping(intervals)
    return {"format": LABELS_FORMAT, "version": LABELS_VERSION,
            "labels": _labels_payload(intervals)}


def labels_json(intervals: list) -> str:
    return json.dumps(labels_document(intervals), sort_keys=True,
                      separators=(",", ":")) + "\n"


def save_labels_json(path, intervals: list) -> None:
    atomic_write_text(path, labels_json(intervals))


def _require(doc: dict, key: str, what: str):
    if key not in doc:
        raise ParseError(f"{what} is missing the {key!r} field")
    return doc[key]


def parse_labels_document(doc: dict) -> list:
    """UI label JSON -> validated LabelInterval list (sorted, non-overlap)."""
    if not isinstance(doc, dict):
        raise ParseError("label document must be a JSON object")
    fmt = _require(doc, "format", "label document")
    if fmt != LABELS_FORMAT:
        raise ParseError(f"expected format {LABELS_FORMAT!r}, got {fmt!r}")
    version = _require(doc, "version", "label document")
    if version != LABELS_VERSION:
        raise ParseError(f"unsupported label schema version {version!r}")
    rows = _require(doc, "labels", "label document")
    if not isinstance(rows, list):
        raise ParseError("'labels' must be a list")
    intervals = []
    for i, row in enumerate(rows):
        try:
            t0 = int(row["t_start"])
            t1 = int(row["t_end"])
            token = row["activity"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"label entry {i} is malformed: {exc}") from exc
        if token not in TOKEN_LABELS:
            raise ParseError(
                f"label entry {i} has unknown activity {token!r}; expected "
                f"one of {', '.join(LABEL_TOKENS.values())}")
        if t1 <= t0:
            raise ValidationError(
                f"label entry {i} has empty interval [{t0}, {t1})")
        intervals.append(LabelInterval(t0, t1, TOKEN_LABELS[token]))
    intervals.sort(key=lambda iv: iv.t_start)
    check_non_overlapping(intervals)
    return intervals


def load_labels_json(path) -> list:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read label file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"label file {path} is not valid JSON: {exc}") from exc
    return parse_labels_document(doc)


def parse_session_document(doc: dict) -> tuple:
    """Session JSON -> (trajectories, intervals); inverse of build_session."""
    if not isinstance(doc, dict):
        raise ParseError("session document must be a JSON object")
    fmt = _require(doc, "format", "session document")
    if fmt != SESSION_FORMAT:
        raise ParseError(f"expected format {SESSION_FORMAT!r}, got {fmt!r}")
    version = _require(doc, "version", "session document")
    if version != SESSION_VERSION:
        raise ParseError(f"unsupported session schema version {version!r}")
    ids = _require(doc, "animal_ids", "session document")
    times = np.asarray(_require(doc, "timestamps", "session document"),
                       dtype=np.int64)
    frames = np.asarray(_require(doc, "frames", "session document"),
                        dtype=float)
    if frames.ndim != 3 or frames.shape[0] != times.size \
            or frames.shape[1] != len(ids) or frames.shape[2] != 2:
        raise ParseError(
            f"frames shape {frames.shape} does not match {times.size} "
            f"timestamps x {len(ids)} animals x 2")
    label_rows = doc.get("labels", [])
    intervals = parse_labels_document(
        {"format": LABELS_FORMAT, "version": LABELS_VERSION,
         "labels": label_rows})
    trajs = [
        Trajectory(animal_id=str(ids[j]), times=times.copy(),
                   xy=frames[:, j, :].copy(),
                   imputed=np.zeros(times.size, dtype=bool))
        for j in range(len(ids))
    ]
    return trajs, intervals


def load_session(path) -> tuple:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read session file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"session file {path} is not valid JSON: {exc}") from exc
    return parse_session_document(doc)
