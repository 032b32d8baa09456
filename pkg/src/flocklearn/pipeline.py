"""Trajectory files -> aligned, gap-filled, feature-engineered windows.

The chain is: load per-animal trajectory CSVs, fill short telemetry gaps by
linear interpolation, intersect all animals' coverage with the labeled
intervals, derive per-animal speeds and distances to the flock centroid,
z-score-ready feature matrices, and finally slide a look-back window over
the frames.  Every stage is a pure function of its inputs with a fixed
animal ordering (sorted animal_id), so the whole pipeline is reproducible
byte for byte.

File formats (also documented in docs/FORMATS.md):
  trajectory CSV  header ``animal_id,timestamp,x,y``; integer seconds,
                  decimal meters, UTF-8, one row per sample
  label CSV       header ``t_start,t_end,activity``; half-open intervals
                  [t_start, t_end); activity in {not_active, active, herd}
  window cache    ``.npz`` with a JSON metadata entry (versioned)
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import ContractError, ParseError, ValidationError
from .fileio import atomic_write_bytes, atomic_write_text


class ActivityLabel(IntEnum):
    NOT_ACTIVE = 0
    ACTIVE = 1
    HERD_MOVEMENT = 2


LABEL_TOKENS = {
    ActivityLabel.NOT_ACTIVE: "not_active",
    ActivityLabel.ACTIVE: "active",
    ActivityLabel.HERD_MOVEMENT: "herd",
}
TOKEN_LABELS = {v: k for k, v in LABEL_TOKENS.items()}

N_CLASSES = len(ActivityLabel)


@dataclass
class Trajectory:
    """One animal's position stream, columnar: times (n,), xy (n, 2)."""

    animal_id: str
    times: np.ndarray
    xy: np.ndarray
    imputed: np.ndarray

    def __len__(self) -> int:
        return self.times.shape[0]

    def validate(self) -> None:
        n = len(self)
        if self.xy.shape != (n, 2) or self.imputed.shape != (n,):
            raise ValidationError(
                f"animal {self.animal_id}: column lengths disagree")
        if n > 1 and not (np.diff(self.times) > 0).all():
            raise ValidationError(
                f"animal {self.animal_id}: timestamps not strictly increasing")
        if not np.isfinite(self.xy).all():
            raise ValidationError(f"animal {self.animal_id}: non-finite position")


@dataclass
class LabelInterval:
    """Half-open labeled span [t_start, t_end)."""

    t_start: int
    t_end: int
    label: ActivityLabel


@dataclass
class FlockDataset:
    """Fully aligned flock: every timestep has all animals and a label."""

    animal_ids: list
    timestamps: np.ndarray          # (T,) int64
    positions: np.ndarray           # (T, n_animals, 2) float64
    labels: np.ndarray              # (T,) int64
    split_tag: str = ""

    @property
    def n_animals(self) -> int:
        return len(self.animal_ids)

    @property
    def n_timesteps(self) -> int:
        return self.timestamps.shape[0]


@dataclass
class FeatureFrame:
    """Per-timestep feature slice: one speed and one centroid distance per animal."""

    speeds: np.ndarray
    centroid_dists: np.ndarray


class FeatureFrames:
    """Columnar stack of FeatureFrame rows: speeds/centroid_dists are (T, n)."""

    def __init__(self, speeds: np.ndarray, centroid_dists: np.ndarray):
        if speeds.shape != centroid_dists.shape:
            raise ContractError("speeds and centroid_dists shapes differ")
        self.speeds = speeds
        self.centroid_dists = centroid_dists

    def __len__(self) -> int:
        return self.speeds.shape[0]

    def __getitem__(self, t: int) -> FeatureFrame:
        return FeatureFrame(speeds=self.speeds[t],
                            centroid_dists=self.centroid_dists[t])

    @property
    def n_animals(self) -> int:
        return self.speeds.shape[1]


FEATURE_SETS = ("velocities", "centroid", "both")


def feature_matrix(frames: FeatureFrames, feature_set: str) -> np.ndarray:
    """(T, D) matrix; block order is [speeds | centroid_dists] for "both"."""
    if feature_set == "velocities":
        return frames.speeds
    if feature_set == "centroid":
        return frames.centroid_dists
    if feature_set == "both":
        return np.hstack([frames.speeds, frames.centroid_dists])
    raise ContractError(
        f"feature_set must be one of {FEATURE_SETS}, got {feature_set!r}")


@dataclass
class FeatureWindow:
    frames: np.ndarray              # (m, D) view into the window stack
    target: int
    t_end: int


@dataclass
class WindowSet:
    """All look-back windows of a split: X (N, m, D), y (N,), t_end (N,)."""

    X: np.ndarray
    y: np.ndarray
    t_end: np.ndarray
    m: int
    feature_set: str
    n_animals: int

    def __len__(self) -> int:
        return self.X.shape[0]

    def __getitem__(self, i: int) -> FeatureWindow:
        return FeatureWindow(frames=self.X[i], target=int(self.y[i]),
                             t_end=int(self.t_end[i]))


# ---------------------------------------------------------------------------
# trajectory CSV


TRAJ_HEADER = ["animal_id", "timestamp", "x", "y"]


def load_trajectories(path: str | os.PathLike) -> list[Trajectory]:
    """Parse a trajectory CSV into one Trajectory per animal, sorted by id.

    Rows of one animal must appear in strictly increasing timestamp order;
    a duplicate or backwards timestamp is a validation error naming the
    animal.  A malformed row is a parse error carrying the 1-based line
    number.  An empty file yields an empty list.
    """
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        per: dict[str, list] = {}
        header_seen = False
        for lineno, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if not header_seen:
                if row != TRAJ_HEADER:
                    raise ParseError(
                        f"{path}: line {lineno}: expected header "
                        f"{','.join(TRAJ_HEADER)!r}, got {','.join(row)!r}")
                header_seen = True
                continue
            if len(row) != 4:
                raise ParseError(
                    f"{path}: line {lineno}: expected 4 fields, got {len(row)}")
            aid = row[0].strip()
            if not aid:
                raise ParseError(f"{path}: line {lineno}: empty animal_id")
            try:
                t = int(row[1])
                x = float(row[2])
                y = float(row[3])
            except ValueError as e:
                raise ParseError(f"{path}: line {lineno}: {e}") from None
            if not (np.isfinite(x) and np.isfinite(y)):
                raise ParseError(
                    f"{path}: line {lineno}: non-finite coordinate")
            rows = per.setdefault(aid, [])
            if rows:
                last_t = rows[-1][0]
                if t == last_t:
                    raise ValidationError(
                        f"animal {aid}: duplicate sample at t={t} "
                        f"(line {lineno})")
                if t < last_t:
                    raise ValidationError(
                        f"animal {aid}: timestamps not strictly increasing "
                        f"at line {lineno} (t={t} after t={last_t})")
            rows.append((t, x, y))

    out = []
    for aid in sorted(per):
        rows = per[aid]
        times = np.array([r[0] for r in rows], dtype=np.int64)
        xy = np.array([[r[1], r[2]] for r in rows], dtype=np.float64)
        traj = Trajectory(animal_id=aid, times=times, xy=xy,
                          imputed=np.zeros(len(rows), dtype=bool))
        traj.validate()
        out.append(traj)
    return out


def save_trajectories(trajs: list[Trajectory], path: str | os.PathLike) -> None:
    """Write the trajectory CSV (animals sorted by id, then time); atomic."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJ_HEADER)
    for traj in sorted(trajs, key=lambda t: t.animal_id):
        for i in range(len(traj)):
            w.writerow([traj.animal_id, int(traj.times[i]),
                        repr(float(traj.xy[i, 0])), repr(float(traj.xy[i, 1]))])
    atomic_write_text(path, buf.getvalue())


# ---------------------------------------------------------------------------
# label CSV


LABEL_HEADER = ["t_start", "t_end", "activity"]


def load_labels(path: str | os.PathLike) -> list[LabelInterval]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        out = []
        header_seen = False
        for lineno, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if not header_seen:
                if row != LABEL_HEADER:
                    raise ParseError(
                        f"{path}: line {lineno}: expected header "
                        f"{','.join(LABEL_HEADER)!r}, got {','.join(row)!r}")
                header_seen = True
                continue
            if len(row) != 3:
                raise ParseError(
                    f"{path}: line {lineno}: expected 3 fields, got {len(row)}")
            try:
                t0, t1 = int(row[0]), int(row[1])
            except ValueError as e:
                raise ParseError(f"{path}: line {lineno}: {e}") from None
            token = row[2].strip()
            if token not in TOKEN_LABELS:
                raise ParseError(
                    f"{path}: line {lineno}: unknown activity {token!r} "
                    f"(expected one of {sorted(TOKEN_LABELS)})")
            if t1 <= t0:
                raise ValidationError(
                    f"{path}: line {lineno}: empty interval [{t0}, {t1})")
            out.append(LabelInterval(t0, t1, TOKEN_LABELS[token]))
    return out


def save_labels(intervals: list[LabelInterval], path: str | os.PathLike) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LABEL_HEADER)
    for iv in intervals:
        w.writerow([iv.t_start, iv.t_end, LABEL_TOKENS[ActivityLabel(iv.label)]])
    atomic_write_text(path, buf.getvalue())


def check_non_overlapping(intervals: list[LabelInterval]) -> None:
    ivs = sorted(intervals, key=lambda iv: iv.t_start)
    for a, b in zip(ivs, ivs[1:]):
        if b.t_start < a.t_end:
            raise ValidationError(
                f"label intervals overlap: [{a.t_start}, {a.t_end}) and "
                f"[{b.t_start}, {b.t_end})")


# ---------------------------------------------------------------------------
# gap filling


def segment_spans(traj: Trajectory, max_gap: int = 60) -> list[tuple[int, int]]:
    """Index ranges [i0, i1) of samples whose internal gaps are all <= max_gap.

    Gaps wider than max_gap are segment boundaries: interpolation never
    bridges them.
    """
    n = len(traj)
    if n == 0:
        return []
    spans = []
    start = 0
    gaps = np.diff(traj.times)
    for i, g in enumerate(gaps):
        if g > max_gap:
            spans.append((start, i + 1))
            start = i + 1
    spans.append((start, n))
    return spans


def fill_gaps(traj: Trajectory, max_gap: int = 60) -> Trajectory:
    """Insert linearly interpolated 1 s ticks into gaps of width <= max_gap.

    Inserted samples are flagged imputed; real samples pass through
    untouched, so the operation is idempotent.  Wider gaps survive as
    segment boundaries (see segment_spans).
    """
    if len(traj) == 0:
        raise ContractError("fill_gaps on an empty trajectory")
    times = [int(traj.times[0])]
    xs = [traj.xy[0].copy()]
    imp = [bool(traj.imputed[0])]
    for i in range(1, len(traj)):
        t0, t1 = int(traj.times[i - 1]), int(traj.times[i])
        gap = t1 - t0
        if 1 < gap <= max_gap:
            p0, p1 = traj.xy[i - 1], traj.xy[i]
            for t in range(t0 + 1, t1):
                a = (t - t0) / gap
                times.append(t)
                xs.append(p0 + a * (p1 - p0))
                imp.append(True)
        times.append(t1)
        xs.append(traj.xy[i].copy())
        imp.append(bool(traj.imputed[i]))
    return Trajectory(animal_id=traj.animal_id,
                      times=np.array(times, dtype=np.int64),
                      xy=np.array(xs, dtype=np.float64),
                      imputed=np.array(imp, dtype=bool))


# ---------------------------------------------------------------------------
# alignment


def labels_for_times(intervals: list[LabelInterval],
                     times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(labels, covered) for each timestamp; covered=False where no interval."""
    labels = np.zeros(times.shape[0], dtype=np.int64)
    covered = np.zeros(times.shape[0], dtype=bool)
    for iv in intervals:
        inside = (times >= iv.t_start) & (times < iv.t_end)
        labels[inside] = int(iv.label)
        covered |= inside
    return labels, covered


def align_flock(trajs: list[Trajectory], intervals: list[LabelInterval],
                split_tag: str = "") -> FlockDataset:
    """Keep timesteps where every animal has a sample and a label covers it."""
    if not trajs:
        raise ContractError("align_flock needs at least one trajectory")
    check_non_overlapping(intervals)
    trajs = sorted(trajs, key=lambda t: t.animal_id)

    common = None
    for traj in trajs:
        s = traj.times
        common = s if common is None else np.intersect1d(common, s)
    if common is None or common.size == 0:
        raise ValidationError(
            "no timestep is covered by all animals (disjoint coverage)")

    labels, covered = labels_for_times(intervals, common)
    common = common[covered]
    labels = labels[covered]
    if common.size == 0:
        raise ValidationError(
            "no overlap between the animals' shared coverage and the labels")

    T, n = common.size, len(trajs)
    positions = np.empty((T, n, 2))
    for j, traj in enumerate(trajs):
        idx = np.searchsorted(traj.times, common)
        positions[:, j, :] = traj.xy[idx]
    return FlockDataset(animal_ids=[t.animal_id for t in trajs],
                        timestamps=common.astype(np.int64),
                        positions=positions, labels=labels,
                        split_tag=split_tag)


# ---------------------------------------------------------------------------
# features


def compute_features(ds: FlockDataset) -> FeatureFrames:
    """Per-animal speed and distance to the flock centroid at each timestep.

    speed_i(t) = |p_i(t) - p_i(t-1)| / dt, a causal backward difference;
    the first frame has no predecessor and copies the second frame's speed.
    centroid_dist_i(t) = |p_i(t) - mean_j p_j(t)|.
    """
    if ds.n_timesteps < 2:
        raise ContractError(
            f"need at least 2 timesteps for speeds, got {ds.n_timesteps}")
    pos = ds.positions
    dt = np.diff(ds.timestamps).astype(np.float64)[:, None]
    step = np.linalg.norm(np.diff(pos, axis=0), axis=2)
    speeds = np.empty((ds.n_timesteps, ds.n_animals))
    speeds[1:] = step / dt
    speeds[0] = speeds[1]

    centroid = pos.mean(axis=1, keepdims=True)
    dists = np.linalg.norm(pos - centroid, axis=2)
    return FeatureFrames(speeds=speeds, centroid_dists=dists)


def compute_feature_stats(frames: FeatureFrames, feature_set: str):
    """Mean/std per feature column (std floored at 1e-8), for z-scoring."""
    from .network import FeatureStats

    mat = feature_matrix(frames, feature_set)
    return FeatureStats(mean=mat.mean(axis=0),
                        std=np.maximum(mat.std(axis=0), 1e-8))


def make_windows(frames: FeatureFrames, labels: np.ndarray, m: int,
                 feature_set: str,
                 timestamps: np.ndarray | None = None) -> WindowSet:
    """Stride-1 look-back windows; the window ending at t is labeled y(t)."""
    if m < 1:
        raise ContractError(f"window length must be >= 1, got {m}")
    T = len(frames)
    if T < m:
        raise ContractError(f"{T} frames cannot fill a window of {m}")
    labels = np.asarray(labels)
    if labels.shape != (T,):
        raise ContractError(
            f"labels shape {labels.shape} does not match {T} frames")
    mat = feature_matrix(frames, feature_set)
    N = T - m + 1
    X = np.lib.stride_tricks.sliding_window_view(mat, (m, mat.shape[1]))
    X = np.ascontiguousarray(X.reshape(N, m, mat.shape[1]))
    y = labels[m - 1:].astype(np.int64)
    if timestamps is None:
        t_end = np.arange(m - 1, T, dtype=np.int64)
    else:
        t_end = np.asarray(timestamps, dtype=np.int64)[m - 1:]
    return WindowSet(X=X, y=y, t_end=t_end, m=m, feature_set=feature_set,
                     n_animals=frames.n_animals)


def one_hot(label, k: int) -> np.ndarray:
    idx = int(label)
    if not 0 <= idx < k:
        raise ContractError(f"label {idx} outside [0, {k})")
    v = np.zeros(k)
    v[idx] = 1.0
    return v


def class_distribution(ds_or_labels) -> list[tuple[int, float]]:
    """Per-class (count, percent of total), indexed by class value 0..k-1."""
    labels = getattr(ds_or_labels, "labels", ds_or_labels)
    labels = np.asarray(labels)
    total = labels.size
    out = []
    for c in range(N_CLASSES):
        n = int((labels == c).sum())
        pct = 100.0 * n / total if total else 0.0
        out.append((n, pct))
    return out


# ---------------------------------------------------------------------------
# window cache


CACHE_FORMAT = "flocklearn-windows"
CACHE_VERSION = 1


def save_window_cache(ws: WindowSet, path: str | os.PathLike,
                      split_tag: str = "",
                      extra_meta: dict | None = None) -> None:
    """Persist a WindowSet as .npz with a JSON metadata entry; atomic.

    extra_meta rides along in the JSON blob (the preprocess command stores
    training-set feature statistics there); keys must not collide with the
    cache's own fields.
    """
    meta = {
        "format": CACHE_FORMAT,
        "version": CACHE_VERSION,
        "m": ws.m,
        "feature_set": ws.feature_set,
        "n_animals": ws.n_animals,
        "split_tag": split_tag,
    }
    if extra_meta:
        clash = set(extra_meta) & set(meta)
        if clash:
            raise ContractError(
                f"extra metadata keys collide with cache fields: "
                f"{sorted(clash)}")
        meta.update(extra_meta)
    buf = io.BytesIO()
    np.savez(buf, meta=np.frombuffer(
        json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8),
        X=ws.X, y=ws.y, t_end=ws.t_end)
    atomic_write_bytes(path, buf.getvalue())


def load_window_cache(path: str | os.PathLike) -> tuple[WindowSet, dict]:
    try:
        with np.load(path) as z:
            names = set(z.files)
            if "meta" not in names:
                raise ParseError(f"{path}: not a window cache (no metadata)")
            meta = json.loads(bytes(z["meta"]).decode("utf-8"))
            if meta.get("format") != CACHE_FORMAT:
                raise ParseError(f"{path}: not a window cache")
            if meta.get("version") != CACHE_VERSION:
                raise ParseError(
                    f"{path}: cache version {meta.get('version')!r} not "
                    f"supported (this build reads {CACHE_VERSION})")
            if not {"X", "y", "t_end"} <= names:
                raise ParseError(f"{path}: cache is missing arrays")
            X = z["X"]
            y = z["y"]
            t_end = z["t_end"]
    except (OSError, ValueError, json.JSONDecodeError) as e:
        raise ParseError(f"{path}: cannot read window cache: {e}") from None
    if X.ndim != 3 or X.shape[0] != y.shape[0] or X.shape[1] != meta["m"]:
        raise ParseError(f"{path}: cache arrays inconsistent with metadata")
    ws = WindowSet(X=X, y=y, t_end=t_end, m=int(meta["m"]),
                   feature_set=meta["feature_set"],
                   n_animals=int(meta["n_animals"]))
    return ws, meta


# ---------------------------------------------------------------------------
# geodetic helper


EARTH_RADIUS_M = 6_371_000.0


def latlon_to_xy(lat: np.ndarray, lon: np.ndarray,
                 center: tuple[float, float] | None = None):
    """Equirectangular projection of lat/lon degrees to local meters.

    x grows east, y grows north, origin at ``center`` (defaults to the
    centroid of the inputs).  Adequate below a few kilometers of extent,
    which covers a paddock.  Returns (x, y, center).
    """
    lat = np.asarray(lat, dtype=np.float64)
    lon = np.asarray(lon, dtype=np.float64)
    if lat.shape != lon.shape:
        raise ContractError("lat and lon shapes differ")
    if center is None:
        center = (float(lat.mean()), float(lon.mean()))
    lat0, lon0 = center
    y = np.radians(lat - lat0) * EARTH_RADIUS_M
    x = np.radians(lon - lon0) * EARTH_RADIUS_M * np.cos(np.radians(lat0))
    return x, y, center
