"""Seeded agent-based flock generator for the three collective activities.

Replaces an unreleased field dataset with a desk-scale synthetic one whose
regimes are constructed so the learning problem has the intended structure:

  NotActive  tight cluster around a home point, near-zero speeds.
  Active     flock dispersed over a wide disk, cycling through bouts where
             every animal walks between waypoints (ON) and lulls where all
             idle (OFF); each block ends with a slower regroup toward the
             block anchor so a following NotActive block starts compact.
  Herd       the whole flock marches as a narrow column along a straight
             corridor at high pace.

The deliberate trap: herd pace and active bout speeds are drawn from
overlapping bands (herd's inside active's), the herd pace wanders within
its band during a bout, and active ON bouts move every animal at once, so
per-animal speeds alone cannot tell the two regimes apart within a
look-back window.  The spatial signature differs sharply
(column spread ~10 m against a ~40 m wander disk), which is exactly what
the centroid-distance features expose.

Per-step displacements per animal:
  steering  regime-specific pull (home / waypoint / column slot), gain
            scaled by cohesion_weight, norm-capped
  pacing    per-animal speed resampled every 10 s from a clipped normal
            around the current pace
  repulsion pairwise push-apart below 0.6 m, scaled by repulsion_weight
  jitter    isotropic positional noise of noise_std meters

Everything is drawn from one counter-based generator, so a run is a pure
function of its config.  Positions reflect off the arena walls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .pipeline import (ActivityLabel, FlockDataset, LabelInterval, Trajectory,
                       align_flock)
from .rng import Rng


@dataclass
class RegimeParams:
    mean_speed: float
    speed_std: float
    cohesion_radius: float
    alignment_weight: float = 0.0
    cohesion_weight: float = 1.0
    repulsion_weight: float = 1.0
    corridor_width: float = 8.0

    def validate(self) -> None:
        for name in ("mean_speed", "speed_std", "cohesion_radius",
                     "alignment_weight", "cohesion_weight",
                     "repulsion_weight", "corridor_width"):
            if getattr(self, name) < 0:
                raise ConfigError(f"regime parameter {name} must be >= 0")


def default_regimes() -> dict:
    """Per-regime defaults; all are simulator knobs, freely configurable."""
    return {
        ActivityLabel.NOT_ACTIVE: RegimeParams(
            mean_speed=0.02, speed_std=0.015, cohesion_radius=2.0),
        ActivityLabel.ACTIVE: RegimeParams(
            mean_speed=1.0, speed_std=0.3, cohesion_radius=45.0),
        ActivityLabel.HERD_MOVEMENT: RegimeParams(
            mean_speed=1.2, speed_std=0.35, cohesion_radius=12.0,
            alignment_weight=1.0, corridor_width=8.0),
    }


@dataclass
class SimConfig:
    duration: int
    seed: int
    regime_schedule: list                      # [(duration_s, ActivityLabel)]
    n_animals: int = 36
    arena: tuple = (300.0, 300.0)
    noise_std: float = 0.02
    regimes: dict = field(default_factory=default_regimes)

    def validate(self) -> None:
        if self.n_animals < 2:
            raise ConfigError(f"need at least 2 animals, got {self.n_animals}")
        if self.arena[0] <= 0 or self.arena[1] <= 0:
            raise ConfigError(f"arena must be positive, got {self.arena}")
        if self.noise_std < 0:
            raise ConfigError("noise_std must be >= 0")
        if not self.regime_schedule:
            raise ConfigError("regime schedule is empty")
        total = 0
        for dur, regime in self.regime_schedule:
            if dur < 1:
                raise ConfigError(f"schedule block duration {dur} < 1 s")
            if ActivityLabel(regime) not in self.regimes:
                raise ConfigError(f"no parameters for regime {regime}")
            total += dur
        if total != self.duration:
            raise ConfigError(
                f"schedule blocks sum to {total} s but duration is "
                f"{self.duration} s")
        for prm in self.regimes.values():
            prm.validate()


# ---------------------------------------------------------------------------
# shared step mechanics


_SPEED_LO, _SPEED_HI = 0.2, 2.2     # walking-speed clamp for fast regimes
_REDRAW_EVERY = 10                  # seconds between per-animal pace redraws
_PACE_WANDER_EVERY = 40             # seconds between herd bout pace redraws


def _clipped_normal(rng: Rng, n: int, mean: float, std: float,
                    lo: float, hi: float) -> np.ndarray:
    return np.clip(rng.normal_array(n, mean, std), lo, hi)


def _unit_cap(v: np.ndarray, cap: float) -> np.ndarray:
    """Cap each row's norm at `cap` without changing its direction."""
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    scale = np.minimum(1.0, cap / np.maximum(norms, 1e-12))
    return v * scale


def _separation(p: np.ndarray, weight: float) -> np.ndarray:
    """Push overlapping animals apart (active below 0.6 m)."""
    if weight == 0.0:
        return np.zeros_like(p)
    r0 = 0.6
    diff = p[:, None, :] - p[None, :, :]
    d = np.linalg.norm(diff, axis=2)
    np.fill_diagonal(d, np.inf)
    close = d < r0
    if not close.any():
        return np.zeros_like(p)
    push = np.where(close[:, :, None], diff / d[:, :, None] ** 2 * 0.05, 0.0)
    return _unit_cap(push.sum(axis=1) * weight, 0.15)


def _reflect(p: np.ndarray, arena: tuple) -> np.ndarray:
    w, h = arena
    p[:, 0] = np.abs(p[:, 0])
    p[:, 1] = np.abs(p[:, 1])
    p[:, 0] = w - np.abs(w - p[:, 0])
    p[:, 1] = h - np.abs(h - p[:, 1])
    return p


def _idle_wander(rng: Rng, n: int, prm_mean: float, prm_std: float):
    """Slow per-animal drift vectors, redrawn by the caller every ~15 s."""
    ang = rng.uniform_array(n, 0.0, 2.0 * math.pi)
    mag = _clipped_normal(rng, n, prm_mean, prm_std, 0.0, 0.08)
    return np.stack([np.cos(ang), np.sin(ang)], axis=1) * mag[:, None]


# ---------------------------------------------------------------------------
# regime drivers (each fills out[t] for t in range(len(out)) and mutates p)


def _drive_not_active(p, out, rng, prm, arena, noise_std):
    n = p.shape[0]
    home = p.mean(axis=0)
    rest = home + rng.normal_array(2 * n, 0.0, prm.cohesion_radius * 0.8).reshape(n, 2)
    drift = _idle_wander(rng, n, prm.mean_speed, prm.speed_std)
    for t in range(out.shape[0]):
        if t % 15 == 0 and t > 0:
            drift = _idle_wander(rng, n, prm.mean_speed, prm.speed_std)
        pull = _unit_cap((rest - p) * 0.05 * prm.cohesion_weight, 0.3)
        p += pull + drift + _separation(p, prm.repulsion_weight)
        p += rng.normal_array(2 * n, 0.0, noise_std).reshape(n, 2)
        out[t] = _reflect(p, arena)


def _active_phases(rng: Rng, dur: int, regroup: bool) -> list:
    """(kind, length) list: ON/OFF bout cycling, optionally a regroup tail."""
    gather = min(180, dur // 4) if regroup else 0
    phases = []
    left = dur - gather
    on = True
    while left > 0:
        ln = (25 + rng.below(46)) if on else (20 + rng.below(36))
        ln = min(ln, left)
        phases.append(("on" if on else "off", ln))
        left -= ln
        on = not on
    if gather > 0:
        phases.append(("gather", gather))
    return phases


def _drive_active(p, out, rng, prm, arena, noise_std, regroup=False):
    n = p.shape[0]
    anchor = p.mean(axis=0).copy()
    w, h = arena
    margin = 15.0

    def new_waypoints(count):
        ang = rng.uniform_array(count, 0.0, 2.0 * math.pi)
        rad = prm.cohesion_radius * np.sqrt(rng.uniform_array(count))
        wp = anchor + np.stack([np.cos(ang), np.sin(ang)], axis=1) * rad[:, None]
        wp[:, 0] = np.clip(wp[:, 0], margin, w - margin)
        wp[:, 1] = np.clip(wp[:, 1], margin, h - margin)
        return wp

    t_global = 0
    for kind, length in _active_phases(rng, out.shape[0], regroup):
        if kind == "on":
            # every animal walks at once; pace band overlaps the herd's
            pace = prm.mean_speed + rng.uniform(-0.3, 0.6)
            speeds = _clipped_normal(rng, n, pace, prm.speed_std,
                                     _SPEED_LO, _SPEED_HI)
            targets = new_waypoints(n)
            for _ in range(length):
                if t_global % _REDRAW_EVERY == 0:
                    speeds = _clipped_normal(rng, n, pace, prm.speed_std,
                                             _SPEED_LO, _SPEED_HI)
                to = targets - p
                dist = np.linalg.norm(to, axis=1)
                arrived = dist < speeds
                if arrived.any():
                    targets[arrived] = new_waypoints(int(arrived.sum()))
                    to = targets - p
                    dist = np.linalg.norm(to, axis=1)
                step = to / np.maximum(dist, 1e-12)[:, None] * speeds[:, None]
                p += step + _separation(p, prm.repulsion_weight)
                p += rng.normal_array(2 * n, 0.0, noise_std).reshape(n, 2)
                out[t_global] = _reflect(p, arena)
                t_global += 1
        elif kind == "off":
            drift = _idle_wander(rng, n, 0.03, 0.015)
            for k in range(length):
                if k % 15 == 0 and k > 0:
                    drift = _idle_wander(rng, n, 0.03, 0.015)
                p += drift + _separation(p, prm.repulsion_weight)
                p += rng.normal_array(2 * n, 0.0, noise_std).reshape(n, 2)
                out[t_global] = _reflect(p, arena)
                t_global += 1
        else:   # regroup toward the anchor at sub-herd pace
            rest = anchor + rng.normal_array(2 * n, 0.0, 1.5).reshape(n, 2)
            speeds = _clipped_normal(rng, n, 0.5, 0.12, 0.25, 0.8)
            drift = _idle_wander(rng, n, 0.03, 0.015)
            for k in range(length):
                if t_global % _REDRAW_EVERY == 0:
                    speeds = _clipped_normal(rng, n, 0.5, 0.12, 0.25, 0.8)
                if k % 15 == 0 and k > 0:
                    drift = _idle_wander(rng, n, 0.03, 0.015)
                to = rest - p
                dist = np.linalg.norm(to, axis=1)
                walking = dist > 0.5
                step = np.where(
                    walking[:, None],
                    to / np.maximum(dist, 1e-12)[:, None]
                    * np.minimum(speeds, dist)[:, None],
                    drift)
                p += step + _separation(p, prm.repulsion_weight)
                p += rng.normal_array(2 * n, 0.0, noise_std).reshape(n, 2)
                out[t_global] = _reflect(p, arena)
                t_global += 1


def _drive_herd(p, out, rng, prm, arena, noise_std):
    n = p.shape[0]
    w, h = arena
    inset = 25.0
    col_len = 2.0 * prm.cohesion_radius
    # pace band sits inside the active bout band, so speed alone is
    # ambiguous; it also wanders within the band during the bout so no
    # single draw brands the whole event
    pace = prm.mean_speed + rng.uniform(-0.4, 0.4)
    slot_lat = rng.uniform_array(n, -prm.corridor_width / 2,
                                 prm.corridor_width / 2)
    corners = np.array([[inset, inset], [w - inset, inset],
                        [inset, h - inset], [w - inset, h - inset]])

    def aim():
        """Point the corridor at the farthest corner from the centroid."""
        c0 = p.mean(axis=0)
        far = corners[np.argmax(np.linalg.norm(corners - c0, axis=1))]
        ang = (math.atan2(far[1] - c0[1], far[0] - c0[0])
               + rng.uniform(-0.14, 0.14))
        axis = np.array([math.cos(ang), math.sin(ang)])
        order = np.argsort(-((p - c0) @ axis))       # front-most gets slot 0
        slot_along = np.empty(n)
        slot_along[order] = (col_len / 2
                             - col_len * np.arange(n) / max(n - 1, 1))
        return c0, axis, np.array([-axis[1], axis[0]]), slot_along

    c0, axis, lat, slot_along = aim()
    front = 0.0
    speeds = _clipped_normal(rng, n, pace, prm.speed_std, _SPEED_LO, _SPEED_HI)
    for t in range(out.shape[0]):
        if t % _PACE_WANDER_EVERY == 0 and t > 0:
            pace = prm.mean_speed + rng.uniform(-0.4, 0.4)
        if t % _REDRAW_EVERY == 0 and t > 0:
            speeds = _clipped_normal(rng, n, pace, prm.speed_std,
                                     _SPEED_LO, _SPEED_HI)
        front += pace
        head = c0 + axis * (front + col_len / 2)
        if not (inset <= head[0] <= w - inset and inset <= head[1] <= h - inset):
            c0, axis, lat, slot_along = aim()       # turn before the wall
            front = 0.0
        rel = p - c0
        my_along = rel @ axis
        my_lat = rel @ lat
        catch = np.clip(0.08 * prm.cohesion_weight
                        * (front + slot_along - my_along), -0.35, 0.35)
        v_along = speeds + catch
        v_lat = np.clip(0.25 * prm.alignment_weight * (slot_lat - my_lat),
                        -0.4, 0.4)
        p += axis * v_along[:, None] + lat * v_lat[:, None]
        p += _separation(p, prm.repulsion_weight)
        p += rng.normal_array(2 * n, 0.0, noise_std).reshape(n, 2)
        out[t] = _reflect(p, arena)


_DRIVERS = {
    ActivityLabel.NOT_ACTIVE: _drive_not_active,
    ActivityLabel.ACTIVE: _drive_active,
    ActivityLabel.HERD_MOVEMENT: _drive_herd,
}


# ---------------------------------------------------------------------------
# top level


def _initial_positions(cfg: SimConfig, rng: Rng) -> np.ndarray:
    """Placement consistent with the first scheduled regime."""
    w, h = cfg.arena
    n = cfg.n_animals
    center = np.array([w * rng.uniform(0.3, 0.7), h * rng.uniform(0.3, 0.7)])
    first = ActivityLabel(cfg.regime_schedule[0][1])
    if first == ActivityLabel.ACTIVE:
        prm = cfg.regimes[first]
        ang = rng.uniform_array(n, 0.0, 2.0 * math.pi)
        rad = prm.cohesion_radius * np.sqrt(rng.uniform_array(n))
        p = center + np.stack([np.cos(ang), np.sin(ang)], axis=1) * rad[:, None]
    else:
        p = center + rng.normal_array(2 * n, 0.0, 1.8).reshape(n, 2)
    return _reflect(p, cfg.arena)


def animal_name(j: int, n: int) -> str:
    return f"sheep{j:0{max(2, len(str(n - 1)))}d}"


def simulate(cfg: SimConfig) -> tuple[list, list]:
    """Run the schedule; returns (trajectories, label intervals), 1 Hz."""
    cfg.validate()
    rng = Rng(cfg.seed)
    n = cfg.n_animals
    pos = np.empty((cfg.duration, n, 2))
    p = _initial_positions(cfg, rng)
    intervals = []
    t0 = 0
    blocks = [(dur, ActivityLabel(regime))
              for dur, regime in cfg.regime_schedule]
    for k, (dur, regime) in enumerate(blocks):
        prm = cfg.regimes[regime]
        if regime == ActivityLabel.ACTIVE:
            # regroup before a resting block so it starts compact
            next_is_rest = (k + 1 < len(blocks)
                            and blocks[k + 1][1] == ActivityLabel.NOT_ACTIVE)
            _drive_active(p, pos[t0:t0 + dur], rng, prm, cfg.arena,
                          cfg.noise_std, regroup=next_is_rest)
        else:
            _DRIVERS[regime](p, pos[t0:t0 + dur], rng, prm, cfg.arena,
                             cfg.noise_std)
        intervals.append(LabelInterval(t0, t0 + dur, regime))
        t0 += dur

    times = np.arange(cfg.duration, dtype=np.int64)
    trajs = [
        Trajectory(animal_id=animal_name(j, n), times=times.copy(),
                   xy=pos[:, j].copy(),
                   imputed=np.zeros(cfg.duration, dtype=bool))
        for j in range(n)
    ]
    return trajs, intervals


def largest_remainder(fractions, total: int) -> list:
    """Integer apportionment of `total` by the given fractions, exact sum."""
    quotas = [f * total for f in fractions]
    floors = [int(q) for q in quotas]
    short = total - sum(floors)
    order = sorted(range(len(quotas)),
                   key=lambda i: (floors[i] - quotas[i], i))
    for i in order[:short]:
        floors[i] += 1
    return floors


# class share targets: NotActive / Active / Herd counts of the two splits
TRAIN_SHARES = (21801 / 58064, 35811 / 58064, 452 / 58064)
TEST_SHARES = (26718 / 63670, 36355 / 63670, 597 / 63670)


def build_schedule(total: int, shares, rng: Rng) -> list:
    """Interleaved block plan [NA, H, A, NA, A, NA, H, A, ...], exact counts.

    Herd bouts always follow a NotActive block, so the flock is compact
    when each column forms.  The herd allocation splits into up to three
    bouts of roughly 50 seconds or more spread across the day (a single
    event per day is too little variety for a learner to generalize
    from); the first runs right after the opening rest block.  Block sizes are jittered +-20% around equal
    shares; largest-remainder keeps totals exact.
    """
    na_total, act_total, herd_total = largest_remainder(shares, total)

    n_act = max(1, round(act_total / 2500))
    n_na = n_act + 1
    n_herd = min(3, max(1, herd_total // 50)) if herd_total > 0 else 0

    def split(total_here: int, blocks: int) -> list:
        if total_here <= 0 or blocks < 1:
            return [total_here] if total_here > 0 else []
        wts = [rng.uniform(0.8, 1.2) for _ in range(blocks)]
        s = sum(wts)
        sizes = largest_remainder([x / s for x in wts], total_here)
        return [x for x in sizes if x > 0]

    na_sizes = split(na_total, n_na)
    act_sizes = split(act_total, n_act)
    herd_sizes = split(herd_total, n_herd)
    slots = max(len(na_sizes), 1)
    herd_after: dict = {}
    for j, size in enumerate(herd_sizes):
        idx = min(j * slots // max(len(herd_sizes), 1), slots - 1)
        herd_after[idx] = herd_after.get(idx, 0) + size

    schedule = []
    for i in range(max(len(na_sizes), len(act_sizes))):
        if i < len(na_sizes):
            schedule.append((na_sizes[i], ActivityLabel.NOT_ACTIVE))
        if i in herd_after:
            schedule.append((herd_after[i], ActivityLabel.HERD_MOVEMENT))
        if i < len(act_sizes):
            schedule.append((act_sizes[i], ActivityLabel.ACTIVE))
    return schedule


def make_skewed_dataset(n_train: int = 20_000, n_test: int = 20_000,
                        n_animals: int = 36, seed: int = 0,
                        arena: tuple = (300.0, 300.0),
                        noise_std: float = 0.02,
                        regimes: dict | None = None
                        ) -> tuple[FlockDataset, FlockDataset]:
    """Two independent-seed synthetic days with the skewed label shares.

    Train targets roughly 37.6 / 61.7 / 0.8 percent NotActive / Active /
    Herd; test roughly 42 / 57 / 1.  The herd share lands inside
    [0.5%, 1.5%] for any total large enough to give it one block.
    """
    root = Rng(seed)
    out = []
    for tag, total, shares in (("train", n_train, TRAIN_SHARES),
                               ("test", n_test, TEST_SHARES)):
        branch = root.spawn(0 if tag == "train" else 1)
        schedule = build_schedule(total, shares, branch.spawn(0))
        cfg = SimConfig(duration=total, seed=branch.spawn(1).seed,
                        regime_schedule=schedule, n_animals=n_animals,
                        arena=arena, noise_std=noise_std)
        if regimes is not None:
            cfg.regimes = regimes
        trajs, intervals = simulate(cfg)
        out.append(align_flock(trajs, intervals, split_tag=tag))
    return out[0], out[1]
