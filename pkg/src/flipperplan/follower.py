"""
Kinematic replay of a planned path.

The robot drives S_middle,2 toward one target at a time at constant speed,
switching to the next target only after it is within ``reach_radius`` of the
current one. Orientation is commanded per target, so the target series is a
staircase. A proportional differential-speed term pulls yaw back to zero.

Disturbances are kinematic stand-ins for slip: a constant yaw drift per tick
or Gaussian noise on the horizontal position, drawn from a seeded generator.
With ``pitch_effect`` the true S_2 sits ``pitch * r`` ahead of odometry (the
track rolls on the wheel rim while the body pitches); ``pitch_compensation``
aims odometry at the shifted target to cancel it.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .path_search import PlanPath
from .robot import Morphology, RobotParams, body_rotation, pitch_compensation
from .terrain import atomic_write_text

REACH_RADIUS = 0.005
SPEED = 0.05
TICK_RATE = 100.0
YAW_GAIN = 0.3
TICKS_MAX = 100_000

DISTURBANCE_KINDS = ("none", "yaw", "gauss")

# per-tick record columns: actual then target S_middle,2 xyz and psi/theta/phi
_POS = ("x", "y", "z")
_ANG = ("psi", "theta", "phi")


@dataclass(frozen=True)
class Disturbance:
    """``none``; ``yaw`` adds ``magnitude`` rad per tick; ``gauss`` adds
    zero-mean noise with std ``magnitude`` m to x and y every tick."""

    kind: str = "none"
    magnitude: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in DISTURBANCE_KINDS:
            raise ValueError(f"disturbance kind must be one of {DISTURBANCE_KINDS}")
        if not math.isfinite(self.magnitude) or (self.kind == "gauss" and self.magnitude < 0):
            raise ValueError(f"bad disturbance magnitude {self.magnitude}")
        if self.kind == "gauss" and self.seed is None:
            raise ValueError("gaussian disturbance needs a seed")

    @classmethod
    def parse(cls, text: str, seed: int | None = None) -> "Disturbance":
        """``none``, ``yaw:<rad per tick>`` or ``gauss:<std m>``."""
        kind, _, mag = text.partition(":")
        if kind == "none":
            if mag:
                raise ValueError("'none' takes no magnitude")
            return cls("none", 0.0, seed)
        if not mag:
            raise ValueError(f"disturbance {kind!r} needs a magnitude, e.g. {kind}:0.01")
        return cls(kind, float(mag), seed)


@dataclass(frozen=True)
class FollowerSettings:
    reach_radius: float = REACH_RADIUS
    speed: float = SPEED
    tick_rate: float = TICK_RATE
    yaw_gain: float = YAW_GAIN
    pitch_effect: bool = False
    pitch_compensation: bool = False

    def __post_init__(self):
        if not (self.reach_radius > 0 and self.speed > 0 and self.tick_rate > 0):
            raise ValueError("reach_radius, speed and tick_rate must be positive")
        if not 0.0 <= self.yaw_gain <= 1.0:
            raise ValueError("yaw_gain must lie in [0, 1]")

    @property
    def step(self) -> float:
        return self.speed / self.tick_rate


@dataclass
class FollowerState:
    pose: Morphology
    target_index: int = 0
    ticks: int = 0
    tick_rate: float = TICK_RATE


@dataclass(eq=False)
class TrackingReport:
    """Per-tick ``target_index``, ``actual`` and ``target`` arrays; the pose
    arrays are (N, 6) holding x, y, z of S_middle,2 then psi, theta, phi."""

    target_index: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    actual: np.ndarray = field(default_factory=lambda: np.zeros((0, 6)))
    target: np.ndarray = field(default_factory=lambda: np.zeros((0, 6)))
    completed: bool = False

    def __len__(self):
        return len(self.target_index)

    def __eq__(self, other):
        if not isinstance(other, TrackingReport):
            return NotImplemented
        return (np.array_equal(self.target_index, other.target_index)
                and np.array_equal(self.actual, other.actual)
                and np.array_equal(self.target, other.target))

    @property
    def errors(self) -> np.ndarray:
        return self.actual - self.target

    @property
    def position_error(self) -> np.ndarray:
        return self.errors[:, :3]

    @property
    def orientation_error(self) -> np.ndarray:
        return self.errors[:, 3:]

    def summary(self) -> dict:
        e = np.abs(self.errors)
        names = _POS + _ANG
        if len(e) == 0:
            return {f"{k}_{n}": 0.0 for n in names for k in ("max", "mean")}
        out = {}
        for i, n in enumerate(names):
            out[f"max_{n}"] = float(e[:, i].max())
            out[f"mean_{n}"] = float(e[:, i].mean())
        return out

    def arrivals(self) -> np.ndarray:
        """Row indices of the last tick spent on each target."""
        idx = self.target_index
        if len(idx) == 0:
            return np.zeros(0, dtype=int)
        last = np.flatnonzero(np.diff(idx) != 0)
        return np.append(last, len(idx) - 1) if self.completed else last


def _pose_vector(m: Morphology) -> np.ndarray:
    return np.concatenate([m.middle, (m.yaw, m.pitch, m.roll)])


def _place(mid, yaw, target: Morphology, params: RobotParams) -> Morphology:
    R = body_rotation(yaw, target.pitch, target.roll)
    half = R @ np.array([0.0, params.half_width, 0.0])
    return Morphology(tuple(mid + half), tuple(mid - half), yaw, target.pitch, target.roll,
                      *target.flippers())


def follow(path: PlanPath, params: RobotParams | None = None,
           disturbance: Disturbance | None = None, ticks_max: int = TICKS_MAX,
           settings: FollowerSettings | None = None) -> TrackingReport:
    """Replay ``path`` tick by tick; a partial report with ``completed=False``
    comes back when ``ticks_max`` runs out first."""
    if len(path.steps) == 0:
        raise ValueError("cannot follow an empty path")
    params = params or path.params
    dist_spec = disturbance or Disturbance()
    fs = settings or FollowerSettings()
    rng = np.random.default_rng(dist_spec.seed)
    targets = path.morphologies
    last = len(targets) - 1

    state = FollowerState(path.start, 0, 0, fs.tick_rate)
    odo = path.start.middle.astype(float)  # where the track motion has taken S_2
    yaw = path.start.yaw
    idx_rows, act_rows, tgt_rows = [], [], []
    completed = False

    while state.ticks < ticks_max:
        tgt = targets[state.target_index]
        if dist_spec.kind == "yaw":
            yaw += dist_spec.magnitude
        elif dist_spec.kind == "gauss":
            odo[:2] += rng.normal(0.0, dist_spec.magnitude, size=2)
        yaw -= fs.yaw_gain * yaw

        aim = tgt.middle.astype(float)
        if fs.pitch_effect and fs.pitch_compensation:
            aim[0] -= pitch_compensation(tgt.pitch, params)
        delta = aim - odo
        dist = float(np.linalg.norm(delta))
        move = min(fs.step, dist)
        if dist > 0.0:
            c, s = math.cos(yaw), math.sin(yaw)
            u = delta / dist
            u = np.array([c * u[0] - s * u[1], s * u[0] + c * u[1], u[2]])
            odo = odo + move * u
        true_mid = odo.copy()
        if fs.pitch_effect:
            true_mid[0] += pitch_compensation(tgt.pitch, params)

        state.pose = _place(true_mid, yaw, tgt, params)
        state.ticks += 1
        idx_rows.append(state.target_index)
        act_rows.append(_pose_vector(state.pose))
        tgt_rows.append(_pose_vector(tgt))

        # reach is judged on odometry, the only position the robot controls
        remaining = float(np.linalg.norm(aim - odo))
        if state.target_index == last:
            if move >= dist or remaining < 1e-12:
                completed = True
                break
        elif remaining < fs.reach_radius:
            state.target_index += 1

    return TrackingReport(np.array(idx_rows, dtype=int),
                          np.array(act_rows).reshape(-1, 6),
                          np.array(tgt_rows).reshape(-1, 6), completed)


# ---------------------------------------------------------------------------
# CSV reports

POSITION_FILE = "position_bias.csv"
ORIENTATION_FILE = "orientation_error.csv"


def _table(rep: TrackingReport, cols: slice, names) -> str:
    header = (["tick", "target_index"] + [f"actual_{n}" for n in names]
              + [f"target_{n}" for n in names] + [f"error_{n}" for n in names])
    lines = [",".join(header)]
    err = rep.errors
    for t in range(len(rep)):
        vals = [str(t), str(int(rep.target_index[t]))]
        vals += [repr(float(v)) for v in rep.actual[t, cols]]
        vals += [repr(float(v)) for v in rep.target[t, cols]]
        vals += [repr(float(v)) for v in err[t, cols]]
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def write_report(rep: TrackingReport, directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    atomic_write_text(d / POSITION_FILE, _table(rep, slice(0, 3), _POS))
    atomic_write_text(d / ORIENTATION_FILE, _table(rep, slice(3, 6), _ANG))


def _read_table(path: os.PathLike, names):
    with open(path, newline="", encoding="ascii") as fh:
        rows = list(csv.DictReader(fh))
    idx = np.array([int(r["target_index"]) for r in rows], dtype=int)
    act = np.array([[float(r[f"actual_{n}"]) for n in names] for r in rows]).reshape(-1, 3)
    tgt = np.array([[float(r[f"target_{n}"]) for n in names] for r in rows]).reshape(-1, 3)
    return idx, act, tgt


def read_report(directory) -> TrackingReport:
    """Load the two CSV files written by :func:`write_report`. The
    ``completed`` flag is not stored and comes back False."""
    d = Path(directory)
    i1, pa, pt = _read_table(d / POSITION_FILE, _POS)
    i2, oa, ot = _read_table(d / ORIENTATION_FILE, _ANG)
    if not np.array_equal(i1, i2):
        raise ValueError("position and orientation reports disagree on ticks")
    return TrackingReport(i1, np.hstack([pa, oa]), np.hstack([pt, ot]))
