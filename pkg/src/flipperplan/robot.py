"""
Robot parameters, morphology and forward kinematics of the line skeleton.

Body frame: origin at S_middle,2 (midpoint of the rear joints), x forward,
y left, z up. Orientation is R = Rz(yaw) @ Ry(pitch) @ Rx(roll); positive
pitch lowers the nose.

Flipper angles are measured from the base line about the lateral axis,
positive lifting the flipper tip:

    front  S1 -> S0 direction (body) = ( cos a, 0, sin a)
    rear   S2 -> S3 direction (body) = (-cos b, 0, sin b)
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .errors import ParamsError

LEFT = "left"
RIGHT = "right"
SIDES = (LEFT, RIGHT)


@dataclass(frozen=True)
class RobotParams:
    wheel_radius: float = 0.035
    track_width: float = 0.03
    robot_width: float = 0.15
    base_length: float = 0.25
    flipper_length: float = 0.10
    flipper_min: float = -2.0 * math.pi / 3.0
    flipper_max: float = 2.0 * math.pi / 3.0
    pitch_min: float = -1.2
    pitch_max: float = 1.2
    roll_limit: float = math.pi / 3.0

    def __post_init__(self):
        for name in ("wheel_radius", "track_width", "robot_width", "base_length",
                     "flipper_length", "roll_limit"):
            if not getattr(self, name) > 0:
                raise ParamsError(f"{name} must be > 0")
        if not self.robot_width > self.track_width:
            raise ParamsError("robot_width must exceed track_width")
        if not -math.pi < self.flipper_min < self.flipper_max < math.pi:
            raise ParamsError("flipper limits must satisfy -pi < min < max < pi")
        if not self.pitch_min < self.pitch_max:
            raise ParamsError("pitch_min must be below pitch_max")

    @property
    def half_width(self) -> float:
        return self.robot_width / 2.0

    def dumps(self) -> str:
        return "".join(f"{k} = {v!r}\n" for k, v in asdict(self).items())

    @classmethod
    def loads(cls, text: str, base: "RobotParams | None" = None) -> "RobotParams":
        """Parse flat ``name = value`` lines (``#`` comments allowed)."""
        known = {f.name for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParamsError(f"line {lineno}: expected 'name = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in known:
                raise ParamsError(f"line {lineno}: unknown parameter {key!r}")
            try:
                values[key] = float(val)
            except ValueError:
                raise ParamsError(f"line {lineno}: {key} is not a number") from None
        return replace(base or cls(), **values)


def rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def body_rotation(yaw: float, pitch: float, roll: float) -> np.ndarray:
    return rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)


@dataclass(frozen=True)
class Morphology:
    """Full robot configuration: both rear reference joints, orientation and
    the four flipper angles (radians)."""

    p_left: tuple[float, float, float]
    p_right: tuple[float, float, float]
    yaw: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0
    alpha_l: float = 0.0
    alpha_r: float = 0.0
    beta_l: float = 0.0
    beta_r: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "p_left", tuple(float(v) for v in self.p_left))
        object.__setattr__(self, "p_right", tuple(float(v) for v in self.p_right))

    @property
    def rotation(self) -> np.ndarray:
        return body_rotation(self.yaw, self.pitch, self.roll)

    @property
    def middle(self) -> np.ndarray:
        return (np.array(self.p_left) + np.array(self.p_right)) / 2.0

    def reference(self, side: str) -> np.ndarray:
        return np.array(self.p_left if side == LEFT else self.p_right)

    def flippers(self) -> tuple[float, float, float, float]:
        return (self.alpha_l, self.alpha_r, self.beta_l, self.beta_r)

    def as_tuple(self) -> tuple[float, ...]:
        return (*self.p_left, *self.p_right, self.yaw, self.pitch, self.roll,
                self.alpha_l, self.alpha_r, self.beta_l, self.beta_r)

    @classmethod
    def from_tuple(cls, vals) -> "Morphology":
        v = [float(x) for x in vals]
        if len(v) != 13:
            raise ValueError(f"morphology needs 13 scalars, got {len(v)}")
        return cls(tuple(v[0:3]), tuple(v[3:6]), *v[6:13])

    @classmethod
    def from_reference(cls, p_ref, side: str, yaw: float, pitch: float, roll: float,
                       params: RobotParams, flippers=(0.0, 0.0, 0.0, 0.0)) -> "Morphology":
        """Place the body so that the ``side`` rear joint sits at ``p_ref``."""
        p_ref = np.asarray(p_ref, dtype=float)
        across = body_rotation(yaw, pitch, roll) @ np.array([0.0, params.robot_width, 0.0])
        if side == LEFT:
            pl, pr = p_ref, p_ref - across
        else:
            pl, pr = p_ref + across, p_ref
        return cls(tuple(pl), tuple(pr), yaw, pitch, roll, *flippers)

    def mirrored(self) -> "Morphology":
        """Reflection across the x-z plane: swap sides, negate y, roll and yaw."""
        def flip(p):
            return (p[0], -p[1], p[2])
        return Morphology(flip(self.p_right), flip(self.p_left), -self.yaw, self.pitch,
                          -self.roll, self.alpha_r, self.alpha_l, self.beta_r, self.beta_l)


# joint name -> index into Skeleton.joints
JOINTS = ("l0", "l1", "l2", "l3", "r0", "r1", "r2", "r3")


@dataclass(frozen=True, eq=False)
class Skeleton:
    joints: np.ndarray  # (8, 3) in JOINTS order

    def __getitem__(self, name: str) -> np.ndarray:
        return self.joints[JOINTS.index(name)]

    @property
    def middle2(self) -> np.ndarray:
        return (self["l2"] + self["r2"]) / 2.0

    @property
    def middle1(self) -> np.ndarray:
        return (self["l1"] + self["r1"]) / 2.0

    def segments(self, side: str | None = None) -> list[tuple[np.ndarray, np.ndarray]]:
        """Track segments (front flipper, base, rear flipper), per side or both."""
        out = []
        for s in (SIDES if side is None else (side,)):
            k = s[0]
            out += [(self[k + "1"], self[k + "0"]), (self[k + "2"], self[k + "1"]),
                    (self[k + "2"], self[k + "3"])]
        return out


def check_flipper_limits(m: Morphology, params: RobotParams):
    for name, ang in zip(("alpha_l", "alpha_r", "beta_l", "beta_r"), m.flippers()):
        if not params.flipper_min - 1e-12 <= ang <= params.flipper_max + 1e-12:
            raise ParamsError(f"{name}={ang:.4f} outside flipper limits "
                              f"[{params.flipper_min:.4f}, {params.flipper_max:.4f}]")


def forward_kinematics(m: Morphology, params: RobotParams) -> Skeleton:
    gap = math.dist(m.p_left, m.p_right)
    if abs(gap - params.robot_width) > 1e-9:
        raise ParamsError(f"reference joints are {gap:.12f} apart, robot width is "
                          f"{params.robot_width}")
    check_flipper_limits(m, params)
    R = m.rotation
    origin = m.middle
    hw, lb, lf = params.half_width, params.base_length, params.flipper_length
    body = []
    for y, a, b in ((hw, m.alpha_l, m.beta_l), (-hw, m.alpha_r, m.beta_r)):
        s2 = np.array([0.0, y, 0.0])
        s1 = np.array([lb, y, 0.0])
        s0 = s1 + lf * np.array([math.cos(a), 0.0, math.sin(a)])
        s3 = s2 + lf * np.array([-math.cos(b), 0.0, math.sin(b)])
        body += [s0, s1, s2, s3]
    joints = np.asarray(body) @ R.T + origin
    return Skeleton(joints)


def sample_segment(a, b, step: float) -> np.ndarray:
    """Points from ``a`` to ``b`` inclusive, evenly spaced, gaps at most ``step``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    length = float(np.linalg.norm(b - a))
    if length == 0.0:
        return a[None, :].copy() if np.array_equal(a, b) else np.stack([a, b])
    n = max(1, int(math.ceil(length / step - 1e-9)))
    t = np.arange(n + 1) / n
    pts = a + t[:, None] * (b - a)
    pts[-1] = b
    return pts


def skeleton_samples(sk: Skeleton, step: float, side: str | None = None) -> np.ndarray:
    return np.concatenate([sample_segment(a, b, step) for a, b in sk.segments(side)])


def pitch_compensation(pitch: float, params: RobotParams) -> float:
    """Rearward shift of S_2 when the body pitches in place: the track rolls on
    its wheel rim, not about the joint, so S_2 moves by ``pitch * r`` along x."""
    if abs(pitch) >= math.pi / 2:
        raise ValueError("pitch must be within (-pi/2, pi/2)")
    return pitch * params.wheel_radius
