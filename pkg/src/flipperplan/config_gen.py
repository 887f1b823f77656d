"""
Configuration generation on the inflated map.

Given a rear reference joint position, enumerate base orientations whose
skeleton rests on the inflated surface (pitch bounds, then roll), and
resolve the four flipper angles by rotating each flipper down until it
touches.

Every contact search goes through :func:`rotate_to_contact`: sweep a rigid
point set about an axis, bracket the first sign change of its minimum
clearance on a scan grid fine enough that no point moves more than half a
map cell per step, then refine the crossing with Brent's method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import NoContactError, OutOfMapError, PunctureError
from .inflation import InflatedMap
from .robot import (LEFT, RIGHT, SIDES, Morphology, RobotParams, forward_kinematics,
                    sample_segment, skeleton_samples)

EPS_CONTACT = 1e-3
ANGLE_TOL = 1e-3
N_INTERIOR = 3
# Sample points closer to the rotation axis than this fraction of the link
# length are left out of the base pitch/roll searches: their clearance is
# pinned by the pivot and would stall the sweep at the start angle.
PIVOT_EXCLUSION = 0.25
_SCAN_CHUNK = 16


@dataclass(frozen=True, eq=False)
class ContactResult:
    touching: bool
    min_clearance: float
    witness: np.ndarray

    @property
    def puncture(self) -> bool:
        return self.min_clearance < -EPS_CONTACT


def clearance(points, D: InflatedMap, eps: float = EPS_CONTACT) -> ContactResult:
    """Minimum of ``z - D(x, y)`` over the points, with the witness point."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    gaps = pts[:, 2] - D.sample(pts[:, 0], pts[:, 1])
    k = int(np.argmin(gaps))
    g = float(gaps[k])
    return ContactResult(abs(g) <= eps, g, pts[k].copy())


class _RotatingSet:
    """Rigid points rotated about an axis through ``pivot`` (right-hand rule)."""

    def __init__(self, pivot, axis, points, D: InflatedMap):
        self.pivot = np.asarray(pivot, dtype=float)
        k = np.asarray(axis, dtype=float)
        self.axis = k / np.linalg.norm(k)
        self.rel = np.atleast_2d(np.asarray(points, dtype=float)) - self.pivot
        self.cross = np.cross(self.axis, self.rel)
        self.along = np.outer(self.rel @ self.axis, self.axis)
        self.radius = float(np.max(np.linalg.norm(self.rel - self.along, axis=1)))
        self.D = D

    def points(self, angles) -> np.ndarray:
        a = np.atleast_1d(np.asarray(angles, dtype=float))[:, None, None]
        c, s = np.cos(a), np.sin(a)
        return self.pivot + c * (self.rel - self.along) + s * self.cross + self.along

    def clearance(self, angles) -> np.ndarray:
        p = self.points(angles)
        return np.min(p[..., 2] - self.D.sample(p[..., 0], p[..., 1]), axis=1)

    def scalar(self, angle: float) -> float:
        return float(self.clearance([angle])[0])


def _scan_step(rs: _RotatingSet, D: InflatedMap) -> float:
    return 0.5 * D.resolution / max(rs.radius, D.resolution)


def _first_crossing(rs: _RotatingSet, start, stop, step, descending):
    """First scan interval ``(a_prev, a_next)`` on which the clearance drops to
    <= 0 (``descending``) or climbs to >= 0. None if the sweep never crosses."""
    span = stop - start
    n = max(1, int(math.ceil(abs(span) / step)))
    grid = start + span * np.arange(n + 1) / n
    grid[-1] = stop
    prev = start
    for k0 in range(1, n + 1, _SCAN_CHUNK):
        chunk = grid[k0:k0 + _SCAN_CHUNK]
        f = rs.clearance(chunk)
        hit = np.flatnonzero(f <= 0.0) if descending else np.flatnonzero(f >= 0.0)
        if hit.size:
            i = int(hit[0])
            return (chunk[i - 1] if i else prev), float(chunk[i]), float(f[i])
        prev = float(chunk[-1])
    return None


def _refine(rs: _RotatingSet, lo, hi, f_hi, tol):
    if f_hi == 0.0:
        return hi
    return float(brentq(rs.scalar, lo, hi, xtol=tol * 1e-3, maxiter=200))


def _sweep(rs: _RotatingSet, start, stop, tol, eps, allow_lift):
    f0 = rs.scalar(start)
    if abs(f0) <= eps:
        return start
    if f0 < -eps and not allow_lift:
        raise PunctureError(f"clearance {f0:.5f} at start angle {start:.4f}")
    step = _scan_step(rs, rs.D)
    br = _first_crossing(rs, start, stop, step, descending=f0 > 0)
    if br is None:
        raise NoContactError(f"no contact between {start:.4f} and {stop:.4f} rad")
    lo, hi, f_hi = br
    return _refine(rs, lo, hi, f_hi, tol)


def rotate_to_contact(pivot_axis, moving_points, D: InflatedMap, search,
                      tol: float = ANGLE_TOL, eps: float = EPS_CONTACT) -> float:
    """Rotate ``moving_points`` about the axis ``(point, direction)`` from
    ``search[0]`` toward ``search[1]`` and return the first angle at which
    the set touches ``D`` without puncturing it.

    Returns ``search[0]`` when the set already touches there.
    """
    pivot, direction = pivot_axis
    rs = _RotatingSet(pivot, direction, moving_points, D)
    return _sweep(rs, float(search[0]), float(search[1]), tol, eps, allow_lift=False)


def _settle(rs: _RotatingSet, lower_sign: float, lower_limit: float, lift_limit: float,
            tol: float, eps: float) -> float:
    """Smallest-magnitude rotation from 0 that brings the set into contact:
    lower it if it floats, lift it if it punctures."""
    f0 = rs.scalar(0.0)
    if abs(f0) <= eps:
        return 0.0
    if f0 > eps:
        return _sweep(rs, 0.0, lower_sign * lower_limit, tol, eps, allow_lift=False)
    return _sweep(rs, 0.0, -lower_sign * lift_limit, tol, eps, allow_lift=True)


def _line_points(length: float, step: float, start: float = 0.0) -> np.ndarray:
    """Distances along a link, from ``start`` to ``length`` inclusive."""
    n = max(1, int(math.ceil((length - start) / step - 1e-9)))
    d = start + (length - start) * np.arange(n + 1) / n
    d[-1] = length
    return d


@dataclass(frozen=True, eq=False)
class PoseCandidate:
    reference_side: str
    p_ref: tuple[float, float, float]
    yaw: float
    pitch: float
    roll: float
    bound: str = "ub"  # "lb", "ub" or "interior"
    grounded: bool = False
    contacts: np.ndarray = field(default_factory=lambda: np.empty((0, 3)))

    def morphology(self, params: RobotParams, flippers=(0.0, 0.0, 0.0, 0.0)) -> Morphology:
        return Morphology.from_reference(self.p_ref, self.reference_side, self.yaw,
                                         self.pitch, self.roll, params, flippers)


def _pitch_candidates(p_ref, grounded, D, params, n_interior, tol, eps, step):
    lb_len = params.base_length
    base = p_ref + np.outer(_line_points(lb_len, step, PIVOT_EXCLUSION * lb_len), [1.0, 0.0, 0.0])
    y_axis = (0.0, 1.0, 0.0)
    # positive pitch (about +y) lowers the nose
    theta_ub = _settle(_RotatingSet(p_ref, y_axis, base, D), 1.0,
                       params.pitch_max, -params.pitch_min, tol, eps)
    thetas = [(theta_ub, "ub")]
    if grounded:
        full = lb_len + params.flipper_length
        poly = p_ref + np.outer(_line_points(full, step, PIVOT_EXCLUSION * lb_len), [1.0, 0.0, 0.0])
        try:
            theta_lb = _settle(_RotatingSet(p_ref, y_axis, poly, D), 1.0,
                               params.pitch_max, -params.pitch_min, tol, eps)
        except (NoContactError, PunctureError):
            theta_lb = None
        if theta_lb is not None and abs(theta_lb - theta_ub) > 1e-12:
            lo, hi = sorted((theta_lb, theta_ub))
            thetas.append((theta_lb, "lb"))
            for k in range(1, n_interior + 1):
                thetas.append((lo + (hi - lo) * k / (n_interior + 1), "interior"))
    return [(t, b) for t, b in thetas if params.pitch_min <= t <= params.pitch_max]


def _roll_set(p_ref, side, pitch, params, step):
    """Far part of the base rectangle in world coordinates for a given pitch:
    the opposite base line plus three interior lines parallel to it."""
    sign = -1.0 if side == LEFT else 1.0
    w = params.robot_width
    lines = []
    for frac, spacing in ((1.0, step), (0.75, 2 * step), (0.5, 2 * step),
                          (PIVOT_EXCLUSION, 2 * step)):
        d = _line_points(params.base_length, spacing)
        lines.append(np.column_stack([d, np.full_like(d, sign * frac * w), np.zeros_like(d)]))
    body = np.concatenate(lines)
    c, s = math.cos(pitch), math.sin(pitch)
    rot = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    return p_ref + body @ rot.T, rot @ np.array([1.0, 0.0, 0.0])


def _base_lines(m: Morphology, params: RobotParams, step: float):
    sk = forward_kinematics(m, params)
    return {s: sample_segment(sk[s[0] + "2"], sk[s[0] + "1"], step) for s in SIDES}


def get_pose_candidates(p_ref, side: str, D: InflatedMap, params: RobotParams,
                        n_interior: int = N_INTERIOR, tol: float = ANGLE_TOL,
                        eps: float = EPS_CONTACT, sample_step: float | None = None
                        ) -> list[PoseCandidate]:
    """Base orientations (yaw = 0) resting on ``D`` with the ``side`` rear joint
    fixed at ``p_ref``. Empty when the reference punctures the surface or no
    pitch/roll pair makes contact."""
    if side not in SIDES:
        raise ValueError(f"side must be {LEFT!r} or {RIGHT!r}")
    step = sample_step or D.resolution / 2.0
    p_ref = np.asarray(p_ref, dtype=float)
    gap = float(p_ref[2] - D.sample(p_ref[0], p_ref[1]))
    if gap < -eps:
        return []
    grounded = gap <= eps

    try:
        thetas = _pitch_candidates(p_ref, grounded, D, params, n_interior, tol, eps, step)
    except (NoContactError, PunctureError, OutOfMapError):
        return []

    lower = 1.0 if side == LEFT else -1.0  # roll sign that drops the far side
    out = []
    for theta, bound in thetas:
        pts, axis = _roll_set(p_ref, side, theta, params, step)
        rs = _RotatingSet(p_ref, axis, pts, D)
        try:
            phi = _settle(rs, lower, params.roll_limit, params.roll_limit, tol, eps)
        except (NoContactError, PunctureError, OutOfMapError):
            continue
        cand = PoseCandidate(side, tuple(p_ref), 0.0, theta, phi, bound, grounded)
        m = cand.morphology(params)
        try:
            lines = _base_lines(m, params, step)
            near = clearance(lines[side], D, eps)
            far = clearance(np.concatenate([lines[_other(side)], rs.points(phi)[0]]), D, eps)
        except OutOfMapError:
            continue
        if near.puncture or far.puncture or not (near.touching and far.touching):
            continue
        all_pts = np.concatenate([lines[LEFT], lines[RIGHT], rs.points(phi)[0]])
        gaps = all_pts[:, 2] - D.sample(all_pts[:, 0], all_pts[:, 1])
        object.__setattr__(cand, "contacts", all_pts[np.abs(gaps) <= eps])
        out.append(cand)
    return out


def _other(side: str) -> str:
    return RIGHT if side == LEFT else LEFT


@dataclass(frozen=True)
class FlipperSolution:
    angles: tuple[float, float, float, float]  # alpha_l, alpha_r, beta_l, beta_r
    hanging: tuple[bool, bool, bool, bool]


def resolve_flippers(pose, D: InflatedMap, params: RobotParams, tol: float = ANGLE_TOL,
                     eps: float = EPS_CONTACT, sample_step: float | None = None
                     ) -> FlipperSolution:
    """Rotate each flipper from its upper limit down to first contact.

    A flipper that never touches within its limits is parked at the lower
    limit and flagged as hanging. Raises :class:`PunctureError` when a flipper
    already cuts the surface at its upper limit.
    """
    m = pose.morphology(params) if isinstance(pose, PoseCandidate) else pose
    m = Morphology(m.p_left, m.p_right, m.yaw, m.pitch, m.roll)
    step = sample_step or D.resolution / 2.0
    sk = forward_kinematics(m, params)
    R = m.rotation
    lateral = R @ np.array([0.0, 1.0, 0.0])
    lf = params.flipper_length
    # flippers start far above any tangent, so only the pivot itself is dropped
    d = _line_points(lf, step, min(step, lf / 2.0))
    top, bottom = params.flipper_max, params.flipper_min

    angles, hanging = [], []
    for front in (True, False):
        for s in SIDES:
            if front:
                pivot = sk[s[0] + "1"]
                u0 = R @ np.array([math.cos(top), 0.0, math.sin(top)])
                stop = top - bottom  # angle a maps to alpha = top - a
            else:
                pivot = sk[s[0] + "2"]
                u0 = R @ np.array([-math.cos(top), 0.0, math.sin(top)])
                stop = bottom - top  # beta = top + a
            pts = pivot + np.outer(d, u0)
            try:
                a = rotate_to_contact((pivot, lateral), pts, D, (0.0, stop), tol, eps)
                hang = False
            except NoContactError:
                a, hang = stop, True
            ang = top - a if front else top + a
            angles.append(min(max(ang, bottom), top))
            hanging.append(hang)
    return FlipperSolution(tuple(angles), tuple(hanging))


def get_flipper_angles(pose, D: InflatedMap, params: RobotParams, tol: float = ANGLE_TOL,
                       eps: float = EPS_CONTACT) -> tuple[float, float, float, float]:
    return resolve_flippers(pose, D, params, tol, eps).angles


def check_morphology(m: Morphology, D: InflatedMap, params: RobotParams,
                     eps: float = EPS_CONTACT, sample_step: float | None = None):
    """Return ``(ok, reason)``: no skeleton sample punctures ``D`` and each
    side's track has at least one touching sample."""
    step = sample_step or D.resolution / 2.0
    sk = forward_kinematics(m, params)
    for s in SIDES:
        try:
            res = clearance(skeleton_samples(sk, step, s), D, eps)
        except OutOfMapError as exc:
            return False, str(exc)
        if res.puncture:
            return False, f"{s} track punctures by {-res.min_clearance:.4f} m"
        if not res.touching:
            return False, f"{s} track floats {res.min_clearance:.4f} m"
    return True, ""
