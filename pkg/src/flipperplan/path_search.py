"""
Greedy forward search over morphologies.

Each step advances the left and the right rear joint by ``dx``, samples
reference heights above the original terrain, collects base orientations for
both references, scores them by how closely the base middle line hugs the
inflated surface, and keeps the cheapest one whose resolved flippers pass the
puncture/support check.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .config_gen import (ANGLE_TOL, EPS_CONTACT, N_INTERIOR, PoseCandidate, check_morphology,
                         get_pose_candidates, resolve_flippers)
from .errors import ContactError, DeadEndError, OutOfMapError, PlannerError
from .inflation import InflatedMap
from .robot import LEFT, RIGHT, SIDES, Morphology, RobotParams, forward_kinematics, sample_segment
from .terrain import ElevationMap, atomic_write_text

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SearchSettings:
    dx: float = 0.02
    dh: float = 0.005
    h_samples: int = 24
    target_x: float = 0.94
    cost_sample_step: float = 0.005
    n_interior: int = N_INTERIOR
    angle_tol: float = ANGLE_TOL
    eps_contact: float = EPS_CONTACT
    beam_width: int = 1
    max_steps: int = 10_000

    def __post_init__(self):
        if not (self.dx > 0 and self.dh > 0 and self.cost_sample_step > 0):
            raise ValueError("dx, dh and cost_sample_step must be positive")
        if self.h_samples < 1 or self.n_interior < 0 or self.beam_width < 1:
            raise ValueError("h_samples and beam_width must be >= 1, n_interior >= 0")


@dataclass(frozen=True)
class PlanStep:
    morphology: Morphology
    cost: float
    side: str
    dh: float = 0.0
    hanging: tuple[bool, bool, bool, bool] = (False, False, False, False)


@dataclass
class PlanPath:
    start: Morphology
    steps: list[PlanStep] = field(default_factory=list)
    settings: SearchSettings = field(default_factory=SearchSettings)
    params: RobotParams = field(default_factory=RobotParams)
    map_hash: str = ""

    def __len__(self):
        return len(self.steps)

    @property
    def morphologies(self) -> list[Morphology]:
        return [s.morphology for s in self.steps]

    @property
    def total_cost(self) -> float:
        return float(sum(s.cost for s in self.steps))

    def mirrored(self) -> "PlanPath":
        steps = [PlanStep(s.morphology.mirrored(), s.cost, RIGHT if s.side == LEFT else LEFT,
                          s.dh, (s.hanging[1], s.hanging[0], s.hanging[3], s.hanging[2]))
                 for s in self.steps]
        return PlanPath(self.start.mirrored(), steps, self.settings, self.params, self.map_hash)


def middle_line(m: Morphology, params: RobotParams, step: float) -> np.ndarray:
    sk = forward_kinematics(Morphology(m.p_left, m.p_right, m.yaw, m.pitch, m.roll), params)
    return sample_segment(sk.middle2, sk.middle1, step)


def step_cost(m: Morphology, D: InflatedMap, params: RobotParams, sample_step: float) -> float:
    """Sum of squared gaps between the base middle line and the inflated surface."""
    pts = middle_line(m, params, sample_step)
    gap = pts[:, 2] - D.sample(pts[:, 0], pts[:, 1])
    return float(np.sum(gap * gap))


def start_morphology(D: InflatedMap, params: RobotParams, x: float = 0.0, y: float = 0.0,
                     settings: SearchSettings | None = None) -> Morphology:
    """Level pose with S_middle,2 at (x, y) resting on D, flippers resolved."""
    s = settings or SearchSettings()
    hw = params.half_width
    z = float(D.sample(x, y))
    base = Morphology((x, y + hw, z), (x, y - hw, z))
    sol = resolve_flippers(base, D, params, s.angle_tol, s.eps_contact)
    return Morphology(base.p_left, base.p_right, 0.0, 0.0, 0.0, *sol.angles)


@dataclass(frozen=True, eq=False)
class _Scored:
    cost: float
    dh_index: int
    side: str
    candidate: PoseCandidate

    def key(self):
        c = self.candidate
        return (self.cost, self.dh_index, 0 if self.side == LEFT else 1,
                abs(c.pitch), abs(c.roll))


def enumerate_step(prev: Morphology, ground: ElevationMap, D: InflatedMap,
                   params: RobotParams, s: SearchSettings,
                   stop_at_zero: bool = False) -> tuple[list[_Scored], bool]:
    """Scored candidates for the step after ``prev``, sorted best first.

    With ``stop_at_zero`` the height sweep stops after the first level that
    produced a zero-cost candidate; nothing from a higher level can sort
    ahead of it. The second return value tells whether the sweep was cut.
    """
    refs = {}
    for side in SIDES:
        p = prev.reference(side).copy()
        p[0] += s.dx
        try:
            refs[side] = (p, float(ground.sample(p[0], p[1])))
        except OutOfMapError:
            continue
    scored = []
    for k in range(s.h_samples):
        for side, (p, h) in refs.items():
            p_ref = np.array([p[0], p[1], h + k * s.dh])
            cands = get_pose_candidates(p_ref, side, D, params, s.n_interior,
                                        s.angle_tol, s.eps_contact)
            for c in cands:
                try:
                    cost = step_cost(c.morphology(params), D, params, s.cost_sample_step)
                except OutOfMapError:
                    continue
                scored.append(_Scored(cost, k, side, c))
        if stop_at_zero and k < s.h_samples - 1 and any(sc.cost == 0.0 for sc in scored):
            scored.sort(key=_Scored.key)
            return scored, True
    scored.sort(key=_Scored.key)
    return scored, False


def _resolve(sc: _Scored, D, params, s) -> PlanStep | None:
    try:
        sol = resolve_flippers(sc.candidate, D, params, s.angle_tol, s.eps_contact)
    except (ContactError, OutOfMapError):
        return None
    m = sc.candidate.morphology(params, sol.angles)
    ok, _ = check_morphology(m, D, params, s.eps_contact)
    if not ok:
        return None
    return PlanStep(m, sc.cost, sc.side, sc.dh_index * s.dh, sol.hanging)


def _first_feasible(scored, D, params, s, zero_only):
    for sc in scored:
        if zero_only and sc.cost != 0.0:
            return None
        step = _resolve(sc, D, params, s)
        if step is not None:
            return step
    return None


def plan(start: Morphology, D: InflatedMap, params: RobotParams,
         settings: SearchSettings | None = None, ground: ElevationMap | None = None,
         on_step: Callable[[int, list], None] | None = None) -> PlanPath:
    """Greedy search from ``start`` until S_middle,2 reaches ``target_x``.

    ``ground`` is the original elevation map the reference heights are
    sampled from; it defaults to ``D`` lowered by its source radius only when
    omitted, which is exact on flat ground and nowhere else, so pass it.
    ``on_step`` receives ``(step_index, scored_candidates)`` for debugging.
    """
    s = settings or SearchSettings()
    if ground is None:
        ground = ElevationMap(D.width_cells, D.height_cells, D.resolution, D.origin,
                              D.heights - D.source_radius)
    ok, why = check_morphology(start, D, params, s.eps_contact)
    if not ok:
        raise PlannerError(f"start morphology infeasible: {why}")
    reach = s.target_x + params.base_length + params.flipper_length
    if not D.contains(reach, start.middle[1]):
        raise PlannerError(f"map ends before the robot at target_x={s.target_x} "
                           f"(needs x up to {reach:.3f}, map x_max={D.extent[1]:.3f})")

    if s.beam_width > 1:
        return _beam_plan(start, D, params, s, ground)
    path = PlanPath(start, [], s, params, D.digest())
    current = start
    while current.middle[0] < s.target_x - 1e-12:
        if len(path.steps) >= s.max_steps:
            raise DeadEndError(current.middle[0], "step budget exhausted")
        scored, cut = enumerate_step(current, ground, D, params, s, stop_at_zero=True)
        chosen = _first_feasible(scored, D, params, s, zero_only=cut)
        if chosen is None and cut:
            scored, _ = enumerate_step(current, ground, D, params, s)
            chosen = _first_feasible(scored, D, params, s, zero_only=False)
        if on_step is not None:
            on_step(len(path.steps), scored)
        if chosen is None:
            x_next = current.middle[0] + s.dx
            diag = f"{len(scored)} candidates, none feasible"
            if scored:
                best = scored[0]
                diag += (f"; best cost {best.cost:.3e} side={best.side} "
                         f"pitch={best.candidate.pitch:.3f} roll={best.candidate.roll:.3f}")
            raise DeadEndError(x_next, diag)
        path.steps.append(chosen)
        current = chosen.morphology
        log.debug("step %d x=%.3f cost=%.3e side=%s", len(path.steps), current.middle[0],
                  chosen.cost, chosen.side)
    return path


def _beam_plan(start, D, params, s, ground) -> PlanPath:
    """Keep the ``beam_width`` cheapest partial paths (by summed step cost)
    instead of committing to one pose per step."""
    beams = [(0.0, [])]
    x = start.middle[0]
    while x < s.target_x - 1e-12:
        if len(beams[0][1]) >= s.max_steps:
            raise DeadEndError(x, "step budget exhausted")
        pool = []
        for b_i, (total, steps) in enumerate(beams):
            prev = steps[-1].morphology if steps else start
            scored, _ = enumerate_step(prev, ground, D, params, s)
            kept = 0
            for sc in scored:
                st = _resolve(sc, D, params, s)
                if st is None:
                    continue
                pool.append((total + st.cost, b_i, sc.key(), steps + [st]))
                kept += 1
                if kept == s.beam_width:
                    break
        if not pool:
            raise DeadEndError(x + s.dx, "every beam hit a dead end")
        pool.sort(key=lambda t: (t[0], t[1], t[2]))
        beams = [(t[0], t[3]) for t in pool[:s.beam_width]]
        x = beams[0][1][-1].morphology.middle[0]
    return PlanPath(start, beams[0][1], s, params, D.digest())


# ---------------------------------------------------------------------------
# path files

_FIELDS = ("x_l", "y_l", "z_l", "x_r", "y_r", "z_r", "psi", "theta", "phi",
           "alpha_l", "alpha_r", "beta_l", "beta_r", "cost", "side")


def _kv(d: dict) -> str:
    return " ".join(f"{k}={v!r}" for k, v in d.items())


def dumps_path(path: PlanPath) -> str:
    lines = [
        "# flipperplan-path v1 map=" + (path.map_hash or "-"),
        "# settings " + _kv(asdict(path.settings)),
        "# params " + _kv(asdict(path.params)),
        "# start " + " ".join(repr(v) for v in path.start.as_tuple()),
        "# " + " ".join(_FIELDS),
    ]
    for st in path.steps:
        vals = " ".join(repr(v) for v in st.morphology.as_tuple())
        lines.append(f"{vals} {st.cost!r} {st.side}")
    return "\n".join(lines) + "\n"


def export_path(path: PlanPath, file):
    atomic_write_text(file, dumps_path(path))


def _parse_kv(text: str) -> dict:
    out = {}
    for tok in text.split():
        k, v = tok.split("=", 1)
        out[k] = float(v) if any(c in v for c in ".en") else int(v)
    return out


def import_path(file) -> PlanPath:
    settings, params, start, map_hash = SearchSettings(), RobotParams(), None, ""
    steps = []
    with open(file, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("flipperplan-path"):
                    map_hash = body.split("map=", 1)[1]
                    map_hash = "" if map_hash == "-" else map_hash
                elif body.startswith("settings "):
                    settings = SearchSettings(**_parse_kv(body[len("settings "):]))
                elif body.startswith("params "):
                    params = RobotParams(**_parse_kv(body[len("params "):]))
                elif body.startswith("start "):
                    start = Morphology.from_tuple(body.split()[1:])
                continue
            parts = line.split()
            if len(parts) != len(_FIELDS) or parts[-1] not in SIDES:
                raise ValueError(f"{file}:{lineno}: malformed path record")
            m = Morphology.from_tuple(parts[:13])
            steps.append(PlanStep(m, float(parts[13]), parts[14]))
    if start is None:
        raise ValueError(f"{file}: missing start record")
    return PlanPath(start, steps, settings, params, map_hash)
