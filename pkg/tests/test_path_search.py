from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flipperplan.config_gen import EPS_CONTACT
from flipperplan.errors import DeadEndError, PlannerError
from flipperplan.inflation import inflate
from flipperplan.path_search import (PlanPath, PlanStep, SearchSettings, _resolve, dumps_path,
                                     enumerate_step, export_path, import_path, plan,
                                     start_morphology, step_cost)
from flipperplan.robot import Morphology, RobotParams, forward_kinematics
from flipperplan.terrain import ObstacleSpec, flat_map, generate_obstacle

from helpers import make_map
from oracles import bilinear

P = RobotParams()
GOLDEN = Path(__file__).parent / "data" / "step15_golden.path"


def _scene(kind, rot):
    g = generate_obstacle(ObstacleSpec(kind, rot))
    D = inflate(g, P.wheel_radius)
    return g, D


def _plan(g, D, **kw):
    return plan(start_morphology(D, P), D, P, SearchSettings(**kw), ground=g)


@pytest.fixture(scope="module")
def step0():
    g, D = _scene("step", 0.0)
    return g, D, _plan(g, D)


@pytest.fixture(scope="module")
def flat_path(flat_ground, flat_D):
    return _plan(flat_ground, flat_D, target_x=0.5)


def test_flat_plan_is_level_and_free(flat_path):
    assert len(flat_path) == 25
    assert flat_path.total_cost == 0.0
    for k, st_ in enumerate(flat_path.steps):
        m = st_.morphology
        assert m.middle[0] == pytest.approx(0.02 * (k + 1), abs=1e-12)
        assert max(abs(v) for v in m.as_tuple()[6:]) < 1e-6
        assert abs(m.p_left[2] - 0.035) < 1e-6 and abs(m.p_right[2] - 0.035) < 1e-6


def test_cost_examples(flat_D):
    assert step_cost(Morphology((0, 0.075, 0.035), (0, -0.075, 0.035)), flat_D, P, 0.005) == 0.0
    c = step_cost(Morphology((0, 0.075, 0.045), (0, -0.075, 0.045)), flat_D, P, 0.005)
    assert c == pytest.approx(51 * 0.01 ** 2, rel=1e-9)


def test_cost_matches_independent_resum():
    g, D = _scene("step", 0.0)
    m = Morphology.from_reference((0.40, 0.075, 0.05), "left", 0.0, -0.15, 0.0, P)
    sk = forward_kinematics(m, P)
    total = 0.0
    for t in np.linspace(0.0, 1.0, 51):
        q = sk.middle2 + t * (sk.middle1 - sk.middle2)
        total += (q[2] - bilinear(D.heights, D.resolution, D.origin, q[0], q[1])) ** 2
    assert step_cost(m, D, P, 0.005) == pytest.approx(total, rel=1e-12)


def test_monotone_progress(step0):
    _, _, path = step0
    xs = [path.start.middle[0]] + [s.morphology.middle[0] for s in path.steps]
    np.testing.assert_allclose(np.diff(xs), 0.02, atol=1e-12)
    assert path.steps[-1].morphology.middle[0] >= 0.94 - 1e-12
    for s in path.steps:
        assert s.morphology.yaw == 0.0


def test_step_phases(step0):
    _, _, path = step0
    ms = path.morphologies
    first_lift = next(i for i, m in enumerate(ms) if m.alpha_l > 0.05)
    first_pitch = next(i for i, m in enumerate(ms) if m.pitch < -0.05)
    # flippers reach for the edge before the base tips up
    assert first_lift < first_pitch
    assert ms[first_lift].reference("left")[0] + P.base_length < 0.54
    # level on top at the end
    top = ms[-1]
    assert abs(top.pitch) < 1e-6 and abs(top.roll) < 1e-6
    assert top.p_left[2] == pytest.approx(0.06 + P.wheel_radius, abs=1e-6)
    # symmetric scene: both sides identical throughout
    for m in ms:
        assert m.alpha_l == m.alpha_r and m.beta_l == m.beta_r and m.roll == 0.0


def test_feasibility_closure(step0):
    _, D, path = step0
    for s in path.steps:
        sk = forward_kinematics(s.morphology, P)
        for side in "lr":
            gaps = []
            for a, b in ((side + "0", side + "1"), (side + "1", side + "2"),
                         (side + "2", side + "3")):
                for t in np.linspace(0.0, 1.0, 101):
                    q = sk[a] + t * (sk[b] - sk[a])
                    gaps.append(q[2] - bilinear(D.heights, D.resolution, D.origin, q[0], q[1]))
            assert min(gaps) >= -EPS_CONTACT
            assert min(abs(x) for x in gaps) <= EPS_CONTACT


def test_greedy_choice_is_argmin_of_full_enumeration(step0):
    g, D, path = step0
    s = path.settings
    prev = path.start
    for k, chosen in enumerate(path.steps[:30]):
        if k % 3 == 0:
            scored, cut = enumerate_step(prev, g, D, P, s)
            assert not cut
            first = next(st_ for st_ in (_resolve(sc, D, P, s) for sc in scored) if st_)
            assert first.morphology == chosen.morphology
            assert first.cost == chosen.cost
        prev = chosen.morphology


def test_deterministic_replan(step0):
    g, D, path = step0
    again = _plan(g, D)
    assert dumps_path(again) == dumps_path(path)


def test_golden_step15():
    g, D = _scene("step", 15.0)
    path = _plan(g, D)
    gold = import_path(GOLDEN)
    assert gold.map_hash == D.digest()
    assert len(path) == len(gold)
    for a, b in zip(path.steps, gold.steps):
        np.testing.assert_allclose(a.morphology.as_tuple(), b.morphology.as_tuple(), atol=1e-9)
        assert a.side == b.side
    ms = gold.morphologies
    assert any(abs(m.alpha_l - m.alpha_r) > 0.05 for m in ms)
    assert any(m.roll != 0.0 for m in ms)


def test_iramp15_three_dimensional_behaviour():
    g, D = _scene("iramp", 15.0)
    ms = _plan(g, D).morphologies
    assert any(abs(m.roll) > 1e-3 for m in ms)
    assert any(abs(m.alpha_l - m.alpha_r) > 0.05 for m in ms)


def test_dead_end_reports_x():
    g = flat_map()
    h = np.where(g.xs[None, :] > 0.4, 0.5, 0.0).repeat(g.height_cells, axis=0)
    wall = make_map(h, g.resolution, g.origin)
    D = inflate(wall, P.wheel_radius)
    with pytest.raises(DeadEndError) as exc:
        plan(start_morphology(D, P), D, P, ground=wall)
    assert 0.0 < exc.value.x < 0.4
    assert f"x={exc.value.x:.4f}" in str(exc.value)


def test_preconditions(flat_ground, flat_D):
    bad = Morphology((0, 0.075, 0.02), (0, -0.075, 0.02))
    with pytest.raises(PlannerError, match="start"):
        plan(bad, flat_D, P, ground=flat_ground)
    with pytest.raises(PlannerError, match="map ends"):
        plan(start_morphology(flat_D, P), flat_D, P, SearchSettings(target_x=1.2),
             ground=flat_ground)
    with pytest.raises(ValueError):
        SearchSettings(dx=0.0)


def test_ground_defaults_to_deflated(flat_ground, flat_D):
    a = plan(start_morphology(flat_D, P), flat_D, P, SearchSettings(target_x=0.1))
    b = plan(start_morphology(flat_D, P), flat_D, P, SearchSettings(target_x=0.1),
             ground=flat_ground)
    assert dumps_path(a) == dumps_path(b)


def test_beam_search_never_costlier_than_greedy(flat_ground, flat_D):
    g, D = _scene("ramp", 0.0)
    greedy = _plan(g, D, target_x=0.3)
    beam = _plan(g, D, target_x=0.3, beam_width=2)
    assert len(beam) == len(greedy)
    assert beam.total_cost <= greedy.total_cost + 1e-12


def test_export_import_flat(tmp_path, flat_path):
    f = tmp_path / "flat.path"
    export_path(flat_path, f)
    text = f.read_text()
    assert sum(1 for ln in text.splitlines() if not ln.startswith("#")) == 25
    back = import_path(f)
    assert back.morphologies == flat_path.morphologies
    assert [s.cost for s in back.steps] == [s.cost for s in flat_path.steps]
    assert [s.side for s in back.steps] == [s.side for s in flat_path.steps]
    assert back.settings == flat_path.settings and back.params == flat_path.params
    assert back.map_hash == flat_path.map_hash


def test_export_empty_path(tmp_path, flat_path):
    empty = PlanPath(flat_path.start, [], flat_path.settings, P, "")
    export_path(empty, tmp_path / "e.path")
    lines = (tmp_path / "e.path").read_text().splitlines()
    assert all(ln.startswith("#") for ln in lines)
    assert len(import_path(tmp_path / "e.path")) == 0


def test_import_rejects_garbage(tmp_path, flat_path):
    f = tmp_path / "bad.path"
    f.write_text(dumps_path(flat_path) + "1 2 3\n")
    with pytest.raises(ValueError, match="malformed"):
        import_path(f)


finite = st.floats(-10, 10, allow_nan=False)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.lists(finite, min_size=13, max_size=13),
                          st.floats(0, 1), st.sampled_from(["left", "right"])),
                max_size=8))
def test_random_path_roundtrip(tmp_path_factory, rows):
    start = Morphology((0, 0.075, 0.035), (0, -0.075, 0.035))
    steps = [PlanStep(Morphology.from_tuple(v), c, side) for v, c, side in rows]
    path = PlanPath(start, steps, SearchSettings(), P, "abc")
    f = tmp_path_factory.mktemp("p") / "r.path"
    export_path(path, f)
    back = import_path(f)
    assert back.morphologies == path.morphologies
    assert [s.cost for s in back.steps] == [s.cost for s in steps]


def test_mirrored_path_swaps_sides(flat_path):
    m = flat_path.mirrored()
    assert all(s.side == "right" for s in m.steps)
    assert m.mirrored().morphologies == flat_path.morphologies
