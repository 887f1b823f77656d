import subprocess
import sys

from flipperplan.cli import main
from flipperplan.inflation import inflate
from flipperplan.path_search import import_path
from flipperplan.terrain import ObstacleSpec, dumps_map, generate_obstacle, load_map


def run(*argv):
    return main([str(a) for a in argv])


def test_gen_map_then_inflate(tmp_path):
    m, d = tmp_path / "step15.grid", tmp_path / "step15.inf.grid"
    assert run("gen-map", "--kind", "step", "--rot", 15, "--out", m) == 0
    assert run("inflate", "--map", m, "--out", d) == 0
    want = inflate(generate_obstacle(ObstacleSpec("step", 15.0)), 0.035)
    assert d.read_text() == dumps_map(want)
    assert load_map(d) == want


def test_out_of_sweep_rotation_warns(tmp_path, capsys):
    assert run("gen-map", "--kind", "iramp", "--rot", 45, "--out", tmp_path / "i.grid") == 0
    assert "outside" in capsys.readouterr().err


def test_usage_errors(tmp_path, capsys):
    assert run("gen-map", "--kind", "bogus", "--out", tmp_path / "x") == 2
    err = capsys.readouterr().err
    assert err.count("\n") == 1 and "usage error" in err
    assert run("gen-map", "--kind", "step", "--rot", 95, "--out", tmp_path / "x") == 2
    assert run("frobnicate") == 2
    assert not any(tmp_path.iterdir())


def test_missing_input_is_io_error(tmp_path, capsys):
    assert run("inflate", "--map", tmp_path / "nope.grid", "--out", tmp_path / "o") == 4
    assert "io error" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_flat_plan_zero_cost(tmp_path):
    from flipperplan.terrain import flat_map, save_map
    save_map(flat_map(), tmp_path / "flat.grid")
    out = tmp_path / "flat.path"
    assert run("plan", "--map", tmp_path / "flat.grid", "--out", out, "--target-x", 0.5,
               "--debug-candidates", tmp_path / "c.csv") == 0
    path = import_path(out)
    assert len(path) == 25 and path.total_cost == 0.0
    assert (tmp_path / "c.csv").read_text().startswith("step,rank,side")


def test_dead_end_exit_code(tmp_path, capsys):
    import numpy as np
    from flipperplan.terrain import flat_map, save_map
    from helpers import make_map
    g = flat_map()
    wall = make_map(np.where(g.xs[None, :] > 0.4, 0.5, 0.0).repeat(g.height_cells, axis=0),
                    g.resolution, g.origin)
    save_map(wall, tmp_path / "wall.grid")
    assert run("plan", "--map", tmp_path / "wall.grid", "--out", tmp_path / "w.path") == 3
    err = capsys.readouterr().err
    assert "infeasible: x=" in err and err.count("\n") == 1
    assert not (tmp_path / "w.path").exists()


def test_config_file_and_flag_precedence(tmp_path):
    from flipperplan.terrain import flat_map, save_map
    save_map(flat_map(), tmp_path / "flat.grid")
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"map = {tmp_path / 'flat.grid'}\ntarget_x = 0.2\ndx = 0.05\n")
    out = tmp_path / "p.path"
    assert run("--config", cfg, "plan", "--out", out, "--dx", 0.02) == 0
    path = import_path(out)
    assert path.settings.dx == 0.02 and path.settings.target_x == 0.2
    assert len(path) == 10
    cfg.write_text("colour = blue\n")
    assert run("--config", cfg, "plan", "--map", "x", "--out", out) == 2


def test_param_overrides_and_dump(tmp_path, capsys):
    assert run("params", "--dump") == 0
    text = capsys.readouterr().out
    assert "wheel_radius = 0.035" in text
    f = tmp_path / "robot.txt"
    f.write_text(text.replace("base_length = 0.25", "base_length = 0.3"))
    assert run("params", "--params-file", f, "--param", "flipper_length=0.12") == 0
    out = capsys.readouterr().out
    assert "base_length = 0.3\n" in out and "flipper_length = 0.12\n" in out
    assert run("params", "--param", "nonsense=1") == 2


def test_simulate_noiseless_and_seeded(tmp_path):
    from flipperplan.terrain import flat_map, save_map
    save_map(flat_map(), tmp_path / "flat.grid")
    p = tmp_path / "flat.path"
    assert run("plan", "--map", tmp_path / "flat.grid", "--out", p, "--target-x", 0.3) == 0
    assert run("simulate", "--path", p, "--out", tmp_path / "r0") == 0
    import csv
    with open(tmp_path / "r0" / "orientation_error.csv") as fh:
        assert all(float(r[k]) == 0.0 for r in csv.DictReader(fh)
                   for k in ("error_psi", "error_theta", "error_phi"))
    assert run("simulate", "--path", p, "--out", tmp_path / "r1",
               "--disturbance", "gauss:0.001") == 2
    for d in ("a", "b"):
        assert run("simulate", "--path", p, "--out", tmp_path / d,
                   "--disturbance", "gauss:0.001", "--seed", 5) == 0
    for name in ("position_bias.csv", "orientation_error.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert run("simulate", "--path", p, "--out", tmp_path / "c", "--ticks-max", 10) == 3


def test_small_sweep(tmp_path):
    out = tmp_path / "sw"
    assert run("sweep", "--out", out, "--kinds", "step", "ramp", "--rotations", 0, 15,
               "--target-x", 0.4, "--seed", 1, "--disturbance", "gauss:0.0005") == 0
    summary = (out / "summary.csv").read_text().splitlines()
    assert summary[0].startswith("kind,rotation_deg,feasible,followed")
    assert len(summary) == 5
    table = (out / "table.csv").read_text().splitlines()
    assert table == ["kind,0,15", "step,1,1", "ramp,1,1"]
    assert (out / "step_15p0" / "path.txt").exists()
    assert (out / "ramp_00p0" / "report" / "position_bias.csv").exists()


def test_console_script_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "flipperplan.cli", "params", "--dump"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "robot_width" in r.stdout
