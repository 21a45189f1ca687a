from __future__ import annotations

import json
import textwrap
from pathlib import Path

import pytest

from motoplace.cli import main
from motoplace.config import load_config
from motoplace.pipeline import (
    ARTIFACTS,
    EXIT_BUILD,
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_OK,
    EXIT_REGION,
    EXIT_SOLVE,
    EXIT_VERIFY,
    load_placement,
    run_pipeline,
)
from motoplace.topology import PlacedCluster, PlacedElement, Placement

TOPOLOGY = """
format_version = 1
name = "small"

[[element]]
name = "BP"
type = "BP"
mass = 4.0
shape = "rect"
n_sub = 2
sub_width = 0.1
sub_height = 0.1
sub_mass = 2.0

[[element]]
name = "INV"
type = "INV"
mass = 2.0
shape = "rect"
width = 0.1
height = 0.05
"""

PROJECT = """
format_version = 1
name = "small"
topology = "topo.toml"
ideal_cog = [0.5, 0.2]

[design_space]
x_min = 0.0
x_max = 1.0
y_min = 0.0
y_max = 0.5

[vehicle]
wheelbase = 1.4
chassis_mass = 80.0
chassis_x = 0.7
chassis_y = 0.5
rider_mass = 75.0
rider_x = 0.6
rider_y = 0.9
"""


def project(tmp_path: Path, text: str = PROJECT, topology: str = TOPOLOGY) -> Path:
    (tmp_path / "topo.toml").write_text(textwrap.dedent(topology))
    path = tmp_path / "project.toml"
    path.write_text(textwrap.dedent(text))
    return path


# -- full run on the shipped single-motor data ------------------------------------------


def test_single_motor_run_writes_every_artifact(data_dir, tmp_path):
    cfg = load_config(data_dir / "single_mm.toml")
    res = run_pipeline(cfg, tmp_path)
    assert res.exit_code == EXIT_OK, res.message
    assert set(res.artifacts) == set(ARTIFACTS)
    assert all(p.exists() and p.stat().st_size > 0 for p in res.artifacts.values())
    assert res.result.status == "optimal" and res.report.passed
    # one cluster holds every module as a single stacked column
    (cluster,) = res.placement.elements["BP"].clusters
    assert cluster.n_w == 1 and cluster.n_h == 3
    result = json.loads((tmp_path / "result.json").read_text())
    assert result["format_version"] == 1 and result["gap"] == 0.0


# -- CLI verbs --------------------------------------------------------------------------------


def test_run_verb_then_verify_and_render(tmp_path, capsys):
    cfg = project(tmp_path)
    out = tmp_path / "out"
    assert main(["run", "-c", str(cfg), "-o", str(out)]) == EXIT_OK
    for key in ("lp", "mps", "result", "placement", "verification", "svg"):
        assert (out / ARTIFACTS[key]).exists()
    assert not (out / ARTIFACTS["region"]).exists()  # no drive cycle, so no region
    capsys.readouterr()
    args = ["-c", str(cfg), "-o", str(out)]
    assert main(["verify", *args, "--result", str(out / "result.json")]) == EXIT_OK
    assert "verification: PASS" in capsys.readouterr().out
    (out / "placement.svg").unlink()
    assert main(["render", *args]) == EXIT_OK
    assert (out / "placement.svg").read_text().startswith("<svg")


def test_build_verb_writes_the_requested_format(tmp_path, capsys):
    cfg = project(tmp_path)
    out = tmp_path / "out"
    assert main(["build", "-c", str(cfg), "-o", str(out), "--format", "lp"]) == EXIT_OK
    counts = json.loads(capsys.readouterr().out)
    assert counts["binaries"] > 0
    assert (out / "model.lp").exists() and not (out / "model.mps").exists()


def test_region_verb_prints_the_configured_ideal(tmp_path, capsys):
    assert main(["region", "-c", str(project(tmp_path)), "-o", str(tmp_path / "out")]) == EXIT_OK
    assert json.loads(capsys.readouterr().out) == {"format_version": 1, "ideal_cog": [0.5, 0.2]}


def test_region_verb_with_a_drive_cycle_writes_the_grid(data_dir, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["region", "-c", str(data_dir / "single_mm.toml"), "-o", str(out)]) == EXIT_OK
    ideal = json.loads(capsys.readouterr().out)["ideal_cog"]
    assert len(ideal) == 2
    assert (out / "region.csv").read_text().startswith("# format_version: 1")


def test_solve_accepts_a_warm_start(tmp_path, capsys):
    cfg = project(tmp_path)
    out = tmp_path / "out"
    assert main(["solve", "-c", str(cfg), "-o", str(out)]) == EXIT_OK
    first = json.loads((out / "result.json").read_text())
    out2 = tmp_path / "again"
    assert main(["solve", "-c", str(cfg), "-o", str(out2), "--warm-start", str(out / "placement.json")]) == EXIT_OK
    second = json.loads((out2 / "result.json").read_text())
    assert second["warm_start"]["accepted"]
    assert second["objective"] == pytest.approx(first["objective"], abs=1e-9)


def test_n_com_override(tmp_path, capsys):
    cfg = project(tmp_path)
    out = tmp_path / "out"
    assert main(["solve", "-c", str(cfg), "-o", str(out), "--n-com", "BP=2"]) == EXIT_OK
    placement = load_placement(out / "placement.json")
    assert len(placement.elements["BP"].clusters) == 2


# -- exit codes ----------------------------------------------------------------------------------


def test_config_error_exit_code(tmp_path, capsys):
    cfg = project(tmp_path, PROJECT.replace('name = "small"', 'name = "small"\ncolour = "red"'))
    assert main(["run", "-c", str(cfg)]) == EXIT_CONFIG
    assert "colour" in capsys.readouterr().err


def test_bad_n_com_override_is_a_config_error(tmp_path, capsys):
    assert main(["build", "-c", str(project(tmp_path)), "--n-com", "BP=3"]) == EXIT_CONFIG
    assert "n_sub" in capsys.readouterr().err


def test_region_error_exit_code(tmp_path, capsys):
    # a cycle braking at 20 m/s^2 cannot be followed with tyres this slippery
    (tmp_path / "cycle.csv").write_text("time_s,speed_mps\n0,20\n1,0\n2,0\n")
    text = PROJECT.replace("ideal_cog = [0.5, 0.2]", 'drive_cycle = "cycle.csv"')
    text = text.replace("rider_y = 0.9", "rider_y = 0.9\nmu_f = 0.1\nmu_r = 0.1")
    assert main(["run", "-c", str(project(tmp_path, text)), "-o", str(tmp_path / "out")]) == EXIT_REGION


def test_build_error_exit_code(tmp_path, capsys):
    big = TOPOLOGY.replace("width = 0.1\nheight = 0.05", "width = 2.0\nheight = 0.05")
    assert main(["build", "-c", str(project(tmp_path, topology=big)), "-o", str(tmp_path / "o")]) == EXIT_BUILD
    assert "INV" in capsys.readouterr().err


def test_solve_error_exit_code(tmp_path, capsys):
    cfg = project(tmp_path)
    code = main(["run", "-c", str(cfg), "-o", str(tmp_path / "out"), "--node-limit", "1"])
    assert code == EXIT_SOLVE


def test_verify_error_exit_code(tmp_path, capsys):
    cfg = project(tmp_path)
    # both modules stacked on the same spot, and the inverter on top of them
    clusters = [PlacedCluster(1, 1, 0.5, 0.2), PlacedCluster(1, 1, 0.5, 0.2)]
    bad = Placement(
        {
            "BP": PlacedElement("BP", 0.5, 0.2, 0.0, clusters),
            "INV": PlacedElement("INV", 0.5, 0.2, 0.0),
        }
    )
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad.to_dict()))
    code = main(["verify", "-c", str(cfg), "-o", str(tmp_path / "out"), "--placement", str(path), "--n-com", "BP=2"])
    assert code == EXIT_VERIFY
    report = json.loads((tmp_path / "out" / "verification.json").read_text())
    assert not report["passed"]


def test_unreadable_placement_is_a_verify_error(tmp_path, capsys):
    path = tmp_path / "junk.json"
    path.write_text("{not json")
    assert main(["verify", "-c", str(project(tmp_path)), "--placement", str(path)]) == EXIT_VERIFY


def test_io_error_exit_code(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", "-c", str(project(tmp_path)), "-o", str(blocker / "sub")]) == EXIT_IO
