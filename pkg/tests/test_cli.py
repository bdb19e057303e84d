import json

import numpy as np
import pytest

from vortexlab.cli import main


TORUS_VACUUM = """
rng_seed = 7

[model]
n = 1
weights = [1]
level = 1.0
strict_free = true

[surface]
kind = "torus"
sides = [6.283185307179586, 6.283185307179586]
resolution = [16, 16]
degree = 0

[solver]
eps = 0.5
seed = "vacuum"
descend_steps = 5
"""

RADIAL = """
[model]
n = 1
weights = [1]
level = 1.0
strict_free = true

[surface]
kind = "radial"
r_max = 25.0
N_r = 1500
grading = 2.0

[solver]
vortex_number = 1
"""


def write_cfg(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_solve_vacuum(tmp_path, capsys):
    cfg = write_cfg(tmp_path, TORUS_VACUUM)
    out = tmp_path / "out"
    rc = main(["solve", "--config", str(cfg), "--out", str(out)])
    assert rc == 0
    assert (out / "state.vortx").exists()
    assert (out / "diagnostics.csv").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert "versions" in manifest and "config" in manifest
    header = (out / "diagnostics.csv").read_text().splitlines()[0]
    assert header.startswith("#")


def test_solve_missing_key_exit2(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "[model]\nn = 1\n")
    rc = main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert rc == 2
    err = capsys.readouterr().err
    payload = json.loads(err.strip().splitlines()[-1])
    assert payload["error"] == "config"
    assert "weights" in payload["message"]


def test_solve_malformed_toml_exit2(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "[model\nn = ")
    rc = main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert rc == 2


def test_missing_config_exit2(tmp_path):
    rc = main(["solve", "--out", str(tmp_path / "o")])
    assert rc == 2


def test_radial_command(tmp_path, capsys):
    cfg = write_cfg(tmp_path, RADIAL)
    out = tmp_path / "rad"
    rc = main(["radial", "--config", str(cfg), "--out", str(out)])
    assert rc == 0
    text = (out / "radial.txt").read_text()
    val = [l for l in text.splitlines() if l.startswith("energy/(pi r d)")][0].split()[-1]
    assert float(val) == pytest.approx(1.0, abs=1e-3)


def test_continue_and_report_and_resume(tmp_path):
    cfg_text = TORUS_VACUUM.replace('degree = 0', 'degree = 1').replace(
        'seed = "vacuum"', 'seed = "theta"'
    ).replace("descend_steps = 5", "descend_steps = 40\nladder = [0.3, 0.25]\ntol = 1e-9")
    cfg = write_cfg(tmp_path, cfg_text)
    out = tmp_path / "ladder"
    rc = main(["continue", "--config", str(cfg), "--out", str(out)])
    assert rc == 0
    lines = (out / "ladder.csv").read_text().splitlines()
    rows = [l for l in lines if l and not l.startswith("#") and not l.startswith("eps,")]
    assert len(rows) == 2
    assert any("slope" in l for l in lines if l.startswith("#"))
    assert (out / "rung0.vortx").exists() and (out / "rung1.vortx").exists()

    rc = main(["report", "--out", str(out)])
    assert rc == 0
    assert (out / "ladder.dat").exists() and (out / "plot.gp").exists()

    # resume from a saved rung without recompute: 0 Newton iterations
    cfg2 = write_cfg(
        tmp_path,
        cfg_text.replace("ladder = [0.3, 0.25]", "ladder = [0.25]"),
        name="resume.toml",
    )
    out2 = tmp_path / "resumed"
    rc = main([
        "continue", "--config", str(cfg2), "--out", str(out2),
        "--seed-snapshot", str(out / "rung1.vortx"),
    ])
    assert rc == 0
    from vortexlab.diagnostics import read_csv

    recs = read_csv(out2 / "ladder.csv")
    assert recs[0].iterations <= 1


def test_spectrum_command(tmp_path):
    cfg_text = TORUS_VACUUM.replace("descend_steps = 5", "descend_steps = 5\ncount = 6")
    cfg = write_cfg(tmp_path, cfg_text)
    out = tmp_path / "spec"
    rc = main(["spectrum", "--config", str(cfg), "--out", str(out)])
    assert rc == 0
    assert "nullity 0" in (out / "spectrum.txt").read_text()


def test_check_command(tmp_path):
    cfg = write_cfg(tmp_path, "rng_seed = 0\n")
    out = tmp_path / "check"
    rc = main(["check", "--config", str(cfg), "--out", str(out)])
    assert rc == 0
    text = (out / "check.txt").read_text()
    assert "PASS" in text and "FAIL" not in text


def test_determinism_bitwise(tmp_path):
    from vortexlab.diagnostics import DiagRecord

    cfg = write_cfg(tmp_path, TORUS_VACUUM)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
        outs.append((out / "diagnostics.csv").read_text().splitlines())
    wt = DiagRecord.columns().index("wall_time")
    for la, lb in zip(*outs):
        if la.startswith("#") or la.startswith("eps,"):
            assert la == lb
        else:
            ca, cb = la.split(","), lb.split(",")
            ca[wt] = cb[wt] = "-"
            assert ca == cb
