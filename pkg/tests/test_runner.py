import json

import numpy as np
import pytest

from qspacetime import runner
from qspacetime.runner import ConfigError, load_config, main, run_scenario
from qspacetime.solve import ConvergenceError

NAMES = [
    "pw-qubit",
    "kg-plane-wave",
    "kg-wavepacket",
    "kg-two-particle",
    "nr-potential",
    "dirac-plane-wave",
    "lorentz-boost",
    "gauge-u1",
    "convergence-study",
]


def write(tmp_path, text, name="cfg.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_list_scenarios_stable():
    a, b = runner.list_scenarios(), runner.list_scenarios()
    assert a == b
    assert [n for n, _ in a] == NAMES
    assert all(desc for _, desc in a)


def test_list_command(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    for n in NAMES:
        assert n in out


@pytest.mark.parametrize("name", NAMES)
def test_every_scenario_runs(name):
    report, csv = run_scenario(load_config(f"[scenario]\nname = {name}\n"))
    assert set(report) == {"scenario", "params", "snap_errors", "residuals", "fidelities", "timings"}
    assert report["scenario"] == name
    assert report["timings"] == {}
    json.dumps(report)


def test_kg_plane_wave_report():
    cfg = load_config("[scenario]\nname = kg-plane-wave\n[lattice]\nd_t = 64\nd_x = 64\n[physics]\nm = 1\nk_steps = 1\n")
    report, csv = run_scenario(cfg)
    res = report["residuals"]
    err = report["snap_errors"]["E"]
    assert 0 < err <= np.pi / 6.4
    assert res["snapped"]["J_H"] <= 1e-10 and res["snapped"]["J_Px"] <= 1e-10
    assert abs(res["exact_E"]["J_H"] - err) <= 1e-8


def test_pw_qubit_fidelity():
    report, _ = run_scenario(load_config("[scenario]\nname = pw-qubit\n"))
    assert report["fidelities"]["min"] >= 1 - 1e-10


def test_csv_schema():
    cfg = load_config("[scenario]\nname = kg-plane-wave\n[lattice]\nd_t = 4\nd_x = 4\ndt = 0.5\n")
    _, csv = run_scenario(cfg)
    lines = csv.splitlines()
    assert lines[0] == "t,x,spin,re,im"
    assert len(lines) == 1 + 16
    re = lines[1].split(",")[3]
    assert len(re.replace("-", "").replace(".", "").split("e")[0].lstrip("0")) <= 17


def test_byte_identical_reruns(tmp_path):
    cfg = write(tmp_path, "[scenario]\nname = nr-potential\nseed = 3\n")
    outs = []
    for run in ("a", "b"):
        d = tmp_path / run
        assert main(["--output-dir", str(d), "run", cfg]) == 0
        outs.append(((d / "report.json").read_bytes(), (d / "wavefunction.csv").read_bytes()))
    assert outs[0] == outs[1]


@pytest.mark.parametrize(
    "text",
    [
        "[scenario]\nname = kg-plane-wave\n[physics]\nmass = 1\n",
        "[scenario]\nname = nope\n",
        "[scenario]\nname = kg-plane-wave\n[extra]\na = 1\n",
        "[lattice]\nd_t = 4\n",
        "[scenario]\nname = kg-plane-wave\n[lattice]\nd_t = 1\n",
        "[scenario]\nname = kg-plane-wave\n[lattice]\ndt = -0.1\n",
        "[scenario]\nname = lorentz-boost\n[physics]\nv = 1.0\n",
        "[scenario]\nname = kg-plane-wave\n[physics]\nm = abc\n",
        "[scenario]\nname = kg-plane-wave\n[physics]\nk_steps = 100\n",
        "not an ini file",
    ],
)
def test_validation_exit_2_no_outputs(tmp_path, text):
    cfg = write(tmp_path, text)
    out = tmp_path / "out"
    assert main(["--output-dir", str(out), "run", cfg]) == 2
    assert not out.exists()


def test_load_config_raises():
    with pytest.raises(ConfigError):
        load_config("[scenario]\nname = kg-plane-wave\nfoo = 1\n")


def test_missing_config_exit_4(tmp_path):
    assert main(["--output-dir", str(tmp_path / "o"), "run", str(tmp_path / "missing.ini")]) == 4


def test_unwritable_output_exit_4(tmp_path):
    cfg = write(tmp_path, "[scenario]\nname = gauge-u1\n")
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["--output-dir", str(blocker / "sub"), "run", cfg]) == 4


def test_convergence_failure_exit_3(tmp_path, monkeypatch):
    def fail(cfg, opts):
        raise ConvergenceError("no luck", best_residual=0.5)

    sc = runner.SCENARIOS["nr-potential"]
    monkeypatch.setitem(runner.SCENARIOS, "nr-potential", runner.Scenario(sc.name, sc.description, sc.lattice, sc.physics, fail))
    cfg = write(tmp_path, "[scenario]\nname = nr-potential\n")
    out = tmp_path / "out"
    assert main(["--output-dir", str(out), "run", cfg]) == 3
    assert not out.exists()


def test_bad_global_options(tmp_path):
    cfg = write(tmp_path, "[scenario]\nname = gauge-u1\n")
    assert main(["--tol", "0", "run", cfg]) == 2
    assert main(["--bogus"]) == 2


def test_record_timings(tmp_path):
    cfg = write(tmp_path, "[scenario]\nname = gauge-u1\n")
    out = tmp_path / "out"
    assert main(["--output-dir", str(out), "--record-timings", "run", cfg]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["timings"]["total_seconds"] >= 0


def test_convergence_study_trend():
    report, _ = run_scenario(load_config("[scenario]\nname = convergence-study\n"))
    f = report["fidelities"]["min_by_size"]
    assert f["64"] < f["128"] < f["256"]
