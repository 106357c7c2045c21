"""Config files, binary snapshots, record tables, and the command line."""

import numpy as np
import pytest

from nlpf.cli import main
from nlpf.config import (build_components, parse_config_text, render_manifest,
                         resolve_config)
from nlpf.errors import ConfigError
from nlpf.snapshots import (read_records_csv, read_snapshot, read_trajectory,
                            write_records_csv, write_snapshot,
                            write_trajectory)
from nlpf.stepper import run


def test_parse_rejects_garbage():
    with pytest.raises(ConfigError):
        parse_config_text("solver.dt 0.1\n")          # missing '='
    with pytest.raises(ConfigError):
        parse_config_text("a = 1\na = 2\n")           # duplicate key
    parsed = parse_config_text("# comment\n\nsolver.dt = 0.5\n")
    assert parsed == {"solver.dt": "0.5"}


def test_resolve_applies_defaults_and_rejects_unknown():
    resolved = resolve_config({"solver.dt": "0.5"})
    assert resolved["solver.dt"] == 0.5
    assert resolved["grid.dim"] == 1
    assert resolved["thermo.model"] == "two_phase_power"
    with pytest.raises(ConfigError) as info:
        resolve_config({"solver.dtt": "0.5"})
    assert "solver.dtt" in str(info.value)


def test_manifest_round_trip_is_stable():
    resolved = resolve_config({"solver.dt": "0.001",
                               "init.theta.amplitude": "0.2"})
    text = render_manifest(resolved)
    again = render_manifest(resolve_config(parse_config_text(text)))
    assert text == again
    # keys come out sorted, one per line
    keys = [line.split(" = ")[0] for line in text.strip().splitlines()]
    assert keys == sorted(keys)


def test_snapshot_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    theta = 1.0 + rng.random(12)
    chi = rng.random((12, 2))
    path = tmp_path / "snap_000000.nlpf"
    write_snapshot(path, (12,), 0.125, theta, chi)
    cells, t, th2, ch2 = read_snapshot(path)
    assert cells == (12,)
    assert t == 0.125
    assert np.array_equal(th2, theta)
    assert np.array_equal(ch2, chi)


def test_snapshot_rejects_corruption(tmp_path):
    theta = np.ones(4)
    chi = np.full((4, 1), 0.5)
    path = tmp_path / "snap_000000.nlpf"
    write_snapshot(path, (4,), 0.0, theta, chi)
    raw = bytearray(path.read_bytes())
    raw[0] = ord("X")
    bad = tmp_path / "bad.nlpf"
    bad.write_bytes(bytes(raw))
    with pytest.raises(ConfigError):
        read_snapshot(bad)
    trunc = tmp_path / "trunc.nlpf"
    trunc.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ConfigError):
        read_snapshot(trunc)


def test_records_csv_round_trip(tmp_path):
    from nlpf.stepper import RECORD_COLUMNS, _RECORD_DTYPE

    rec = np.zeros(3, dtype=_RECORD_DTYPE)
    rec["t"] = [0.1, 0.2, 0.3]
    rec["total_energy"] = [1.0 / 3.0, np.pi, 1e-17]
    path = tmp_path / "records.csv"
    write_records_csv(path, rec)
    back = read_records_csv(path)
    for name in RECORD_COLUMNS:
        assert np.array_equal(back[name], rec[name])


def test_trajectory_round_trip(tmp_path):
    from conftest import two_phase_components

    comp = two_phase_components(cells=8, horizon=0.05, dt=0.01)
    traj = run(comp)
    write_trajectory(tmp_path, traj, comp.grid.cells)
    back = read_trajectory(tmp_path, comp)
    assert np.array_equal(back.thetas[-1], traj.thetas[-1])
    assert np.array_equal(back.chis[-1], traj.chis[-1])
    assert np.array_equal(back.xis[-1], traj.xis[-1])
    assert np.array_equal(back.records["total_entropy"],
                          traj.records["total_entropy"])


def write_cfg(tmp_path, extra=""):
    cfg = tmp_path / "case.cfg"
    cfg.write_text(
        "grid.cells = 16\n"
        "solver.dt = 0.01\n"
        "solver.horizon = 0.05\n"
        "solver.rho = 100.0\n" + extra)
    return cfg


def test_cli_run_verify_cycle(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "manifest.cfg").exists()
    assert (out / "records.csv").exists()
    assert main(["verify", str(out)]) == 0
    text = capsys.readouterr().out
    assert "check energy: PASS" in text
    assert (out / "verify_report.csv").exists()


def test_cli_verify_catches_tampering(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    rec = (out / "records.csv").read_text().splitlines()
    head = rec[0].split(",")
    col = head.index("selection_margin")
    fields = rec[1].split(",")
    fields[col] = "-1.0"
    rec[1] = ",".join(fields)
    (out / "records.csv").write_text("\n".join(rec) + "\n")
    assert main(["verify", str(out)]) == 3
    assert "check selection: FAIL" in capsys.readouterr().out


def test_cli_rejects_bad_input(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("solver.dt = 0\n")
    assert main(["run", "--config", str(bad),
                 "--out", str(tmp_path / "o")]) == 2
    missing = tmp_path / "nope.cfg"
    assert main(["run", "--config", str(missing),
                 "--out", str(tmp_path / "o2")]) == 2
    unknown = tmp_path / "unk.cfg"
    unknown.write_text("solver.dtt = 0.1\n")
    assert main(["run", "--config", str(unknown),
                 "--out", str(tmp_path / "o3")]) == 2


def test_cli_verify_needs_manifest(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["verify", str(empty)]) == 2


def test_cli_threads_do_not_change_results(tmp_path):
    cfg = write_cfg(tmp_path)
    out1 = tmp_path / "o1"
    out2 = tmp_path / "o2"
    assert main(["run", "--config", str(cfg), "--out", str(out1),
                 "--threads", "1"]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(out2),
                 "--threads", "4"]) == 0
    assert (out1 / "records.csv").read_bytes() == \
        (out2 / "records.csv").read_bytes()
    s1 = sorted(p.name for p in out1.glob("*.nlpf"))
    for name in s1:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_cli_calibrate(capsys):
    assert main(["calibrate", "1.0", "1"]) == 0
    text = capsys.readouterr().out
    assert "rho_star" in text


def test_cli_study_writes_csv(tmp_path):
    cfg = write_cfg(tmp_path, "study.dt_levels = 2\n")
    out = tmp_path / "study.csv"
    assert main(["study", "dt-refinement", "--config", str(cfg),
                 "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0].startswith("dt") or "dt" in lines[0].split(",")
    assert len(lines) >= 3


def test_cli_study_unknown_kind(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["study", "nope", "--config", str(cfg)]) == 2


def test_build_components_auto_rho():
    resolved = resolve_config({"solver.rho": "auto",
                               "solver.rho_c_star": "1.0"})
    comp, final = build_components(resolved)
    assert final["solver.rho"] == pytest.approx(1.107854e8, rel=1e-3)
    assert comp.config.rho == final["solver.rho"]
