"""End-to-end CLI behavior: exit codes, file outputs, determinism."""

import json

import numpy as np
import pytest

import bqspec.cli as cli
from bqspec.errors import CountMismatch
from bqspec.periodic_fn import CoefficientPair, TrigSeries, dump_coefficients

import oracles


@pytest.fixture
def u_file(tmp_path):
    u = CoefficientPair(TrigSeries([0.05], []), TrigSeries([], [0.05]))
    path = tmp_path / "u.json"
    dump_coefficients(u, path)
    return path


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return path


def test_spectrum_zero_field(tmp_path):
    inp = write_json(tmp_path / "zero.json", {"p": {}, "q": {}})
    out = tmp_path / "spec.json"
    rc = cli.main(["spectrum", str(inp), "--n-max", "2", "--ode-steps", "512",
                   "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["n_max"] == 2
    for row in doc["spectral_data"]["data"]:
        assert abs(row["g_c"]) < 1e-8 and abs(row["g_s"]) < 1e-8
        assert row["r_minus"] == pytest.approx(oracles.free_mu(row["n"]), rel=1e-6)
    assert doc["diagnostics"]["r0_closed"] is True
    assert (tmp_path / "spec.rho.csv").exists()


def test_spectrum_rho_csv_layout(tmp_path):
    inp = write_json(tmp_path / "zero.json", {"p": {}, "q": {}})
    out = tmp_path / "s.json"
    rc = cli.main(["spectrum", str(inp), "--n-max", "1", "--ode-steps", "256",
                   "--out", str(out)])
    assert rc == 0
    lines = (tmp_path / "s.rho.csv").read_text().strip().splitlines()
    assert lines[0] == "n,lambda,rho,noise"
    # 17 significant digits, scientific
    field = lines[1].split(",")[1]
    assert "e" in field and len(field.split("e")[0].replace("-", "").replace(".", "")) == 17


def test_malformed_json_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"p": {"cos": [0.05]')
    rc = cli.main(["spectrum", str(bad)])
    assert rc == 2
    first = capsys.readouterr().err.splitlines()[0]
    assert first.startswith("ERROR 2 ")
    assert "line" in first or "char" in first


def test_unknown_coefficient_field_exits_2(tmp_path, capsys):
    inp = write_json(tmp_path / "bad.json", {"p": {"cos": [0.05], "const": 1}, "q": {}})
    rc = cli.main(["spectrum", str(inp)])
    assert rc == 2
    assert capsys.readouterr().err.startswith("ERROR 2 ")


def test_bad_flag_value_exits_2(tmp_path, capsys):
    inp = write_json(tmp_path / "u.json", {"p": {}, "q": {}})
    assert cli.main(["spectrum", str(inp), "--n-max", "0"]) == 2
    assert capsys.readouterr().err.startswith("ERROR 2 ")


def test_unknown_config_key_exits_2(tmp_path, capsys):
    inp = write_json(tmp_path / "u.json", {"p": {}, "q": {}})
    cfg = write_json(tmp_path / "cfg.json", {"n_max": 1, "mesh": 12})
    assert cli.main(["spectrum", str(inp), "--config", str(cfg)]) == 2
    assert "mesh" in capsys.readouterr().err


def test_count_mismatch_exits_3(tmp_path, capsys, monkeypatch):
    inp = write_json(tmp_path / "u.json", {"p": {"cos": [0.05]}, "q": {}})

    def boom(*a, **k):
        raise CountMismatch("contour count 4 != 2 in D_2")

    monkeypatch.setattr(cli, "forward_map", boom)
    rc = cli.main(["spectrum", str(inp), "--out", str(tmp_path / "o.json")])
    assert rc == 3
    first = capsys.readouterr().err.splitlines()[0]
    assert first.startswith("ERROR 3 ") and "D_2" in first


def test_verify_zero_field(tmp_path, capsys):
    inp = write_json(tmp_path / "zero.json", {"p": {}, "q": {}})
    rc = cli.main(["verify", str(inp), "--n-max", "1", "--ode-steps", "256"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out


def test_verify_seeded_field(tmp_path, capsys):
    rng = np.random.default_rng(41)
    u = CoefficientPair(TrigSeries(0.002 * rng.uniform(-1, 1, 2), []),
                        TrigSeries([], 0.02 * rng.uniform(-1, 1, 2)))
    inp = tmp_path / "u.json"
    dump_coefficients(u, inp)
    rc = cli.main(["verify", str(inp), "--n-max", "2", "--ode-steps", "512"])
    assert rc == 0
    assert "FAIL" not in capsys.readouterr().out


def test_verify_out_of_ball_warns(tmp_path, capsys):
    inp = write_json(tmp_path / "big.json", {"p": {"cos": [1.5]}, "q": {}})
    rc = cli.main(["verify", str(inp), "--n-max", "1", "--ode-steps", "256"])
    captured = capsys.readouterr()
    assert rc in (0, 4)
    assert "ball norm" in captured.err or "ball norm" in captured.out
    if rc == 4:
        assert captured.err.startswith("ERROR 4 ")


def test_invert_round_trip_via_files(tmp_path):
    u = CoefficientPair(TrigSeries([0.02], []), TrigSeries([], [0.02]))
    inp = tmp_path / "u.json"
    dump_coefficients(u, inp)
    spec_out = tmp_path / "spec.json"
    assert cli.main(["spectrum", str(inp), "--n-max", "1", "--ode-steps", "512",
                     "--out", str(spec_out)]) == 0
    rec_out = tmp_path / "rec.json"
    assert cli.main(["invert", str(spec_out), "--out", str(rec_out)]) == 0
    doc = json.loads(rec_out.read_text())
    assert doc["p"]["cos"][0] == pytest.approx(0.02, abs=1e-6)
    assert doc["q"]["sin"][0] == pytest.approx(0.02, abs=1e-6)
    hist = json.loads((tmp_path / "rec.history.json").read_text())
    assert hist["iterations"] >= 1
    assert hist["residuals"][-1] <= 1e-8


def test_invert_no_convergence_exits_5(tmp_path, capsys):
    target = {"n_max": 1, "data": [{"n": 1, "g_c": 0.5, "g_s": 0.0},
                                   {"n": -1, "g_c": 0.0, "g_s": 0.0}]}
    inp = write_json(tmp_path / "t.json", target)
    out = tmp_path / "rec.json"
    rc = cli.main(["invert", str(inp), "--max-iter", "2", "--out", str(out)])
    assert rc == 5
    assert capsys.readouterr().err.startswith("ERROR 5 ")
    # history still written on failure
    hist = json.loads((tmp_path / "rec.history.json").read_text())
    assert hist["converged"] is False
    assert len(hist["residuals"]) >= 1


def test_flow_small_data(tmp_path, u_file):
    out = tmp_path / "flow.csv"
    cfg = write_json(tmp_path / "cfg.json",
                     {"t_end": 0.02, "dt": 1e-3, "modes": 16, "snapshots": 3,
                      "n_max": 1, "ode_steps": 512})
    rc = cli.main(["flow", str(u_file), "--config", str(cfg), "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0].startswith("t,p_cos_1")
    assert len(lines) == 4   # header + 3 snapshots
    drift = json.loads((tmp_path / "flow.drift.json").read_text())
    assert all(v <= 1e-5 for v in drift["drift"].values())


def test_flow_stability_violation_exits_2(tmp_path, u_file, capsys):
    cfg = write_json(tmp_path / "cfg.json",
                     {"t_end": 0.01, "dt": 1.5e-4, "modes": 64})
    assert cli.main(["flow", str(u_file), "--config", str(cfg),
                     "--out", str(tmp_path / "f.csv")]) == 2
    assert capsys.readouterr().err.startswith("ERROR 2 ")


def test_flow_blowup_exits_6(tmp_path, capsys):
    inp = write_json(tmp_path / "big.json", {"p": {"cos": [400.0]}, "q": {}})
    cfg = write_json(tmp_path / "cfg.json",
                     {"t_end": 0.15, "dt": 1.5e-3, "modes": 16})
    rc = cli.main(["flow", str(inp), "--config", str(cfg),
                   "--out", str(tmp_path / "f.csv")])
    assert rc == 6
    first = capsys.readouterr().err.splitlines()[0]
    assert first.startswith("ERROR 6 ")
    assert "t =" in first or "t=" in first


def test_flag_overrides_config(tmp_path, capsys):
    inp = write_json(tmp_path / "u.json", {"p": {}, "q": {}})
    cfg = write_json(tmp_path / "cfg.json", {"n_max": 3})
    out = tmp_path / "s.json"
    rc = cli.main(["spectrum", str(inp), "--config", str(cfg), "--n-max", "1",
                   "--ode-steps", "256", "--out", str(out)])
    assert rc == 0
    assert json.loads(out.read_text())["n_max"] == 1


def test_spectrum_deterministic(tmp_path):
    # same out path both times: the JSON embeds its own aux-file path
    inp = write_json(tmp_path / "u.json", {"p": {"cos": [0.02]}, "q": {"sin": [0.01]}})
    out = tmp_path / "a.json"
    outs, csvs = [], []
    for _ in range(2):
        assert cli.main(["spectrum", str(inp), "--n-max", "1",
                         "--ode-steps", "512", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
        csvs.append((tmp_path / "a.rho.csv").read_bytes())
    assert outs[0] == outs[1] and csvs[0] == csvs[1]
