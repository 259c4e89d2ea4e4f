import json
import math

import pytest

from epdyn import cli, verify
from epdyn.verify import CheckResult

GOOD_CONFIG = {
    "constants": {"hbar": 1.0, "mass": 1.0, "c": 1.0},
    "problem": {
        "matrix": {
            "h_e": [[0.0, 1.0], [1.0, 0.5]],
            "h_g": [[-0.3, 0.2], [0.2, 0.8]],
            "coupling": [[0.1, -0.2], [0.3, 0.05]],
        }
    },
    "hop": {"regime": "chaos", "steps": 500, "seed": 7,
            "probabilities": [1, 3], "centroids": [-1.0, 1.0]},
    "evolve": {"kind": "linear", "grid": {"n": 48, "min": 0.0, "max": 1.0},
               "potential": {"family": "box"},
               "initial": {"family": "gaussian", "center": 0.5, "width": 0.1},
               "dt": 5e-5, "steps": 10, "frame_every": 5},
}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(GOOD_CONFIG))
    return str(path)


def test_spectrum_writes_csv(config_path, tmp_path, capsys):
    assert cli.main(["--config", config_path, "--out", str(tmp_path), "spectrum"]) == 0
    lines = (tmp_path / "spectrum.csv").read_text().splitlines()
    assert lines[0] == "index,eigenvalue"
    assert len(lines) == 5  # header + 4 eigenvalues


def test_ep_roots_writes_realisation_table(config_path, tmp_path):
    assert cli.main(["--config", config_path, "--out", str(tmp_path), "ep-roots"]) == 0
    lines = (tmp_path / "roots.csv").read_text().splitlines()
    assert lines[0] == "branch_id,E,residual,centroid,cluster_id,N_r,alpha_num,alpha_den"
    rows = [line.split(",") for line in lines[1:]]
    assert len(rows) == 4
    # width 0 keeps each root its own realisation; fractions sum to one
    assert all(r[5] == "1" for r in rows)
    assert sum(int(r[6]) / int(r[7]) for r in rows) == pytest.approx(1.0)


def test_hop_outputs_trajectory_and_stats(config_path, tmp_path):
    assert cli.main(["--config", config_path, "--out", str(tmp_path), "hop"]) == 0
    lines = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "step,realisation,centroid"
    assert len(lines) == 501
    stats = json.loads((tmp_path / "stats.json").read_text())
    assert stats["frozen_at"] is None
    assert abs(sum(stats["frequencies"]) - 1.0) < 1e-12
    assert stats["E"] == pytest.approx(2.0 * math.pi)  # h / tau with tau = 1


def test_evolve_writes_frames(config_path, tmp_path):
    assert cli.main(["--config", config_path, "--out", str(tmp_path), "evolve"]) == 0
    lines = (tmp_path / "frames.csv").read_text().splitlines()
    assert lines[0] == "t,x,re,im,abs2"
    assert len(lines) == 1 + 3 * 48  # header + 3 frames on 48 points


def test_missing_config_flag_is_config_error(tmp_path):
    assert cli.main(["--out", str(tmp_path), "spectrum"]) == 2


def test_missing_config_file_is_config_error(tmp_path):
    assert cli.main(["--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path), "spectrum"]) == 2


def test_malformed_json_is_config_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["--config", str(bad), "--out", str(tmp_path), "spectrum"]) == 2
    assert "bad.json" in capsys.readouterr().err


def test_schema_violation_names_offending_path(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    cfg = json.loads(json.dumps(GOOD_CONFIG))
    cfg["hop"]["regime"] = "quantum"
    bad.write_text(json.dumps(cfg))
    assert cli.main(["--config", str(bad), "--out", str(tmp_path), "hop"]) == 2
    err = capsys.readouterr().err
    assert "hop/regime" in err


def test_incomplete_scan_exits_three(config_path, tmp_path):
    cfg = json.loads(json.dumps(GOOD_CONFIG))
    cfg["scan"] = {"e_min": -0.05, "e_max": 0.05}
    path = tmp_path / "narrow.json"
    path.write_text(json.dumps(cfg))
    assert cli.main(["--config", str(path), "--out", str(tmp_path), "ep-roots"]) == 3


def test_unstable_universal_step_exits_five(tmp_path):
    cfg = {
        "evolve": {
            "kind": "universal",
            "grid": {"n": 64, "min": 0.0, "max": 1.0},
            "dt": 1.0, "steps": 10,
            "pde": {"terms": [{"m": 0, "n": 2, "coeff": 1.0}]},
        }
    }
    path = tmp_path / "unstable.json"
    path.write_text(json.dumps(cfg))
    assert cli.main(["--config", str(path), "--out", str(tmp_path), "evolve"]) == 5


def test_seeded_rerun_byte_identical(config_path, tmp_path):
    for sub in ("a", "b"):
        out = tmp_path / sub
        assert cli.main(["--config", config_path, "--out", str(out),
                         "--seed", "99", "hop"]) == 0
    assert (tmp_path / "a" / "trajectory.csv").read_bytes() == \
        (tmp_path / "b" / "trajectory.csv").read_bytes()
    assert (tmp_path / "a" / "stats.json").read_bytes() == \
        (tmp_path / "b" / "stats.json").read_bytes()


def test_seed_flag_overrides_config(config_path, tmp_path):
    outs = []
    for seed in ("1", "2"):
        out = tmp_path / seed
        assert cli.main(["--config", config_path, "--out", str(out),
                         "--seed", seed, "hop"]) == 0
        outs.append((out / "trajectory.csv").read_text())
    assert outs[0] != outs[1]


def _passing_check():
    return CheckResult("stub-pass", "cli", True, 0.0, 1.0, 0.0)


def _failing_check():
    # deliberately unattainable tolerance: a fixture, not a product check
    return CheckResult("stub-fail", "cli", False, 1.0, 0.0, 0.0)


def _crashing_check():
    raise RuntimeError("boom")


def test_run_suite_continues_past_failures():
    results = verify.run_suite(
        checks=[_failing_check, _crashing_check, _passing_check])
    assert [r.passed for r in results] == [False, False, True]
    assert "boom" in results[1].detail


def test_suite_filter_selects_checks():
    names = {fn.__name__ for s, fn in verify.ALL_CHECKS if s == "hop"}
    results = verify.run_suite(suite="hop")
    assert {f"check_{r.name.replace('-', '_')}" for r in results} <= {
        fn.__name__ for s, fn in verify.ALL_CHECKS}
    assert len(results) == len(names)
    assert all(r.suite == "hop" for r in results)


def test_verify_command_reports_and_exits_zero(tmp_path, capsys, monkeypatch):
    monkeypatch.setattr(verify, "ALL_CHECKS",
                        [("cli", _passing_check), ("cli", _passing_check)])
    code = cli.main(["--out", str(tmp_path), "verify", "--suite", "cli"])
    assert code == 0
    payload = json.loads((tmp_path / "verify.json").read_text())
    assert len(payload) == 2
    assert all(entry["status"] == "pass" for entry in payload)
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 2


def test_verify_command_exit_code_on_failure(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(verify, "ALL_CHECKS",
                        [("cli", _passing_check), ("cli", _failing_check)])
    code = cli.main(["--out", str(tmp_path), "verify", "--suite", "cli"])
    assert code == 4
    out = capsys.readouterr().out
    assert "[PASS]" in out and "[FAIL]" in out
