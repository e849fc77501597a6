import json
import math
import subprocess
import sys

import pytest

from fedldpc.cli import main
from fedldpc.scheduler import CalibrationTable

SMALL = """
seed = 3
mode = "{mode}"
[code]
n = 96
seed = 1
[channel]
snr_db = 2.0
[calibration]
snr_points = [2.0]
q_points = [2, 6, 20]
min_error_bits = 50
min_frames = 0
max_frames = 2000
[fl]
clients = 3
rounds = 6
[dataset]
per_class = 200
"""


def write(tmp_path, text, name="exp.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_missing_config_flag_is_usage_error():
    proc = subprocess.run([sys.executable, "-m", "fedldpc.cli", "train"], capture_output=True,
                          text=True)
    assert proc.returncode == 2
    assert "usage:" in proc.stderr


def test_missing_config_file(tmp_path, capsys):
    assert main(["calibrate", "--config", str(tmp_path / "none.toml")]) == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("error: module=config")


def test_schema_errors_exit_2(tmp_path, capsys):
    path = write(tmp_path, "[fl]\nclients = 0\nwho = 1\n")
    assert main(["train", "--config", path]) == 2
    err = capsys.readouterr().err
    assert "fl.clients" in err and "fl.who" in err


def test_calibrate_is_byte_identical_across_threads(tmp_path):
    path = write(tmp_path, SMALL.format(mode="statistical"))
    assert main(["calibrate", "--config", path, "--out", str(tmp_path / "a")]) == 0
    assert main(["calibrate", "--config", path, "--threads", "3", "--out", str(tmp_path / "b")]) == 0
    a, b = files(tmp_path / "a"), files(tmp_path / "b")
    assert a == b
    assert {"calibration.csv", "calibration.sha256", "config.resolved.json",
            "calibration_summary.txt"} <= set(a)
    table = CalibrationTable.load(tmp_path / "a" / "calibration.csv")
    assert [e.q for e in table.row(2.0)] == [2, 6, 20]


@pytest.mark.parametrize("mode", ["statistical", "physical", "error_free"])
def test_train_outputs(tmp_path, mode):
    path = write(tmp_path, SMALL.format(mode=mode))
    out = tmp_path / "run"
    assert main(["train", "--config", path, "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    for key in ("final_accuracy", "total_energy_j", "total_iterations", "saturated_rounds",
                "client_average_accuracy", "calibration_sha256"):
        assert key in summary
    rows = (out / "rounds.csv").read_text().splitlines()
    assert rows[0] == "round,target_ber,q_r,measured_ber,mean_iters,energy_j,train_loss,test_acc"
    assert len(rows) == 7
    if mode == "error_free":
        assert summary["calibration_sha256"] is None
    else:
        assert len(summary["calibration_sha256"]) == 64


def test_seed_and_mode_overrides(tmp_path):
    path = write(tmp_path, SMALL.format(mode="statistical"))
    main(["train", "--config", path, "--out", str(tmp_path / "a"), "--mode", "error_free"])
    main(["train", "--config", path, "--out", str(tmp_path / "b"), "--mode", "error_free",
          "--seed", "4"])
    snap = json.loads((tmp_path / "a" / "config.resolved.json").read_text())
    assert snap["mode"] == "error_free" and snap["seed"] == 3
    assert files(tmp_path / "a")["rounds.csv"] != files(tmp_path / "b")["rounds.csv"]


def test_train_with_saved_table(tmp_path):
    path = write(tmp_path, SMALL.format(mode="physical"))
    main(["calibrate", "--config", path, "--out", str(tmp_path / "cal")])
    table_path = tmp_path / "cal" / "calibration.csv"
    cfg = SMALL.format(mode="physical").replace(
        "[calibration]", f'[calibration]\ntable = "{table_path}"')
    path2 = write(tmp_path, cfg, "exp2.toml")
    for t in ("1", "2"):
        assert main(["train", "--config", path2, "--threads", t, "--out", str(tmp_path / t)]) == 0
    assert files(tmp_path / "1") == files(tmp_path / "2")


def test_table_for_another_code_is_rejected(tmp_path, capsys):
    path = write(tmp_path, SMALL.format(mode="physical"))
    main(["calibrate", "--config", path, "--out", str(tmp_path / "cal")])
    cfg = SMALL.format(mode="physical").replace("seed = 1", "seed = 5").replace(
        "[calibration]", f'[calibration]\ntable = "{tmp_path / "cal" / "calibration.csv"}"')
    assert main(["train", "--config", write(tmp_path, cfg, "x.toml")]) == 2
    assert "module=calibration" in capsys.readouterr().err


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_runtime_failure_names_round_and_client(tmp_path, capsys):
    cfg = SMALL.format(mode="error_free") + "[model]\nkind = \"mlp_one_hidden\"\nhidden_dim = 3\n"
    cfg = cfg.replace("rounds = 6", "rounds = 6\neta = 1e308")
    assert main(["train", "--config", write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err.strip()
    assert err.startswith("error: module=") and "round=" in err and "\n" not in err


def test_bound_report(tmp_path, capsys):
    cfg = "[fl]\nrounds = 100\nlocal_steps = 5\n[bound]\nL = 1.0\nf0_minus_fstar = 1.0\n"
    cfg += '[schedule]\nkind = "fixed_ber"\nber = 0.0\n'
    assert main(["bound", "--config", write(tmp_path, cfg), "--out", str(tmp_path / "b")]) == 0
    report = json.loads((tmp_path / "b" / "bound.json").read_text())
    assert report["total"] == pytest.approx(2 / math.sqrt(500), rel=1e-12)
    assert set(report["terms"]) == {"initial_gap", "bit_errors", "gradient_variance", "local_drift"}


def test_validate(capsys):
    assert main(["validate", "energy"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "4/4 checks passed" in out


def test_unknown_suite_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["validate", "lemma7"])
    assert exc.value.code == 2
