import json
import subprocess
import sys

import pytest

from fpplab.cli import main

TWO_POINT_TOML = """\
[distribution]
atoms = [[1, 0.5], [2, 0.5]]
"""

POINT_MASS_TOML = """\
[distribution]
atoms = [[1, 1.0]]
"""


@pytest.fixture
def spec_file(tmp_path):
    p = tmp_path / "two-point.toml"
    p.write_text(TWO_POINT_TOML)
    return p


def test_geodesic_command_writes_csv(spec_file, tmp_path, capsys):
    out = tmp_path / "out"
    rc = main(["geodesic", "--spec", str(spec_file), "--target", "10,10",
               "--seed", "7", "--out", str(out), "--path-csv", "--dump-weights"])
    assert rc == 0
    text = (out / "geodesic.csv").read_text()
    assert text.startswith("# fpplab")
    header = text.splitlines()[1].split(",")
    for col in ("t", "t_dir", "hops"):
        assert col in header
    assert (out / "geodesic_path.csv").exists()
    dump = (out / "weights.csv").read_text().splitlines()
    assert dump[1].split(",") == ["slot", "tail", "head", "value"]
    assert len(dump) > 100


def test_geodesic_command_byte_identical_reruns(spec_file, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["geodesic", "--spec", str(spec_file), "--target", "10,10",
                 "--seed", "7", "--out", str(out1)]) == 0
    assert main(["geodesic", "--spec", str(spec_file), "--target", "10,10",
                 "--seed", "7", "--out", str(out2)]) == 0
    assert (out1 / "geodesic.csv").read_bytes() == (out2 / "geodesic.csv").read_bytes()


def test_geodesic_negative_target_usage_error(spec_file, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["geodesic", "--spec", str(spec_file), "--target", "-1,0",
              "--out", str(tmp_path / "o")])
    assert exc.value.code == 2


def test_trials_zero_usage_error(spec_file, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["gap", "--spec", str(spec_file), "--trials", "0", "--out", str(tmp_path / "o")])
    assert exc.value.code == 2


def test_directed_command(spec_file, tmp_path):
    out = tmp_path / "out"
    rc = main(["directed", "--spec", str(spec_file), "--target", "5,3",
               "--seed", "1", "--out", str(out)])
    assert rc == 0
    assert (out / "directed.csv").exists()
    with pytest.raises(SystemExit) as exc:
        main(["directed", "--spec", str(spec_file), "--target", "-2,1", "--out", str(out)])
    assert exc.value.code == 2


def test_verify_command_passes_on_two_point(spec_file, tmp_path, capsys):
    rc = main(["verify", "--spec", str(spec_file), "--trials", "4",
               "--target", "6,6", "--out", str(tmp_path / "o"), "--seed", "2"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "all hard assertions passed" in out


def test_verify_command_reports_zero_delta_for_short_window(spec_file, tmp_path, capsys):
    rc = main(["verify", "--spec", str(spec_file), "--trials", "2", "--target", "4,4",
               "--out", str(tmp_path / "o"), "--pattern-ell", "1"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "max_safe_delta = 0" in out


def test_gap_command_outputs_and_reproducibility(spec_file, tmp_path):
    args = ["gap", "--spec", str(spec_file), "--direction", "1,1", "--n-list", "6",
            "--delta-list", "1/2", "--trials", "5", "--seed", "3"]
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    for name in ("gap_summary.csv", "gap_trials.jsonl"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    lines = (out1 / "gap_trials.jsonl").read_text().splitlines()
    head = json.loads(lines[0])
    assert head["record"] == "header" and "config_hash" in head
    assert json.loads(lines[1])["record"] == "summary"
    rec = json.loads(lines[2])
    assert rec["trial_id"] == 0 and rec["chain_verified"] is True


def test_tail_command(spec_file, tmp_path):
    out = tmp_path / "out"
    rc = main(["tail", "--spec", str(spec_file), "--direction", "1,1", "--norms", "8,16",
               "--tail-delta", "0.05", "--trials", "6", "--seed", "4", "--out", str(out)])
    assert rc == 0
    csv_text = (out / "tail_summary.csv").read_text()
    assert "freq" in csv_text.splitlines()[1]


def test_constants_command(spec_file, tmp_path):
    out = tmp_path / "out"
    rc = main(["constants", "--spec", str(spec_file), "--direction", "1,0",
               "--n-list", "4,8", "--trials", "5", "--seed", "5", "--out", str(out)])
    assert rc == 0
    assert (out / "constants_summary.csv").exists()


def test_point_mass_control_via_cli(tmp_path):
    spec = tmp_path / "pm.toml"
    spec.write_text(POINT_MASS_TOML)
    out = tmp_path / "out"
    rc = main(["gap", "--spec", str(spec), "--direction", "1,1", "--n-list", "5",
               "--delta-list", "1/2", "--trials", "4", "--seed", "0", "--out", str(out)])
    assert rc == 0
    summary = (out / "gap_summary.csv").read_text().splitlines()
    header = summary[1].split(",")
    row = summary[2].split(",")
    assert float(row[header.index("gap_hat")]) == 0.0


def test_console_script_entry_point(spec_file, tmp_path):
    proc = subprocess.run([sys.executable, "-m", "fpplab.cli", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "fpplab" in proc.stdout


def test_three_dimensional_run_needs_supplied_constants(tmp_path):
    # beyond d=2 there are no built-in critical probabilities
    bare = tmp_path / "bare.toml"
    bare.write_text(TWO_POINT_TOML)
    with pytest.raises(SystemExit) as exc:
        main(["gap", "--spec", str(bare), "--direction", "1,1,1", "--n-list", "3",
              "--delta-list", "1/2", "--trials", "2", "--seed", "0",
              "--out", str(tmp_path / "o1")])
    assert exc.value.code == 2

    with_constants = tmp_path / "d3.toml"
    with_constants.write_text(TWO_POINT_TOML + "\n[constants]\np_c = 0.2488\n"
                              "p_c_directed = 0.3822\nprovenance = \"user supplied\"\n")
    rc = main(["gap", "--spec", str(with_constants), "--direction", "1,1,1", "--n-list", "3",
               "--delta-list", "1/2", "--trials", "2", "--seed", "0",
               "--out", str(tmp_path / "o2")])
    assert rc == 0
    assert (tmp_path / "o2" / "gap_summary.csv").exists()


def test_missing_distribution_table(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[nope]\nx = 1\n")
    with pytest.raises(SystemExit) as exc:
        main(["geodesic", "--spec", str(bad), "--target", "2,2", "--out", str(tmp_path / "o")])
    assert exc.value.code == 2
