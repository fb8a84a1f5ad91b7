import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from quasispec import eigenvalues, same_expression
from quasispec.cli import ConfigError, load_config, main, parse_config, problem_to_config

PI = math.pi
GAUGE_NU = {"breakpoints": [0, 1, 2, PI], "pieces": [[0], [4, -12, 13, -6, 1], [0]]}


def write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(data if isinstance(data, str) else json.dumps(data))
    return str(path)


def rows_of(text):
    return list(csv.reader(io.StringIO(text)))


@pytest.fixture
def free_cfg(tmp_path):
    return write(tmp_path, "free.json", {"interval": [0, PI], "boundary": {"a": "dirichlet", "b": 0}})


def test_eig_free_window(free_cfg, capsys):
    assert main(["eig", free_cfg, "--window", "0", "110"]) == 0
    rows = rows_of(capsys.readouterr().out)
    assert rows[0] == ["index", "eigenvalue", "norming"]
    values = np.array([float(r[1]) for r in rows[1:]])
    assert len(values) == 10
    assert np.max(np.abs(values - np.arange(1, 11) ** 2)) < 1e-8


def test_output_is_byte_identical(free_cfg, tmp_path):
    outs = []
    for name in ("one.csv", "two.csv"):
        out = str(tmp_path / name)
        assert main(["measure", free_cfg, "--window", "0", "50", "--out", out]) == 0
        outs.append(open(out, "rb").read())
    assert outs[0] == outs[1]
    first = outs[0].decode().splitlines()[1]
    assert first.split(",")[0] == "%.16e" % float(first.split(",")[0])


def test_mfun_and_debranges(free_cfg, capsys):
    assert main(["mfun", free_cfg, "--z", "-1", "0"]) == 0
    row = rows_of(capsys.readouterr().out)[1]
    assert float(row[2]) == pytest.approx(-1 / math.tanh(PI), rel=1e-9)
    assert main(["debranges", free_cfg, "--cpt", "1.0", "--z", "0", "0"]) == 0
    row = rows_of(capsys.readouterr().out)[1]
    assert float(row[2]) == pytest.approx(1.0, abs=1e-12) and float(row[3]) == pytest.approx(1.0)


def test_three_spectra_exit_codes(free_cfg, capsys):
    assert main(["verify", "three-spectra", free_cfg, "--cpt", "1.0"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["status"] == "PASS" and report["n_defect"] < 1e-8 and report["disjoint"]
    assert main(["verify", "three-spectra", free_cfg, "--cpt", str(PI / 2), "--random-z", "3", "--seed", "5"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert not report["disjoint"] and len(report["z_samples"]) == 6


def test_random_samples_follow_seed(free_cfg, capsys):
    outs = []
    for _ in range(2):
        main(["verify", "three-spectra", free_cfg, "--cpt", "1.0", "--random-z", "2", "--seed", "11"])
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]


@pytest.mark.parametrize(
    "content",
    [
        {"interval": [0, 1], "coefficients": {"r": -1}},
        {"interval": [0, 1], "bogus": 1},
        {"interval": [0, 1], "boundary": {"c": 0}},
        '{"interval": [0,1],\n "window": [0 1]}',
    ],
)
def test_bad_input_exits_with_two(tmp_path, content, capsys):
    assert main(["eig", write(tmp_path, "bad.json", content)]) == 2
    assert "error:" in capsys.readouterr().err


def test_json_error_names_line(tmp_path):
    with pytest.raises(ConfigError, match="line 2"):
        load_config(write(tmp_path, "bad.json", '{"interval": [0,1],\n "window": [0 1]}'))


def test_missing_arguments_exit_two(free_cfg, tmp_path):
    assert main(["mfun", free_cfg]) == 2
    assert main(["debranges", free_cfg, "--z", "1", "1"]) == 2
    assert main(["eig", str(tmp_path / "absent.json")]) == 2
    assert main(["nope"]) == 2


def test_transform_round_trip(tmp_path, capsys):
    path = write(tmp_path, "gauge.json", {"preset": "step_s", "window": [0, 60], "transform": {"kind": "gauge", "nu": GAUGE_NU}})
    assert main(["transform", path]) == 0
    emitted = json.loads(capsys.readouterr().out)
    cfg = load_config(path)
    reloaded = parse_config(emitted)
    assert same_expression(cfg.problem, reloaded.problem)
    lam1 = eigenvalues(cfg.problem, window=(0, 60)).eigenvalues
    lam2 = eigenvalues(reloaded.problem, reloaded.phi_a, reloaded.phi_b, window=(0, 60)).eigenvalues
    assert np.max(np.abs(lam1 - lam2)) < 2e-7


def test_two_spectra_pass_and_fail(tmp_path, capsys):
    ok = write(tmp_path, "ok.json", {"preset": "step_s", "window": [0, 60], "transform": {"kind": "gauge", "nu": GAUGE_NU}})
    assert main(["verify", "two-spectra", ok]) == 0
    assert json.loads(capsys.readouterr().out)["status"] == "PASS"
    bad = write(
        tmp_path,
        "bad.json",
        {
            "preset": "free",
            "window": [0, 60],
            "second": {"interval": [0, PI], "window": [0, 60], "coefficients": {"q": {"breakpoints": [0, 0.1, PI], "pieces": [[1], [0]]}}},
        },
    )
    assert main(["verify", "two-spectra", bad]) == 1
    assert json.loads(capsys.readouterr().out)["status"] == "FAIL"


def test_bm_command(tmp_path, capsys):
    second = {"interval": [0, PI], "coefficients": {"q": {"breakpoints": [0, PI / 2, PI], "pieces": [[0], [1]]}}}
    path = write(tmp_path, "bm.json", {"preset": "free", "cpt": PI / 2, "second": second})
    assert main(["verify", "bm", path]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["status"] == "PASS" and report["method"] == "riccati"
    second["coefficients"]["q"] = {"breakpoints": [0, PI / 4, PI], "pieces": [[1], [0]]}
    path = write(tmp_path, "bm2.json", {"preset": "free", "cpt": PI / 2, "second": second})
    assert main(["verify", "bm", path]) == 1


@pytest.mark.parametrize("quantity", ["phi", "m", "green", "b6"])
def test_asym_command(tmp_path, quantity, capsys):
    path = write(tmp_path, "a.json", {"preset": "step_s", "grid": [100, 1000], "x": 2.0})
    assert main(["asym", path, "--quantity", quantity, "--ray", str(2 * PI / 3)]) == 0
    rows = rows_of(capsys.readouterr().out)
    assert rows[0][0] == "quantity"
    assert len(rows) == 1 + (4 if quantity == "b6" else 2)


def test_output_key_in_config(tmp_path):
    out = tmp_path / "eig.csv"
    path = write(tmp_path, "c.json", {"preset": "free", "window": [0, 30], "output": str(out)})
    assert main(["eig", path]) == 0
    assert len(out.read_text().splitlines()) == 6


def test_problem_to_config_round_trip(step_s):
    cfg = parse_config(json.loads(json.dumps(problem_to_config(step_s, 0.3, 1.1))))
    assert cfg.phi_a == 0.3 and cfg.phi_b == 1.1
    x = np.linspace(0, PI, 50)
    assert np.array_equal(cfg.problem.s(x), step_s.s(x))


def test_console_entry_point(free_cfg):
    proc = subprocess.run(
        [sys.executable, "-m", "quasispec.cli", "eig", free_cfg, "--window", "0", "20"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert len(proc.stdout.splitlines()) == 5
