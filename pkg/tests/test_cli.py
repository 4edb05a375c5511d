import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from slkit.cli import run


def _cfg(tmp_path, obj, name="run.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


def _rows(path):
    return list(csv.reader(open(path)))


def test_forward_free(tmp_path):
    cfg = _cfg(tmp_path, {"command": "forward", "sigma": {"kind": "grid", "values": [0, 0]}, "N": 3})
    assert run(["--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rows = _rows(tmp_path / "o" / "forward.csv")
    assert rows[0] == ["k", "lambda", "alpha"]
    got = np.array(rows[1:], dtype=float)
    assert got[:, 1] == pytest.approx([1, 4, 9], abs=1e-9)
    assert got[:, 2] == pytest.approx([math.pi / 2] * 3, abs=1e-12)


def test_invert_constant_potential(tmp_path):
    k = np.arange(1, 7, dtype=float)
    data = {"q0": 2.0, "lambdas": (k * k + 2).tolist(), "alphas": (math.pi / 2 + math.pi / k**2).tolist()}
    cfg = _cfg(tmp_path, {"data": data, "grid": 256})
    assert run(["invert", "--config", cfg, "--out", str(tmp_path)]) == 0
    xs = np.array(_rows(tmp_path / "sigma.csv")[1:], dtype=float)
    assert np.allclose(xs[:, 1], 2 * xs[:, 0], atol=1e-12)
    assert json.loads((tmp_path / "residual.json").read_text())["pass"] is True


def test_rates_writes_csv_and_svg_and_is_idempotent(tmp_path):
    cfg = _cfg(
        tmp_path,
        {"sigma": {"kind": "smoothness_class", "theta": 1.0, "J": 128}, "theta": 1.0, "tau": [0.0], "N": [4, 8, 16]},
    )
    out = tmp_path / "r"
    assert run(["rates", "--config", cfg, "--out", str(out)]) == 0
    first = (out / "rates.csv").read_bytes(), (out / "rates.svg").read_bytes()
    assert run(["rates", "--config", cfg, "--out", str(out), "--threads", "2"]) == 0
    assert ((out / "rates.csv").read_bytes(), (out / "rates.svg").read_bytes()) == first
    assert b"<polyline" in first[1]
    header = _rows(out / "rates.csv")[0]
    assert "slope" in header and "predicted_exponent" in header


def test_other_commands(tmp_path):
    sigma = {"kind": "cosine", "coeffs": [0, 0.2, 0.1]}
    for cmd, extra, artefact in [
        ("perturb", {"N": 4, "epsilon": 1e-3, "seed": 5}, "perturbed.json"),
        ("asymptotics", {"K": 8}, "asymptotics.csv"),
        ("roundtrip", {"N": [4]}, "roundtrip.csv"),
        ("noise", {"theta": 1.0, "tau": 0.25, "epsilon": [1e-2, 1e-3], "N": 8}, "noise.csv"),
    ]:
        cfg = _cfg(tmp_path, {"sigma": sigma, **extra}, f"{cmd}.json")
        assert run([cmd, "--config", cfg, "--out", str(tmp_path / cmd)]) == 0, cmd
        assert (tmp_path / cmd / artefact).exists()
    rt = _rows(tmp_path / "roundtrip" / "roundtrip.csv")
    assert rt[1][-1] == "true"


@pytest.mark.parametrize(
    "content, argv_cmd",
    [
        ({"command": "bogus"}, None),
        ("{not json", "forward"),
        ({"sigma": {"kind": "cosine", "coeffs": [0, 1]}, "N": 0}, "forward"),
        ({"sigma": {"kind": "cosine", "coeffs": [0, 1]}, "N": 3, "tol": -1}, "forward"),
        ({"N": 3}, "forward"),
        ({"sigma_path": "missing.json", "N": 3}, "forward"),
        ({"sigma": {"kind": "cosine", "coeffs": [0, 1]}, "N": 2, "epsilon": 0.9}, "perturb"),
    ],
)
def test_input_errors_exit_2(tmp_path, content, argv_cmd, capsys):
    cfg = _cfg(tmp_path, content)
    argv = ([argv_cmd] if argv_cmd else []) + ["--config", cfg, "--out", str(tmp_path / "o")]
    assert run(argv) == 2
    assert "error" in capsys.readouterr().err


def test_missing_config_file_exit_2(tmp_path):
    assert run(["forward", "--config", str(tmp_path / "nope.json")]) == 2


def test_solver_failure_exit_3(tmp_path):
    # target eigenvalue 4 collides with the second background eigenvalue
    cfg = _cfg(tmp_path, {"data": {"q0": 0.0, "lambdas": [4.0, 9.0], "alphas": [1.0, 2.0]}})
    assert run(["invert", "--config", cfg, "--out", str(tmp_path)]) == 3


def test_module_entry_point(tmp_path):
    cfg = _cfg(tmp_path, {"sigma": {"kind": "grid", "values": [0, 0]}, "N": 1})
    r = subprocess.run(
        [sys.executable, "-m", "slkit", "forward", "--config", cfg, "--out", str(tmp_path)], capture_output=True
    )
    assert r.returncode == 0
