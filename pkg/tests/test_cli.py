import json
import math
import os

import pytest

from qpdrive.cli import build_parser, config_from_args, main
from qpdrive.config import ConfigError, build_config, parse_angle, resolve_threads


def run_cli(*args):
    return main(["run", *args])


def read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def test_parse_angle():
    assert parse_angle("0.95pi") == pytest.approx(0.95 * math.pi)
    assert parse_angle("pi") == pytest.approx(math.pi)
    assert parse_angle("-0.5*pi") == pytest.approx(-0.5 * math.pi)
    assert parse_angle(1.25) == 1.25
    assert parse_angle("2.5") == 2.5
    for bad in ("abc", "1/2pi", True, None):
        with pytest.raises(ConfigError):
            parse_angle(bad)


def test_threads_env(monkeypatch):
    monkeypatch.setenv("QPDRIVE_THREADS", "3")
    assert resolve_threads() == 3
    assert resolve_threads("auto") >= 1
    with pytest.raises(ConfigError):
        resolve_threads("0")


def test_schema_errors_name_the_field():
    cases = [
        ({"experiment": "nope"}, "experiment"),
        ({"experiment": "compile", "drive": {"L": 3}}, "drive.L"),
        ({"experiment": "compile", "drive": {"n_qubits": 13}}, "drive.n_qubits"),
        ({"experiment": "flux-echo", "drive": {"boundary": "OBC"}}, "drive.boundary"),
        ({"experiment": "fspt-correlators", "protocol": {"n_shots": 0}}, "protocol.n_shots"),
        ({"experiment": "fspt-correlators", "noise": {"p_2q": 2}}, "noise"),
        ({"experiment": "heating-sweep", "sweep": {"J": []}}, "sweep.J"),
        ({"experiment": "heating-sweep", "sweep": {"seeds": [1, 1]}}, "sweep.seeds"),
        ({"experiment": "compile", "params": {"entangler": "iswap"}}, "params.entangler"),
        ({"experiment": "compile", "params": {"entangler": "ms", "strict": True}}, "params.strict"),
        ({"experiment": "magnus-verify", "params": {"t_max": 3}}, "params.t_max"),
    ]
    for raw, field in cases:
        with pytest.raises(ConfigError) as info:
            build_config(raw)
        assert info.value.field == field


def test_flags_override_file(tmp_path):
    cfg_file = tmp_path / "c.json"
    cfg_file.write_text(json.dumps({"experiment": "fspt-correlators", "drive": {"J": "0.8pi", "n_qubits": 6},
                                    "protocol": {"n_shots": 40}, "master_seed": 5}))
    a = build_parser().parse_args(["run", "--config", str(cfg_file), "--J", "0.7pi", "--shots", "10"])
    cfg = config_from_args(a)
    assert cfg.drive.J == pytest.approx(0.7 * math.pi)
    assert cfg.drive.n_qubits == 6 and cfg.protocol.n_shots == 10 and cfg.master_seed == 5


def test_edspt_run_writes_outputs(tmp_path):
    out = tmp_path / "run"
    assert run_cli("--experiment", "edspt-correlators", "--J", "0.95pi", "--L", "6", "--shots", "20",
                   "--seed", "7", "--out-dir", str(out)) == 0
    names = set(os.listdir(out))
    assert {"correlators.csv", "summary.json", "config.json", "manifest.json"} <= names
    lines = read(out / "correlators.csv").splitlines()
    assert lines[0] == "model,J,seed,site,axis,t_label,n_label,value,stderr"
    # 6 sites + bulk average, 9 checkpoints
    assert len(lines) == 1 + 7 * 9
    assert any(",55,9," in line for line in lines)
    manifest = json.loads(read(out / "manifest.json"))
    assert manifest["schema_version"] == 1 and len(manifest["config_hash"]) == 64
    resolved = json.loads(read(out / "config.json"))
    assert resolved["drive"]["J"] == pytest.approx(0.95 * math.pi) and resolved["master_seed"] == 7


def test_magnus_verify_report(tmp_path):
    out = tmp_path / "m"
    assert run_cli("--experiment", "magnus-verify", "--out-dir", str(out)) == 0
    rep = json.loads(read(out / "magnus.json"))
    assert rep["algebra"]["eigenvalue_error"] < 1e-10
    assert abs(rep["numeric"]["slope"] - 3) < 0.3


def test_empty_sweep_writes_nothing(tmp_path):
    out = tmp_path / "empty"
    assert run_cli("--experiment", "heating-sweep", "--J", "", "--out-dir", str(out)) == 2
    assert not out.exists()


def test_output_collision(tmp_path):
    out = tmp_path / "c"
    args = ("--experiment", "compile", "--L", "4", "--out-dir", str(out))
    assert run_cli(*args) == 0
    first = read(out / "circuit.txt")
    assert run_cli(*args) == 2
    assert run_cli(*args, "--force") == 0
    assert read(out / "circuit.txt") == first


def test_serial_and_threaded_runs_agree(tmp_path):
    common = ("--experiment", "fspt-correlators", "--L", "6", "--shots", "100", "--t-max", "12",
              "--realizations", "2", "--p2q", "8e-3", "--drift-rms", "0.5", "--seed", "11")
    assert run_cli(*common, "--threads", "1", "--out-dir", str(tmp_path / "a")) == 0
    assert run_cli(*common, "--threads", "8", "--out-dir", str(tmp_path / "b")) == 0
    assert read(tmp_path / "a" / "correlators.csv") == read(tmp_path / "b" / "correlators.csv")
    ma = json.loads(read(tmp_path / "a" / "manifest.json"))
    mb = json.loads(read(tmp_path / "b" / "manifest.json"))
    assert ma["config_hash"] == mb["config_hash"]


TINY = {
    "fspt-correlators": ["--L", "3", "--shots", "3", "--t-max", "2"],
    "edspt-correlators": ["--L", "3", "--shots", "3", "--n-max", "3"],
    "flux-echo": ["--L", "3", "--t-max", "2", "--realizations", "2"],
    "magnus-verify": ["--L", "2", "--n-max", "3"],
    "heating-sweep": ["--L", "3", "--n-max", "4", "--realizations", "2"],
    "compile": ["--L", "3"],
}
VARIANTS = [
    [], ["--model", "FSPT"], ["--model", "EDSPT"], ["--model", "EDSPT_UNIAXIAL"],
    ["--boundary", "OBC"], ["--boundary", "PBC"], ["--init-scheme", "all_z"], ["--init-scheme", "all_x"],
    ["--projective"], ["--method", "ancilla", "--shots", "2"], ["--entangler", "ms"], ["--strict"],
    ["--common-mode", "--drift-rms", "0.3"], ["--p1q", "0.1", "--p2q", "0.2"], ["--no-verify"],
]


@pytest.mark.parametrize("experiment", list(TINY))
def test_config_space_fuzz(experiment, tmp_path, capsys):
    for k, extra in enumerate(VARIANTS):
        code = run_cli("--experiment", experiment, *TINY[experiment], *extra, "--out-dir", str(tmp_path / str(k)))
        err = capsys.readouterr().err
        # either a clean run or a diagnosed rejection, never a traceback
        assert code in (0, 2), (extra, err)
        if code == 2:
            assert "invalid config" in err
            assert not (tmp_path / str(k)).exists()
