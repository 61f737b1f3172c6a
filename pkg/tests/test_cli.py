import json
import subprocess
import sys

import pytest

from weyl_lab import cli, io
from weyl_lab.cache import CACHE_ENV


def run(tmp_path, *argv, out="out"):
    code = cli.main([*argv, "--output-dir", str(tmp_path / out), "--cache-dir", str(tmp_path / "cache")])
    return code, tmp_path / out


def manifest(path):
    return json.loads((path / "manifest.json").read_text())


def test_sphere_spectrum_outputs(tmp_path, capsys):
    code, out = run(tmp_path, "sphere-spectrum", "--n", "2", "--r", "1", "--kmax", "20000")
    assert code == 0
    fit = json.loads((out / "fit.json").read_text())
    assert fit["critical_p"] == pytest.approx(8 / 3, abs=0.1)
    cols = io.read_csv_columns(out / "spectrum.csv")
    assert len(cols["k"]) == 20001
    m = manifest(out)
    assert m["config"]["n"] == 2 and m["config"]["seed"] == 42
    assert set(m["versions"]) == {"weyl_lab", "backend", "python", "numpy", "scipy"}
    for name, digest in m["files"].items():
        assert io.file_sha256(out / name) == digest
    assert json.loads(capsys.readouterr().out)["critical_p"] == fit["critical_p"]


def test_outputs_are_deterministic(tmp_path):
    hashes = []
    for tag in ("a", "b"):
        code, out = run(tmp_path, "covariance", "--draws", "2", "--K", "6", out=tag)
        assert code == 0
        hashes.append(manifest(out)["files"])
    assert hashes[0] == hashes[1]


def test_difference_eq_writes_residual_and_stencil(tmp_path):
    code, out = run(tmp_path, "difference-eq", "--n", "1", "--resolution", "128", "--K", "8")
    assert code == 0
    res = json.loads((out / "residual.json").read_text())
    assert res["residual"] < 1e-6
    assert len(io.load_stencil(out / "stencil.json").coeffs) == 5


def test_curvature_csv(tmp_path):
    code, out = run(tmp_path, "curvature", "--surface", "sphere", "--planes", "3")
    assert code == 0
    cols = io.read_csv_columns(out / "curvature.csv")
    assert len(cols["plane"]) == 3 and cols["max_relative_error"].max() < 1e-6


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 3, "kmax": 5000, "r": 0.5}))
    code, out = run(tmp_path, "sphere-spectrum", "--config", str(cfg), "--n", "1")
    assert code == 0
    c = manifest(out)["config"]
    assert (c["n"], c["kmax"], c["r"]) == (1, 5000, 0.5)


def test_cache_env_and_no_cache(tmp_path, monkeypatch):
    monkeypatch.setenv(CACHE_ENV, str(tmp_path / "envcache"))
    out = tmp_path / "p"
    assert cli.main(["plancherel", "--K", "4", "--output-dir", str(out)]) == 0
    assert manifest(out)["config"]["cache_dir"] == str(tmp_path / "envcache")
    assert list((tmp_path / "envcache").glob("*.wlop"))
    assert cli.main(["plancherel", "--K", "4", "--output-dir", str(out)]) == 0
    assert manifest(out)["cache"]["hits"] == 1
    assert cli.main(["plancherel", "--K", "4", "--output-dir", str(out), "--no-cache"]) == 0
    assert manifest(out)["cache"] == {"enabled": False, "hits": 0, "misses": 0}


@pytest.mark.parametrize("argv,code,kind", [
    (["gram", "--n", "2"], 2, "ValidationError"),
    (["sphere-spectrum", "--r", "-1"], 2, "ValidationError"),
    (["decay", "--target", "nowhere"], 2, "ValidationError"),
    (["covariance", "--n", "3", "--K", "60"], 4, "CapacityError"),
    (["curvature", "--surface", "torus"], 2, "ValidationError"),
])
def test_error_exit_codes(tmp_path, argv, code, kind):
    got, out = run(tmp_path, *argv)
    assert got == code
    err = json.loads((out / "error.json").read_text())
    assert err["error"] == kind and err["exit_code"] == code


def test_accuracy_error_exit_code(tmp_path, monkeypatch):
    from weyl_lab.errors import AccuracyError

    def boom(*a, **k):
        raise AccuracyError("underresolved")

    monkeypatch.setattr(cli.experiments, "gram_test", boom)
    got, out = run(tmp_path, "gram")
    assert got == 3
    assert json.loads((out / "error.json").read_text())["error"] == "AccuracyError"


def test_bad_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"colour": "blue"}))
    assert run(tmp_path, "sphere-spectrum", "--config", str(cfg))[0] == 2
    cfg.write_text("{not json")
    assert run(tmp_path, "sphere-spectrum", "--config", str(cfg))[0] == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "weyl_lab.cli", "sphere-spectrum", "--kmax", "3000",
                           "--output-dir", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert (tmp_path / "manifest.json").exists()
