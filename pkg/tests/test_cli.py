import csv
import hashlib
import json
import subprocess
import sys

import pytest

from jacobi_scatter.cli import ConfigError, ExperimentConfig, main


def write(path, obj):
    path.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return path


def digest(directory):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(directory.iterdir())}


def test_scatter_free(tmp_path):
    cfg = write(tmp_path / "c.json", {"family": "free"})
    assert main(["scatter", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "resonances.json").read_text())
    for edge in ("+1", "-1"):
        assert rep["edges"][edge]["resonant"]
        assert rep["edges"][edge]["gamma"] == pytest.approx(1.0)


def test_scatter_single_site_unitarity(tmp_path):
    cfg = write(tmp_path / "c.json", {"operator": {"b": [[0, 0.5]]}})
    assert main(["scatter", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    with open(tmp_path / "scattering.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 512
    worst = max(abs(float(r[k])) for r in rows for k in ("unitarity_plus", "unitarity_minus"))
    assert worst < 1e-10


def test_scatter_tolerance_exit(tmp_path, capsys):
    cfg = write(tmp_path / "c.json", {"operator": {"b": [[0, 0.5]]}})
    assert main(["scatter", "--config", str(cfg), "--out", str(tmp_path), "--tol", "1e-30"]) == 1


@pytest.mark.parametrize(
    "content",
    ["{not json", '{"family": "free", "bogus": 1}', '{"family": "site:x"}', '{"grid": 63}', "[1, 2]"],
)
def test_config_errors_exit_two(tmp_path, capsys, content):
    cfg = write(tmp_path / "c.json", content)
    assert main(["scatter", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["scatter", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == 2


def test_config_rejects_two_operators():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"family": "free", "operator": {"b": [[0, 1.0]]}})


def test_wiener_free_tails_zero(tmp_path):
    cfg = write(tmp_path / "c.json", {"family": "free", "grids": [64, 128]})
    assert main(["wiener", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rows = json.loads((tmp_path / "membership.json").read_text())
    assert rows and all(r["tail_fraction"] == 0.0 for r in rows)


def test_wiener_single_site_summable(tmp_path):
    cfg = write(tmp_path / "c.json", {"family": "site:0.5", "l_max": 2})
    assert main(["wiener", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rows = json.loads((tmp_path / "membership.json").read_text())
    assert {r["M"] for r in rows} == {256, 512, 1024}
    assert all(r["verdict"] == "summable" for r in rows)


def test_wiener_beyond_moment_order(tmp_path):
    cfg = write(tmp_path / "c.json", {"family": "site:0.5", "l_max": 3, "moment_order": 1, "grids": [128, 256]})
    assert main(["wiener", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rows = json.loads((tmp_path / "membership.json").read_text())
    assert all(r["verdict"] == "inconclusive" for r in rows if r["l"] > 1)


def test_evolve_outputs_and_agreement(tmp_path):
    cfg = write(tmp_path / "c.json", {"family": "free", "spot_check": True, "plot": True})
    out = tmp_path / "o"
    argv = ["evolve", "--config", str(cfg), "--out", str(out), "--tmin", "20", "--tmax", "60", "--tpoints", "6"]
    assert main(argv) == 0
    assert {p.name for p in out.iterdir()} == {"decay.csv", "fit.json", "decay.gp", "agreement.csv"}
    fit = json.loads((out / "fit.json").read_text())
    assert fit["exponent"] == pytest.approx(-1 / 3, abs=0.05)
    with open(out / "agreement.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and all(float(r["max_abs_difference"]) < 1e-6 for r in rows)
    with open(out / "decay.csv") as fh:
        assert next(csv.reader(fh)) == ["t", "norm", "norm_after_subtraction"]


def test_evolve_subtract_leading(tmp_path):
    cfg = write(tmp_path / "c.json", {"family": "free"})
    argv = ["evolve", "--config", str(cfg), "--out", str(tmp_path), "--norm", "wsup2", "--subtract-leading"]
    assert main(argv) == 0
    fit = json.loads((tmp_path / "fit.json").read_text())
    assert fit["exponent"] <= -4 / 3 + 0.1


def test_projectors_and_vdc(tmp_path):
    cfg = write(tmp_path / "c.json", {"family": "tuned"})
    assert main(["projectors", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "projectors.json").read_text())
    assert main(["vdc", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "vdc.json").read_text())
    assert rep["C2"]["bounded"] and rep["C3"]["bounded"]


def test_deterministic_outputs(tmp_path):
    cfg = write(tmp_path / "c.json", {"random": {"seed": 7}, "grids": [128, 256]})
    for name in ("a", "b"):
        for cmd in ("scatter", "wiener"):
            main([cmd, "--config", str(cfg), "--out", str(tmp_path / name)])
    assert digest(tmp_path / "a") == digest(tmp_path / "b")


def test_module_entry_point(tmp_path):
    r = subprocess.run(
        [sys.executable, "-m", "jacobi_scatter", "scatter", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert r.returncode == 0 and "unitarity" in r.stdout
