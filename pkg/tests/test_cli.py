import csv
import json
import subprocess
import sys

import pytest

from bolax import __version__
from bolax.cli import main, resolve_config
from bolax.errors import ConfigInvalid


def _run(tmp_path, command, cfg=None, name="out", extra=()):
    out = tmp_path / name
    argv = [command, "--out", str(out), *extra]
    if cfg is not None:
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(cfg))
        argv += ["--config", str(path)]
    code = main(argv)
    manifest = json.loads((out / "manifest.json").read_text())
    return code, out, manifest


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_spectrum_128_rows(tmp_path):
    code, out, man = _run(tmp_path, "spectrum", {"potential": "cosine", "eps": [0.5], "M": 128})
    assert code == 0 and man["status"] == "ok"
    rows = _rows(out / "spectrum.csv")
    assert len(rows) == 128
    lams = [float(r["lambda"]) for r in rows]
    assert all(a < b for a, b in zip(lams, lams[1:]))
    assert man["version"] == __version__ and man["config"]["M"] == 128
    assert set(man["files"]) == {"spectrum.csv", "spectrum_summary.json"}


def test_auto_truncation_recorded(tmp_path):
    code, _, man = _run(tmp_path, "spectrum", {"eps": [0.5, 0.25]})
    assert code == 0 and set(man["truncation"]) == {"0.5", "0.25"}


def test_landscape_six_leaves(tmp_path):
    code, out, _ = _run(tmp_path, "landscape", {"potential": "fig-level0", "lam": 0.0})
    assert code == 0
    doc = json.loads((out / "tree.json").read_text())
    assert len(doc["tree"]["leaves"]) == 6
    assert len(doc["pruning"]["pairs"]) == 5
    with open(out / "level_grid.csv") as fh:
        assert fh.readline().strip() == "r,theta,re_S"


def test_byte_identical_rerun(tmp_path):
    cfg = {"potential": [1.0, 0.15], "eps": [0.5], "times": [0.0, 0.2], "k": [1, 2, 3]}
    for cmd in ("spectrum", "burgers", "evolve"):
        _, a, ma = _run(tmp_path, cmd, cfg, name=f"{cmd}_a")
        _, b, mb = _run(tmp_path, cmd, cfg, name=f"{cmd}_b", extra=("--threads", "0"))
        assert ma["files"] == mb["files"]
        for f in ma["files"]:
            assert (a / f).read_bytes() == (b / f).read_bytes()


def test_evolve_outputs(tmp_path):
    code, out, _ = _run(tmp_path, "evolve", {"eps": [0.5], "times": [0.0, 0.3], "k": [1, 2, 3, 4, 5, 6, 7, 8],
                                             "reference": True})
    assert code == 0
    rows = _rows(out / "evolve.csv")
    assert {r["method"] for r in rows} == {"explicit_formula", "reference_integrator"}
    first = [r for r in rows if r["t"] == "0.0" and r["k"] == "1" and r["method"] == "explicit_formula"]
    assert float(first[0]["re"]) == -1.0


def test_unknown_key_exit_2(tmp_path, capsys):
    code, _, man = _run(tmp_path, "spectrum", {"eps": [0.5], "colour": "red"})
    assert code == 2 and man["status"] == "config_error"
    assert "colour" in capsys.readouterr().err


@pytest.mark.parametrize("raw", [{"eps": [-1.0]}, {"eps": "x"}, {"M": 1}, {"potential": "nope"},
                                 {"lam_ranges": [[1.0, 0.0]]}, {"reference": 1}, {"checks": [16]}, []])
def test_config_validation(raw):
    with pytest.raises(ConfigInvalid):
        resolve_config("spectrum", raw)


def test_preset_flag_overrides(tmp_path):
    code, _, man = _run(tmp_path, "spectrum", {"eps": [0.5], "M": 64}, extra=("--preset", "fig-level0"))
    assert code == 0 and man["config"]["potential"] == "fig-level0"


def test_compute_error_exit_1(tmp_path):
    # M = 8 cannot hold a degree-6 potential
    code, _, man = _run(tmp_path, "spectrum", {"potential": "fig-level0", "eps": [0.5], "M": 8})
    assert code == 1 and man["status"] == "error"
    assert man["error"]["type"] == "TruncationTooSmall"


def test_report_subset(tmp_path, capsys):
    code, out, man = _run(tmp_path, "report", {"checks": [1, 2, 15]})
    assert code == 0 and man["all_passed"]
    doc = json.loads((out / "acceptance.json").read_text())
    assert [c["id"] for c in doc["criteria"]] == [1, 2, 15]
    assert doc["passed"] == doc["total"] == 3
    assert "[PASS]" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "bolax", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and __version__ in res.stdout
    res = subprocess.run([sys.executable, "-m", "bolax", "spectrum", "--out", str(tmp_path), "--threads", "-1"],
                         capture_output=True, text=True)
    assert res.returncode == 2
