"""The fifteen acceptance criteria, each at its stated tolerance.

Every criterion prints one pass/fail line; the lines are repeated in a
summary section at the end of the pytest run.
"""

import json

import pytest

from bolax.acceptance import CHECKS, CheckResult
from bolax.cli import main


def _report(result: CheckResult, log):
    line = result.line()
    print(line)
    log(line)
    assert result.passed, json.dumps(result.to_json()["details"], indent=2)


@pytest.mark.parametrize("cid", sorted(CHECKS), ids=lambda i: f"criterion_{i:02d}")
def test_criterion(cid, acceptance_log):
    _report(CHECKS[cid](), acceptance_log)


def test_criterion_15_determinism(tmp_path, acceptance_log):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"checks": list(range(1, 15))}))
    outs = []
    for name in ("first", "second"):
        out = tmp_path / name
        assert main(["report", "--config", str(cfg), "--out", str(out)]) in (0, 1)
        outs.append({f: (out / f).read_bytes() for f in ("acceptance.json", "manifest.json")})
    same = outs[0] == outs[1]
    _report(CheckResult(15, "determinism", same, {"files": sorted(outs[0])}), acceptance_log)
