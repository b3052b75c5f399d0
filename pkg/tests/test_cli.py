import json
import os
import subprocess
import sys

import numpy as np
import pytest

from cli_harness import FIXTURES, GOLDEN, invoke, output_schema, resolve, validator
from higgstorus import parse
from higgstorus.cli import main, run
from higgstorus.yang_mills import parse_metric


def case_id(case):
    return " ".join(a.replace(".higgs.json", "").replace(".json", "") for a in case["args"])


@pytest.mark.parametrize("case", GOLDEN, ids=case_id)
def test_golden_exit_codes(case, tmp_path):
    outcome, data = invoke(case["args"], tmp_path / "report.json")
    assert outcome.exit_code == case["exit"], outcome.summary
    if "summary" in case:
        assert outcome.summary == case["summary"]
    if "summary_contains" in case:
        assert case["summary_contains"] in outcome.summary
    if not data:
        # argparse rejected the command line before a report could be built.
        assert outcome.exit_code == 2
        return
    report = json.loads(data)
    validator(output_schema(case["args"], report)).validate(report)


@pytest.mark.parametrize("case", [c for c in GOLDEN if c["args"][0] != "frobnicate"], ids=case_id)
def test_reports_are_byte_identical(case, tmp_path):
    _, first = invoke(case["args"], tmp_path / "a.json")
    _, second = invoke(case["args"], tmp_path / "b.json")
    assert first == second
    assert first.count(str(tmp_path).encode()) == 0


def test_gen_writes_truth_and_respects_seed(tmp_path, monkeypatch):
    paths = []
    for k in range(2):
        out, truth = tmp_path / f"d{k}.json", tmp_path / f"t{k}.json"
        assert main(["gen", "planted", "--dim", "2", "--sizes", "3,2", "--seed", "5", "-o", str(out),
                     "--truth-out", str(truth)]) == 0
        paths.append((out.read_bytes(), truth.read_bytes()))
    assert paths[0] == paths[1]
    validator("truth").validate(json.loads(paths[0][1]))
    parse(paths[0][0])

    monkeypatch.setenv("HIGGS_SEED", "5")
    env_out = tmp_path / "env.json"
    assert main(["gen", "planted", "--dim", "2", "--sizes", "3,2", "-o", str(env_out)]) == 0
    assert env_out.read_bytes() == paths[0][0]
    monkeypatch.setenv("HIGGS_SEED", "6")
    assert main(["gen", "planted", "--dim", "2", "--sizes", "3,2", "-o", str(env_out)]) == 0
    assert env_out.read_bytes() != paths[0][0]


def test_solve_direct_then_verify(tmp_path):
    metric = tmp_path / "m.json"
    datum = str(FIXTURES / "planted_d3_n6.higgs.json")
    assert main(["solve", datum, "--direct", "--metric-out", str(metric), "-o", str(tmp_path / "r.json")]) == 0
    validator("metric").validate(json.loads(metric.read_bytes()))
    report = json.loads((tmp_path / "r.json").read_bytes())
    scale = report["ym_report"]["scale"]
    assert report["ym_report"]["flatness_residual"] <= 1e-8 * scale
    assert main(["verify", datum, str(metric), "-o", str(tmp_path / "v.json")]) == 0


def test_solve_flow_metric_out(tmp_path):
    metric = tmp_path / "m.json"
    datum = str(FIXTURES / "nilpotent.higgs.json")
    outcome = run(["solve", datum, "--metric-out", str(metric), "-o", str(tmp_path / "r.json")])
    assert outcome.exit_code == 1 and outcome.summary.startswith("degenerating")
    h = parse_metric(metric.read_bytes()).blocks[0]
    assert np.linalg.det(h).real == pytest.approx(1, abs=1e-9)


def test_gauge_and_trivialize_outputs(tmp_path):
    d_out, m_out = tmp_path / "d.json", tmp_path / "m.json"
    args = ["gauge", "--gauge", "planted_d3_n6.gauge.json", "--datum", "planted_d3_n6.higgs.json",
            "--metric", "planted_d3_n6_identity.metric.json", "--datum-out", str(d_out), "--metric-out", str(m_out)]
    assert run([*resolve(args), "-o", str(tmp_path / "r.json")]).exit_code == 0
    moved = parse(d_out.read_bytes())
    assert run(["check", str(d_out), "-o", str(tmp_path / "c.json")]).exit_code == 0
    assert moved.dim == 3
    validator("metric").validate(json.loads(m_out.read_bytes()))

    out = tmp_path / "t.json"
    assert run([*resolve(["trivialize", "planted_diag.higgs.json", "--matrix", "swap2.trivialization.json"]),
                "-o", str(out)]).exit_code == 0
    t1, t2 = parse(out.read_bytes()).blocks[0].higgs
    assert np.array_equal(t1, np.diag([3, 4])) and np.array_equal(t2, np.diag([1, 2]))


def test_console_entry_point_streams():
    env = dict(os.environ, PYTHONPATH=os.pathsep.join(sys.path))
    proc = subprocess.run(
        [sys.executable, "-m", "higgstorus", "check", str(FIXTURES / "planted_two_block.higgs.json"), "--json"],
        capture_output=True, env=env,
    )
    assert proc.returncode == 0
    assert proc.stderr.decode().strip() == "polystable; blocks=2; levi=[2, 1]"
    report = json.loads(proc.stdout)
    assert report["verdict"] == "polystable" and report["command"] == "check"
    proc = subprocess.run([sys.executable, "-m", "higgstorus", "check"], capture_output=True, env=env)
    assert proc.returncode == 2
