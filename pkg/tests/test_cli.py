"""End-to-end command-line behavior: artifacts, stdout, exit codes."""

import json

import numpy as np
import pytest

from swakit import cli
from swakit.trace import read_trace, truth_index


def run(capsys, *argv):
    code = cli.main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


@pytest.fixture(scope="module")
def tiny_trace(tmp_path_factory):
    out = tmp_path_factory.mktemp("trace")
    code = cli.main([
        "gen-trace", "--out", str(out), "--seed", "9",
        "--instances", "80", "--services", "60", "--user-pool", "200",
        "--repeat-factor", "1.3",
    ])
    assert code == 0
    return out / "trace.csv"


# ---------------------------------------------------------------------------
# happy paths
# ---------------------------------------------------------------------------


def test_version_flag(capsys):
    code, out, _ = run(capsys, "--version")
    assert code == 0
    assert out.startswith("swakit ")


def test_estimate_params_defaults(capsys, tmp_path):
    code, out, _ = run(capsys, "estimate-params", "--out", str(tmp_path))
    assert code == 0
    assert out.strip() == '{"capacity": 13, "timeout_s": 22}'
    on_disk = json.loads((tmp_path / "params.json").read_text())
    assert on_disk == {"capacity": 13, "timeout_s": 22}
    manifest = json.loads((tmp_path / "estimate_params_manifest.json").read_text())
    assert manifest["command"] == "estimate-params"
    assert manifest["config"]["alpha"] == 0.90
    assert manifest["outputs"]["params"].endswith("params.json")


def test_gen_trace_artifacts(tiny_trace):
    trace = read_trace(tiny_trace)
    assert len(truth_index(trace)) == 80
    manifest = json.loads(
        (tiny_trace.parent / "gen_trace_manifest.json").read_text())
    for key in ("tool", "tool_version", "command", "config", "seed", "outputs",
                "wall_time_s"):
        assert key in manifest
    assert manifest["seed"] == 9
    assert manifest["config"]["instances"] == 80


def test_gen_trace_accepts_dist_override(capsys, tmp_path):
    dist_file = tmp_path / "deg.json"
    dist_file.write_text(json.dumps({"type": "point", "value": 3}))
    code, _, _ = run(
        capsys, "gen-trace", "--out", str(tmp_path), "--seed", "1",
        "--instances", "20", "--services", "20", "--degree-dist", str(dist_file),
    )
    assert code == 0
    trace = read_trace(tmp_path / "trace.csv")
    assert all(t.degree == 3 for t in truth_index(trace).values())


def test_pipeline_then_evaluate_round_trip(capsys, tiny_trace, tmp_path):
    code, out, _ = run(
        capsys, "run-pipeline", "--trace", str(tiny_trace), "--out", str(tmp_path))
    assert code == 0
    assert "emissions" in out
    assert (tmp_path / "emitted.csv").exists()
    assert (tmp_path / "emitted_members.csv").exists()
    stats = json.loads((tmp_path / "operator_stats.json").read_text())
    assert stats["union"]["tuples_dropped"] == 0
    assert stats["config"]["aggregate"]["kind"] == "swa"

    code, out, _ = run(
        capsys, "evaluate", "--emitted", str(tmp_path / "emitted.csv"),
        "--trace", str(tiny_trace), "--out", str(tmp_path),
        "--gamma", "1,0.75",
    )
    assert code == 0
    doc = json.loads(out)
    assert set(doc["completeness"]) == {"gamma_1", "gamma_0.75"}
    assert doc["instances"] == 80
    assert 0.0 <= doc["completeness"]["gamma_1"]["ratio"] <= 1.0
    assert doc == json.loads((tmp_path / "evaluation.json").read_text())


def test_pipeline_no_members_blocks_evaluate(capsys, tiny_trace, tmp_path):
    code, _, _ = run(
        capsys, "run-pipeline", "--trace", str(tiny_trace), "--out", str(tmp_path),
        "--no-members")
    assert code == 0
    assert not (tmp_path / "emitted_members.csv").exists()
    code, _, err = run(
        capsys, "evaluate", "--emitted", str(tmp_path / "emitted.csv"),
        "--trace", str(tiny_trace), "--out", str(tmp_path))
    assert code == 2
    assert "sidecar" in err


def test_fit_dist_from_values(capsys, tmp_path):
    rng = np.random.default_rng(3)
    samples = rng.gamma(shape=4.0, scale=0.5, size=400)
    vals = tmp_path / "vals.txt"
    vals.write_text("\n".join(f"{v:.6f}" for v in samples))
    code, out, _ = run(
        capsys, "fit-dist", "--out", str(tmp_path), "--values", str(vals),
        "--branches", "1", "--max-phases", "8", "--emit-curves")
    assert code == 0
    assert "log-likelihood" in out
    report = json.loads((tmp_path / "fit_report.json").read_text())
    assert report["samples"] == 400
    assert report["converged"] in (True, False)
    dist_doc = json.loads((tmp_path / "dist.json").read_text())
    assert dist_doc["type"] in ("erlang", "hyper_erlang")
    curves = (tmp_path / "curves.csv").read_text().splitlines()
    assert curves[0] == "x,pdf,cdf"
    assert len(curves) == 257
    last = [float(v) for v in curves[-1].split(",")]
    assert last[2] > 0.95  # cdf approaches 1 at the grid's right edge


def test_predict_finite_buffer(capsys, tmp_path):
    model = tmp_path / "model.json"
    model.write_text(json.dumps({
        "arrival": {"type": "erlang", "lambda": 1.0, "k": 1},
        "service": {"type": "erlang", "lambda": 2.0, "k": 1},
        "servers": 1, "buffer": 10,
    }))
    code, out, _ = run(capsys, "predict", "--model", str(model), "--out", str(tmp_path))
    assert code == 0
    doc = json.loads(out)
    rho = 0.5
    L = sum(n * rho ** n * (1 - rho) / (1 - rho ** 11) for n in range(11))
    assert doc["L"] == pytest.approx(L, rel=1e-9)
    assert json.loads((tmp_path / "predict.json").read_text()) == doc


def test_simulate_queue_smoke(capsys, tmp_path):
    model = tmp_path / "model.json"
    model.write_text(json.dumps({
        "arrival": {"type": "erlang", "lambda": 1.0, "k": 1},
        "service": {"type": "erlang", "lambda": 2.0, "k": 1},
    }))
    code, out, _ = run(
        capsys, "simulate-queue", "--model", str(model), "--out", str(tmp_path),
        "--arrivals", "20000", "--seed", "4")
    assert code == 0
    doc = json.loads(out)
    assert set(doc) == {"L", "Lq", "W", "Wq"}
    full = json.loads((tmp_path / "simulate.json").read_text())
    assert "ci95" in full
    assert abs(full["L"] - 1.0) < 0.25


def test_compare_structure(capsys, tiny_trace, tmp_path):
    code, out, _ = run(
        capsys, "compare", "--trace", str(tiny_trace), "--out", str(tmp_path),
        "--sliding", "40,120", "--gamma", "1,0.85")
    assert code == 0
    doc = json.loads((tmp_path / "compare.json").read_text())
    assert [r["label"] for r in doc["runs"]] == ["swa_13_22", "sliding_40", "sliding_120"]
    for row in doc["runs"]:
        assert set(row["completeness"]) == {"gamma_1", "gamma_0.85"}
        assert row["occupancy_max"] >= row["occupancy_avg"]
    assert "swa_13_22" in out


# ---------------------------------------------------------------------------
# exit codes
# ---------------------------------------------------------------------------


def test_usage_errors_exit_one(capsys):
    assert cli.main(["--no-such-flag"]) == 1
    capsys.readouterr()
    assert cli.main(["frobnicate"]) == 1
    capsys.readouterr()
    assert cli.main(["run-pipeline"]) == 1  # missing required --trace
    capsys.readouterr()
    assert cli.main([]) == 1
    capsys.readouterr()


def test_missing_model_file_exits_two(capsys, tmp_path):
    code, _, err = run(capsys, "predict", "--model", str(tmp_path / "nope.json"),
                       "--out", str(tmp_path))
    assert code == 2
    assert "error" in err


def test_fit_dist_without_inputs_exits_two(capsys, tmp_path):
    code, _, err = run(capsys, "fit-dist", "--out", str(tmp_path))
    assert code == 2
    assert "error" in err


def test_too_few_arrivals_exits_two(capsys, tmp_path):
    model = tmp_path / "model.json"
    model.write_text(json.dumps({
        "arrival": {"type": "erlang", "lambda": 1.0, "k": 1},
        "service": {"type": "erlang", "lambda": 2.0, "k": 1},
    }))
    code, _, _ = run(capsys, "simulate-queue", "--model", str(model),
                     "--out", str(tmp_path), "--arrivals", "50")
    assert code == 2


def test_state_space_blowup_exits_three(capsys, tmp_path):
    model = tmp_path / "model.json"
    model.write_text(json.dumps({
        "arrival": {"type": "erlang", "lambda": 1.0, "k": 10},
        "service": {"type": "erlang", "lambda": 2.0, "k": 10},
        "servers": 1, "buffer": 2000,
    }))
    code, _, err = run(capsys, "predict", "--model", str(model), "--out", str(tmp_path))
    assert code == 3
    assert "numerical failure" in err
