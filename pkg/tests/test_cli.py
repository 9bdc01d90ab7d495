import json
import subprocess
import sys

import pytest

from measlab.cli import ScenarioConfig, ConfigError, aggregate, load_batch, main


def run_cli(capsys, *argv):
    status = main(list(argv))
    out, err = capsys.readouterr()
    return status, out, err


def run_json(capsys, *argv):
    status, out, _ = run_cli(capsys, *argv, "--format", "json")
    assert status == 0
    return json.loads(out)


def test_reality_superposition_flags_contradiction(capsys):
    report = run_json(capsys, "reality", "--alpha", "0.7071", "0", "--beta", "0.7071", "0")
    assert report["contradiction_flag"] is True
    assert report["scenario_name"] == "reality"
    assert report["schema_version"] == "1"


def test_reality_eigenstate(capsys):
    report = run_json(capsys, "reality", "--alpha", "1", "0", "--beta", "0", "0")
    assert report["contradiction_flag"] is False
    assert report["computed"]["outcome"] == 1.0


def test_stein_command(capsys):
    report = run_json(capsys, "stein", "--dims", "4", "4", "--trials", "10", "--seed", "7")
    assert report["computed"]["max_factorization_residual"] <= 1e-10
    assert report["computed"]["max_independence_residual"] <= 1e-10


def test_text_output(capsys):
    status, out, _ = run_cli(capsys, "completeness", "--psi", "0.6", "0", "0.8", "0")
    assert status == 0
    assert "contradiction_flag: true" in out
    assert "[FAIL] state specifies a unique outcome" in out


@pytest.mark.parametrize(
    "argv",
    [
        ["probability", "--alpha", "0.6", "0", "--beta", "0.8", "0", "--weights", "0.2", "0.5", "0.3"],
        ["expectation", "--trials", "3"],
        ["nosignal", "--state", "product", "--seed", "4"],
        ["control", "--trials", "5"],
        ["reality", "--alpha", "0.6", "0", "--beta", "0", "0.8", "--variant", "flip"],
    ],
)
def test_commands_exit_zero_and_are_byte_identical(capsys, argv):
    first = run_cli(capsys, *argv, "--format", "json")
    second = run_cli(capsys, *argv, "--format", "json")
    assert first[0] == 0
    assert first[1] == second[1]


def test_json_round_trip_is_bit_exact(capsys):
    _, out, _ = run_cli(capsys, "stein", "--dims", "3", "3", "--trials", "2", "--format", "json")
    data = json.loads(out)
    assert json.dumps(data, indent=2) == out.rstrip("\n")
    for r in data["computed"]["factorization_residuals"]:
        assert float(repr(r)) == r


@pytest.mark.parametrize(
    "argv,fragment",
    [
        (["reality", "--alpha", "1", "0", "--beta", "1", "0"], "parameters.alpha"),
        (["probability", "--weights", "0.5", "0.5", "0.5"], "parameters.weights"),
        (["stein", "--dims", "0", "4"], "parameters.dims"),
        (["completeness", "--psi", "1", "0", "0"], "psi"),
        (["control", "--tolerance", "-1"], "tolerance"),
        (["stein", "--seed", "-3"], "seed"),
    ],
)
def test_validation_errors_name_the_field(capsys, argv, fragment):
    status, out, err = run_cli(capsys, *argv)
    assert status == 2
    assert out == ""
    assert fragment in err


def test_config_from_dict_defaults():
    cfg = ScenarioConfig.from_dict({"scenario": "control"})
    assert cfg.seed == 0 and cfg.tolerance == 1e-10 and cfg.output_format == "text"
    with pytest.raises(ConfigError, match="scenario"):
        ScenarioConfig.from_dict({"scenario": "magic"})
    with pytest.raises(ConfigError, match=r"parameters\.bogus"):
        ScenarioConfig.from_dict({"scenario": "control", "parameters": {"bogus": 1}})
    with pytest.raises(ConfigError, match=r"parameters\.magnitude"):
        ScenarioConfig.from_dict(
            {"scenario": "completeness", "parameters": {"psi": [[1, 0]], "magnitude": [[[0, 0], [1, 0]], [[0, 0], [0, 0]]]}}
        )


def test_config_accepts_matrix_magnitude():
    cfg = ScenarioConfig.from_dict(
        {"scenario": "completeness", "parameters": {"psi": [[1, 0], [0, 0]], "magnitude": [[[1, 0], [0, 0]], [[0, 0], [2, 0]]]}}
    )
    assert cfg.parameters["psi"] == [[1, 0], [0, 0]]


CANONICAL = [
    {"scenario": "reality", "parameters": {"alpha": [0.6, 0], "beta": [0.8, 0]}},
    {"scenario": "completeness", "parameters": {"psi": [[0.6, 0], [0.8, 0]]}},
    {"scenario": "probability", "parameters": {"alpha": [1, 0], "beta": [0, 0], "weights": [0.2, 0.5, 0.3]}},
]


def write(tmp_path, payload):
    path = tmp_path / "batch.json"
    path.write_text(json.dumps(payload))
    return str(path)


def test_batch_canonical(tmp_path, capsys):
    path = write(tmp_path, CANONICAL)
    agg = run_json(capsys, "batch", path)
    assert [row["problem"] for row in agg["summary"]] == ["I", "II", "III"]
    assert all(row["contradiction_flag"] for row in agg["summary"])
    assert len(agg["reports"]) == 3
    status, text, _ = run_cli(capsys, "batch", path)
    assert status == 0 and "problem" in text.splitlines()[0]


def test_batch_empty(tmp_path, capsys):
    agg = run_json(capsys, "batch", write(tmp_path, []))
    assert agg["summary"] == [] and agg["reports"] == []


def test_batch_rejects_bad_entry_before_running(tmp_path, capsys):
    bad = CANONICAL + [{"scenario": "stein", "parameters": {"dims": [4]}}]
    status, out, err = run_cli(capsys, "batch", write(tmp_path, bad))
    assert status == 2 and out == ""
    assert "[3].parameters.dims" in err
    status, _, err = run_cli(capsys, "batch", write(tmp_path, {"scenario": "control"}))
    assert status == 2 and "array" in err


def test_batch_parallel_keeps_order(tmp_path):
    configs = load_batch(write(tmp_path, CANONICAL * 3 + [{"scenario": "stein", "seed": 2}]))
    serial = aggregate(configs, jobs=1)
    parallel = aggregate(configs, jobs=4)
    assert json.dumps(serial) == json.dumps(parallel)


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "measlab", "reality", "--alpha", "0", "0", "--beta", "1", "0", "--format", "json"],
        capture_output=True,
        text=True,
        check=True,
    )
    assert json.loads(proc.stdout)["contradiction_flag"] is False
