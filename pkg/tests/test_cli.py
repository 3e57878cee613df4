import csv
import json
import shutil
import subprocess

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mplab.acceptance import sweep_workers
from mplab.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, EXIT_VIOLATED, OPERATIONS, ExperimentConfig, UsageError, main, run


def _json(capsys):
    return json.loads(capsys.readouterr().out)


# -- configs -----------------------------------------------------------------------------


scalars = st.one_of(st.integers(-10**6, 10**6), st.floats(allow_nan=False, allow_infinity=False), st.booleans(),
                    st.text(max_size=8))


@given(
    st.sampled_from(OPERATIONS),
    st.dictionaries(st.text(min_size=1, max_size=8), st.one_of(scalars, st.lists(scalars, max_size=4)), max_size=5),
    st.one_of(st.none(), st.text(min_size=1, max_size=12)),
    st.integers(0, 2**31),
    st.sampled_from([None, "violated", "consistent"]),
)
def test_config_round_trip(op, params, out, seed, expect):
    cfg = ExperimentConfig(operation=op, profile={"profile": "cusp", "epsilon": 0.5}, params=params, out=out, seed=seed,
                           expect=expect)
    again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg


def test_config_rejects_unknown_and_missing():
    with pytest.raises(UsageError):
        ExperimentConfig.from_dict({"operation": "green", "colour": "red"})
    with pytest.raises(UsageError):
        ExperimentConfig.from_dict({})
    with pytest.raises(UsageError):
        ExperimentConfig.from_dict({"operation": "teleport"})
    with pytest.raises(UsageError):
        ExperimentConfig.from_dict({"operation": "experiment", "expect": "maybe"})


def test_run_usage_errors():
    assert run({}) == EXIT_USAGE
    assert run({"operation": "green", "bogus": 1}) == EXIT_USAGE
    assert run({"operation": "meanvalue", "params": {"function": "nope"}}) == EXIT_USAGE


def test_config_file(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"operation": "green", "params": {"x": 0.3, "y": 0.7}}))
    assert main(["run", "--config", str(path)]) == EXIT_OK
    assert _json(capsys)["value"] == pytest.approx(0.09, abs=1e-14)
    path.write_text("{}")
    assert main(["run", "--config", str(path)]) == EXIT_USAGE
    path.write_text("not json")
    assert main(["run", "--config", str(path)]) == EXIT_USAGE


# -- argument parsing and exit codes ---------------------------------------------------------------


def test_no_command_is_usage_error():
    assert main([]) == EXIT_USAGE


def test_bad_flag_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["green", "--no-such-flag"])
    assert exc.value.code == EXIT_USAGE


def test_unknown_suite():
    assert main(["acceptance", "nonexistent"]) == EXIT_USAGE


def test_sc_test_euclidean(capsys):
    assert main(["sc-test", "--profile", "euclidean", "--lambda", "1"]) == EXIT_OK
    out = _json(capsys)
    assert out["verdict"] == "COMPLETE_EVIDENCE"
    assert out["schema_version"] == 1


def test_experiment_exit_codes(tmp_path, capsys):
    out = tmp_path / "witness.json"
    code = main(["experiment", "--mode", "l1", "--profile", "cusp", "--epsilon", "1", "--expect", "violated",
                 "--out", str(out)])
    assert code == EXIT_OK
    data = json.loads(out.read_text(encoding="utf-8"))
    assert data["verdict"] == "VIOLATED" and data["witness"]["l1_mass"] > 0
    assert main(["experiment", "--mode", "l1", "--profile", "cusp"]) == EXIT_VIOLATED
    assert main(["experiment", "--mode", "l1", "--profile", "euclidean"]) == EXIT_OK
    assert main(["experiment", "--mode", "l1", "--profile", "euclidean", "--expect", "violated"]) == EXIT_FAIL
    assert main(["experiment", "--mode", "l1", "--profile", "superexp"]) == EXIT_FAIL
    capsys.readouterr()


def test_green_and_meanvalue(capsys):
    assert main(["green", "--x", "0.5", "--y", "0.5"]) == EXIT_OK
    assert _json(capsys)["value"] == pytest.approx(0.25, abs=1e-14)
    assert main(["meanvalue", "--function", "|t-0.5|", "--x", "0.5", "--r", "8"]) == EXIT_OK
    out = _json(capsys)
    assert out["value"] == pytest.approx(0.25, abs=1e-12) and not out["degenerate"]


def test_counterexample(capsys):
    assert main(["counterexample", "--epsilon", "1", "--points", "2000"]) == EXIT_OK
    out = _json(capsys)
    assert out["status"] == "PASS" and out["t_eps"] == pytest.approx(0.5)


def test_iterate(capsys):
    assert main(["iterate", "--cells", "32"]) == EXIT_OK
    out = _json(capsys)
    assert out["residual"] <= 1e-9 and out["refinement"]["order"] >= 1.9


def test_envelope(capsys):
    assert main(["envelope", "--radii", "2", "4"]) == EXIT_OK
    out = _json(capsys)
    assert len(out["stages"]) == 2 and len(out["cauchy"]) == 1


# -- CSV ------------------------------------------------------------------------------------------------


def test_alpha_csv(tmp_path, capsys):
    out = tmp_path / "alpha.csv"
    assert main(["alpha", "--profile", "euclidean", "--horizon", "2", "--points", "5", "--out", str(out)]) == EXIT_OK
    raw = out.read_bytes()
    assert raw.count(b"\r\n") == 6
    rows = list(csv.reader(raw.decode("utf-8").splitlines()))
    assert rows[0] == ["t", "alpha", "alpha_prime"]
    assert float(rows[1][1]) == pytest.approx(1.0, abs=1e-12)
    capsys.readouterr()


def test_approx_csv(tmp_path, capsys):
    out = tmp_path / "approx.csv"
    assert main(["approx", "--weight", "0.00390625", "--k", "1", "2", "--out", str(out)]) == EXIT_OK
    with open(out, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "k", "v", "v_k", "sup_bound_ok"]
    assert {r[1] for r in rows[1:]} == {"1", "2"}
    assert all(r[4] == "True" for r in rows[1:])
    assert _json(capsys)["passed"]


# -- determinism and threads -------------------------------------------------------------------------------


def test_json_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert main(["sc-test", "--profile", "superexp", "--delta", "0.5", "--out", str(path)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    capsys.readouterr()


def test_acceptance_suite_json(tmp_path, capsys):
    out = tmp_path / "acc.json"
    assert main(["acceptance", "counterexamples", "--out", str(out)]) == EXIT_OK
    text = capsys.readouterr().out
    assert text.count("PASS") == 3
    data = json.loads(out.read_text())
    assert data["schema_version"] == 1


def test_threads_env(monkeypatch):
    monkeypatch.setenv("MPLAB_THREADS", "3")
    assert sweep_workers() == 3
    monkeypatch.setenv("MPLAB_THREADS", "0")
    assert sweep_workers() == 1
    monkeypatch.delenv("MPLAB_THREADS")
    assert sweep_workers() >= 1


@pytest.mark.skipif(shutil.which("mplab") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["mplab", "green", "--x", "0.3", "--y", "0.7"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["value"] == pytest.approx(0.09)
