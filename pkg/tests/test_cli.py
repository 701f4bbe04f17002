"""Command-line interface: exit codes, payload shapes, determinism.

Most invocations run in-process through ``run(argv)``; byte-level determinism
and the module entry point are exercised through real subprocesses.
"""

import json
import subprocess
import sys

import numpy as np
import pytest

from leibniz.cli import run

LEIBNIZ = [sys.executable, "-m", "leibniz"]


def _run(capsys, argv):
    code = run(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def _payload(out):
    return json.loads(out)


# === list ===

def test_list_catalog(capsys):
    code, out, err = _run(capsys, ["list"])
    assert code == 0 and err == ""
    payload = _payload(out)
    assert payload["command"] == "list"
    names = [e["name"] for e in payload["systems"]]
    assert names == sorted(names)
    assert "constrained-particle" in names
    assert len(names) == 10


# === simulate ===

def test_simulate_payload_and_csv(capsys, tmp_path):
    out_file = tmp_path / "traj.csv"
    code, out, _ = _run(capsys, [
        "simulate", "--system", "canonical2", "--x0", "1,0",
        "--t1", "1", "--dt", "0.01", "--out", str(out_file)])
    assert code == 0
    payload = _payload(out)
    assert payload["command"] == "simulate"
    assert payload["method"] == "rk4"
    assert payload["steps"] == 100
    assert payload["t_final"] == pytest.approx(1.0)
    assert payload["truncated"] is False
    assert payload["drift"]["energy"]["max_drift"] < 1e-10
    assert payload["out"] == str(out_file)
    q, p = payload["final_state"]
    assert q == pytest.approx(np.cos(1.0), abs=1e-8)
    assert p == pytest.approx(-np.sin(1.0), abs=1e-8)

    lines = out_file.read_text().strip().split("\n")
    assert lines[0] == "t,q,p,energy"
    assert len(lines) == 102  # header + 101 states


def test_simulate_json_out_and_custom_monitor(capsys, tmp_path):
    out_file = tmp_path / "traj.json"
    code, out, _ = _run(capsys, [
        "simulate", "--system", "canonical2", "--x0", "1,0", "--t1", "0.5",
        "--dt", "0.01", "--format", "json", "--out", str(out_file),
        "--monitor", "L=q^2"])
    assert code == 0
    payload = _payload(out)
    assert "L" in payload["drift"]
    data = json.loads(out_file.read_text())
    assert data["chart"] == ["q", "p"]
    assert "L" in data["monitors"]


def test_simulate_truncation_reported(capsys):
    code, out, _ = _run(capsys, [
        "simulate", "--system", "upper-half-plane", "--x0", "0,0.4",
        "--t1", "10", "--dt", "1e-3"])
    assert code == 0
    payload = _payload(out)
    assert payload["truncated"] is True
    assert payload["t_final"] < 10.0
    assert payload["final_state"][1] > 0.0  # never leaves the domain


def test_simulate_rk45_method(capsys):
    code, out, _ = _run(capsys, [
        "simulate", "--system", "canonical2", "--x0", "1,0", "--t1", "1",
        "--method", "rk45"])
    assert code == 0
    assert _payload(out)["method"] == "rk45"


# === exit codes and error objects ===

def test_unknown_system_is_usage_error(capsys):
    code, out, err = _run(capsys, ["simulate", "--system", "unknown"])
    assert code == 2 and out == ""
    error = json.loads(err)["error"]
    assert error["type"] == "UnknownSystemError"
    assert "three-wave" in error["message"]  # catalog names are listed


def test_bad_parameter_is_usage_error(capsys):
    code, _, err = _run(capsys, [
        "check", "casimir", "--system", "three-wave",
        "--param", "gamma=1,1,1"])
    assert code == 2
    assert json.loads(err)["error"]["type"] == "ParameterError"


def test_out_of_domain_start_is_numerical_error(capsys):
    code, _, err = _run(capsys, [
        "simulate", "--system", "upper-half-plane", "--x0", "0,-1",
        "--t1", "1", "--dt", "1e-3"])
    assert code == 3
    assert json.loads(err)["error"]["type"] == "OutOfDomainError"


def test_wrong_x0_dimension_is_usage_error(capsys):
    code, _, err = _run(capsys, [
        "simulate", "--system", "canonical2", "--x0", "1,2,3",
        "--t1", "1", "--dt", "1e-3"])
    assert code == 2
    assert json.loads(err)["error"]["type"] == "ValueError"


def test_unknown_check_kind_exits_via_argparse(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["check", "no-such-kind", "--system", "canonical2"])
    assert exc.value.code == 2


def test_parse_error_is_usage_error(capsys):
    code, _, err = _run(capsys, [
        "check", "jacobiator", "--system", "pseudometric",
        "--f", "x +", "--g", "y", "--h", "x*y"])
    assert code == 2
    error = json.loads(err)["error"]
    assert error["type"] == "ParseError"


# === check kinds ===

def test_check_casimir_stored_and_explicit(capsys):
    code, out, _ = _run(capsys, [
        "check", "casimir", "--system", "constrained-particle-reduced-1",
        "--samples", "30", "--tol", "1e-12"])
    assert code == 0
    payload = _payload(out)
    assert payload["passed"] is True
    assert payload["kind"] == "casimir"
    assert len(payload["reports"]) == 4

    code, out, _ = _run(capsys, [
        "check", "casimir", "--system", "constrained-particle-reduced-1",
        "--f", "p_y", "--side", "left", "--samples", "30"])
    assert code == 0

    code, out, _ = _run(capsys, [
        "check", "casimir", "--system", "canonical2", "--f", "q",
        "--samples", "20"])
    assert code == 1  # q is a Casimir on neither side
    payload = _payload(out)
    assert payload["passed"] is False
    assert all(r["max_residual"] == 1.0 for r in payload["reports"])


def test_check_casimir_side_variants(capsys):
    code, out, _ = _run(capsys, [
        "check", "casimir-left", "--system", "constrained-particle-reduced-1",
        "--samples", "20"])
    assert code == 0
    assert len(_payload(out)["reports"]) == 2
    code, out, _ = _run(capsys, [
        "check", "casimir-right", "--system", "constrained-particle-reduced-1",
        "--samples", "20"])
    assert code == 0
    assert len(_payload(out)["reports"]) == 2
    # No stored Casimirs on this system: explicit --f is required.
    code, _, err = _run(capsys, [
        "check", "casimir", "--system", "canonical2", "--samples", "10"])
    assert code == 2
    assert "--f" in json.loads(err)["error"]["message"]


def test_check_jacobiator_point_value(capsys):
    code, out, _ = _run(capsys, [
        "check", "jacobiator", "--system", "pseudometric",
        "--f", "x^2", "--g", "y^2", "--h", "x*y",
        "--point", "1,1", "--expect", "8", "--tol", "1e-6"])
    assert code == 0
    payload = _payload(out)
    report = payload["reports"][0]
    assert report["details"]["worst"]["value"] == pytest.approx(8.0, abs=1e-9)
    assert report["details"]["expect"] == 8.0


def test_check_jacobiator_family_and_fd(capsys):
    code, out, _ = _run(capsys, [
        "check", "jacobiator", "--system", "canonical6", "--samples", "10",
        "--tol", "1e-9"])
    assert code == 0
    code, out, _ = _run(capsys, [
        "check", "jacobiator", "--system", "landau-lifschitz",
        "--param", "lambda=0", "--fd", "--samples", "10", "--tol", "1e-6"])
    assert code == 0


def test_check_momentum_sweep(capsys):
    code, out, _ = _run(capsys, [
        "check", "momentum", "--system", "upper-half-plane",
        "--sweep", "xi=-1,0.5,2", "--samples", "30", "--tol", "1e-12"])
    assert code == 0
    payload = _payload(out)
    assert len(payload["reports"]) == 3
    assert payload["passed"] is True


def test_check_noether(capsys):
    code, out, _ = _run(capsys, [
        "check", "noether", "--system", "three-wave", "--x0", "1,1,1",
        "--t1", "1", "--dt", "1e-3", "--tol", "1e-6"])
    assert code == 0
    payload = _payload(out)
    assert payload["reports"][0]["details"]["hamiltonian_invariant"] is True


def test_check_equivalence(capsys):
    code, out, _ = _run(capsys, [
        "check", "equivalence", "--system", "constrained-particle-reduced-1",
        "--samples", "30", "--tol", "1e-12"])
    assert code == 0


def test_check_energy_dissipation_order(capsys):
    code, out, _ = _run(capsys, [
        "check", "energy", "--system", "canonical2", "--x0", "1,0",
        "--t1", "1", "--dt", "1e-3", "--tol", "1e-8"])
    assert code == 0
    code, out, _ = _run(capsys, [
        "check", "dissipation", "--system", "rigid-body-dissipative",
        "--x0", "1,1,1", "--t1", "2", "--dt", "1e-3"])
    assert code == 0
    payload = _payload(out)
    details = payload["reports"][0]["details"]
    assert details["total_decrease"] > 0
    code, out, _ = _run(capsys, [
        "check", "order", "--system", "canonical2", "--x0", "1,0",
        "--t1", "2", "--dt", "0.02"])
    assert code == 0
    details = _payload(out)["reports"][0]["details"]
    assert 3.7 <= details["measured_order"] <= 4.3


def test_check_relatedness(capsys):
    for system in ("noncanonical-r3", "constrained-particle"):
        code, out, _ = _run(capsys, [
            "check", "relatedness", "--system", system,
            "--samples", "30", "--tol", "1e-9"])
        assert code == 0, (system, out)


def test_check_reducibility(capsys):
    code, out, _ = _run(capsys, [
        "check", "reducibility", "--system", "canonical2", "--samples", "5"])
    assert code == 0
    code, out, _ = _run(capsys, [
        "check", "reducibility", "--system", "constrained-particle",
        "--samples", "5", "--seed", "7"])
    assert code == 0
    payload = _payload(out)
    for report in payload["reports"]:
        assert report["details"]["rank_ts_d"] == 6


def test_check_expressions(capsys):
    code, out, _ = _run(capsys, [
        "check", "expressions", "--samples", "20", "--seed", "0",
        "--tol", "1e-6"])
    assert code == 0
    payload = _payload(out)
    kinds = {r["check"] for r in payload["reports"]}
    assert "derivative-vs-fd" in kinds
    assert "parser-positions" in kinds


# === reduce ===

def test_reduce_r3_full_pipeline(capsys):
    code, out, _ = _run(capsys, [
        "reduce", "--system", "noncanonical-r3", "--samples", "20",
        "--tol", "1e-12", "--flow-x0", "1,1,1", "--flow-t1", "1",
        "--flow-dt", "1e-3"])
    assert code == 0
    payload = _payload(out)
    assert payload["reduced_coordinates"] == ["x", "y"]
    assert len(payload["reduced_tensor_samples"]) == 5
    names = {r["check"] for r in payload["reports"]}
    assert {"welldefinedness", "reduced-vs-stored", "reduced-jacobiator",
            "flow-commutation:projection"} <= names


def test_reduce_landau_lifschitz_pattern(capsys):
    code, out, _ = _run(capsys, [
        "reduce", "--system", "landau-lifschitz", "--samples", "20"])
    assert code == 0
    payload = _payload(out)
    fit = next(r for r in payload["reports"]
               if r["check"] == "reduced-pattern-fit")
    assert fit["details"]["global_factor"] == pytest.approx(0.1, rel=1e-9)
    assert fit["details"]["expected_factor"] == pytest.approx(0.1)


def test_reduce_stage1_reports_stored_gap(capsys):
    # The stored 4x4 tensor is not the invariant quotient of the projected
    # 6x6 tensor: the comparison must fail with a unit-size gap.
    code, out, _ = _run(capsys, [
        "reduce", "--system", "constrained-particle", "--samples", "20",
        "--tol", "1e-12"])
    assert code == 1
    payload = _payload(out)
    assert payload["passed"] is False
    stored = next(r for r in payload["reports"]
                  if r["check"] == "reduced-vs-stored")
    assert stored["max_residual"] == pytest.approx(1.0, abs=1e-12)


def test_reduce_stage2_exact(capsys):
    code, out, _ = _run(capsys, [
        "reduce", "--system", "constrained-particle-reduced-1",
        "--samples", "20", "--tol", "1e-12"])
    assert code == 0
    payload = _payload(out)
    stored = next(r for r in payload["reports"]
                  if r["check"] == "reduced-vs-stored")
    assert stored["max_residual"] == 0.0


# === constrain ===

def test_constrain_adhoc_phi_w(capsys):
    code, out, _ = _run(capsys, [
        "constrain", "--system", "canonical6",
        "--phi", "p_x + y*p_z - 1", "--w", "0,0,0,1,0,y"])
    assert code == 0
    payload = _payload(out)
    assert payload["phi"] == ["p_x + y*p_z - 1"]
    assert payload["tensor_symbolic"] is not None
    assert len(payload["projector_samples"]) > 0


def test_constrain_requires_matched_phi_w(capsys):
    code, _, err = _run(capsys, [
        "constrain", "--system", "canonical6", "--phi", "p_x"])
    assert code == 2
    assert json.loads(err)["error"]["type"] == "ValueError"


def test_constrain_verify_stored(capsys):
    code, out, _ = _run(capsys, [
        "constrain", "--system", "constrained-particle", "--verify-stored",
        "--samples", "30", "--tol", "1e-12"])
    assert code == 0
    payload = _payload(out)
    names = {r["check"] for r in payload["reports"]}
    assert {"stored-pi", "stored-btilde", "stored-xr"} <= names
    for r in payload["reports"]:
        assert r["max_residual"] <= 1e-12


def test_constrain_family(capsys):
    code, out, _ = _run(capsys, [
        "constrain", "--system", "constrained-particle",
        "--family", "a=-1,0,1", "--samples", "30", "--tol", "1e-12"])
    assert code == 0
    payload = _payload(out)
    assert payload["family"] == [-1.0, 0.0, 1.0]
    fam = next(r for r in payload["reports"]
               if r["check"] == "family-independence")
    assert fam["max_residual"] <= 1e-12


def test_constrain_drift(capsys):
    code, out, _ = _run(capsys, [
        "constrain", "--system", "constrained-particle",
        "--x0", "0,1,0,1,1,-1", "--t1", "1", "--dt", "1e-3",
        "--drift-tol", "1e-8"])
    assert code == 0
    payload = _payload(out)
    drift = next(r for r in payload["reports"]
                 if r["check"] == "constraint-drift")
    assert drift["passed"] is True


# === TOML files through the CLI ===

HALF_PLANE_TOML = """
sample_box = [[-2.0, 2.0], [0.5, 2.5]]
x0 = [1.0, 1.0]

[system]
coordinates = ["x", "y"]
hamiltonian = "(x^2 + y^2)/2"
symmetry = "skew"
domain = "y"
name = "half-plane-file"

[tensor]
rows = [["0", "1"], ["-1", "0"]]

[parameters]
xi = 2.0
c = 7.38905609893065

[action]
generators = [["0", "c*y"]]

[momentum]
components = ["xi*x"]
factors = ["-xi/(c*y)"]
"""


def test_check_momentum_from_file(capsys, tmp_path):
    path = tmp_path / "hp.toml"
    path.write_text(HALF_PLANE_TOML)
    code, out, _ = _run(capsys, [
        "check", "momentum", "--system", str(path), "--samples", "30",
        "--tol", "1e-12"])
    assert code == 0

    code, _, err = _run(capsys, [
        "check", "momentum", "--system", str(path), "--param", "xi=1"])
    assert code == 2  # file-defined systems take parameters from the file

    code, _, err = _run(capsys, [
        "check", "momentum", "--system", str(tmp_path / "missing.toml")])
    assert code == 2


# === determinism and entry point (subprocess level) ===

def _capture(argv):
    return subprocess.run(LEIBNIZ + argv, capture_output=True, check=False)


def test_module_entry_point():
    result = _capture(["list"])
    assert result.returncode == 0
    assert json.loads(result.stdout)["command"] == "list"


def test_check_output_is_byte_identical():
    argv = ["check", "casimir", "--system", "constrained-particle-reduced-1",
            "--samples", "20", "--seed", "3"]
    first, second = _capture(argv), _capture(argv)
    assert first.returncode == second.returncode == 0
    assert first.stdout == second.stdout


def test_simulate_output_is_byte_identical(tmp_path):
    out_file = str(tmp_path / "run.csv")
    argv = ["simulate", "--system", "three-wave", "--x0", "1,1,1",
            "--t1", "1", "--dt", "1e-2", "--out", out_file]
    first = _capture(argv)
    first_bytes = open(out_file, "rb").read()
    second = _capture(argv)
    second_bytes = open(out_file, "rb").read()
    assert first.returncode == second.returncode == 0
    assert first.stdout == second.stdout
    assert first_bytes == second_bytes
