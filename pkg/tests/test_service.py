"""Tests for the HTTP service: endpoints, error kinds, CLI parity plumbing."""
import numpy as np
import pytest
from fastapi.testclient import TestClient

from qabacus.pointint import robin_levels
from qabacus.service import create_app

# row-major [re, im] entries of a generic (non-Bloch, non-diagonal) rotation
GENERIC = [[0.6, 0.0], [0.8, 0.0], [-0.8, 0.0], [0.6, 0.0]]


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app()) as c:
        yield c


def test_healthz(client):
    r = client.get("/healthz")
    assert r.status_code == 200
    body = r.json()
    assert body["status"] == "ok" and body["version"]


# --------------------------------------------------------------------------
# spectrum


def test_spectrum_theta_matches_library(client):
    r = client.post("/spectrum", json={"theta": np.pi / 2, "count": 6})
    assert r.status_code == 200
    body = r.json()
    assert body["method"] == "analytic_gamma"  # reports the solver that ran
    expected = robin_levels(np.pi / 2, 6)
    assert np.allclose(body["levels"], expected.levels, atol=1e-12)
    assert max(body["residuals"]) < 1e-9
    assert body["csv"].splitlines()[0] == "index,E_over_hbar_omega,residual"


def test_spectrum_identity_gate_doubles_the_neumann_ladder(client):
    r = client.post("/spectrum", json={"gate": "I", "count": 4})
    assert r.status_code == 200
    assert np.allclose(r.json()["levels"], [0.5, 0.5, 2.5, 2.5], atol=1e-12)


def test_spectrum_fd_route_agrees(client):
    r = client.post("/spectrum",
                    json={"theta": 1.0, "count": 4, "method": "fd"})
    assert r.status_code == 200
    body = r.json()
    assert body["method"] == "finite_difference"
    assert np.allclose(body["levels"], robin_levels(1.0, 4).levels, atol=1e-3)


def test_spectrum_requires_exactly_one_source(client):
    assert client.post("/spectrum", json={}).status_code == 422
    assert client.post("/spectrum",
                       json={"gate": "I", "theta": 1.0}).status_code == 422


def test_unknown_fields_are_rejected(client):
    r = client.post("/spectrum", json={"theta": 1.0, "bogus": 1})
    assert r.status_code == 422


# --------------------------------------------------------------------------
# scattering


def test_scatter_hadamard_is_flat_half(client):
    r = client.post("/scatter", json={"gate": "HADAMARD", "k_min": 0.01,
                                      "k_max": 100.0, "count": 7})
    assert r.status_code == 200
    body = r.json()
    assert body["gate"] == "HADAMARD"
    assert len(body["rows"]) == 7
    for row in body["rows"]:
        assert abs(row["transmission"] - 0.5) < 1e-12
        assert abs(row["reflection"] - 0.5) < 1e-12
        assert row["unitarity_residual"] < 1e-12
    lines = body["csv"].splitlines()
    assert lines[0] == "k_ell,transmission,reflection,unitarity_residual"
    assert len(lines) == 8


def test_scatter_rejects_bad_range(client):
    r = client.post("/scatter", json={"gate": "I", "k_min": 5.0, "k_max": 1.0})
    assert r.status_code == 422


# --------------------------------------------------------------------------
# compile and run


def test_compile_bloch_records_minus_i(client):
    r = client.post("/compile", json={"gate": "HADAMARD"})
    assert r.status_code == 200
    body = r.json()
    assert body["n_steps"] == 1 and body["n_gate_steps"] == 1
    assert tuple(body["recorded_phase"]) == (0.0, -1.0)
    assert body["schedule"]["steps"][0]["kind"] == "gate_half_period"


def test_compile_then_run_round_trip(client):
    comp = client.post("/compile", json={"gate": GENERIC}).json()
    assert comp["n_gate_steps"] <= 4
    r = client.post("/run", json={"schedule": comp["schedule"],
                                  "include_states": True})
    assert r.status_code == 200
    body = r.json()
    assert body["engine"] == "modal"
    assert abs(body["norm"] - 1.0) < 1e-10
    assert len(body["steps"]) == comp["n_steps"]
    assert body["global_phase"] is not None
    # |0> -> (u00 f, u10 f): populations follow the target's first column
    u00 = complex(*GENERIC[0])
    u10 = complex(*GENERIC[2])
    assert abs(body["readout"]["p0"] - abs(u00) ** 2) < 1e-9
    assert abs(body["readout"]["p1"] - abs(u10) ** 2) < 1e-9
    assert body["final_state_csv"].splitlines()[0].startswith("x,")
    assert len(body["step_state_csv"]) == comp["n_steps"]


def test_run_parse_error_maps_to_400(client):
    r = client.post("/run", json={"schedule": {"steps": [], "wat": 1}})
    assert r.status_code == 400
    body = r.json()
    assert body["kind"] == "parse" and body["message"]


def test_run_modal_generic_gate_maps_to_409(client):
    sched = {"steps": [{"kind": "gate_half_period", "gate": GENERIC}]}
    r = client.post("/run", json={"schedule": sched, "engine": "modal"})
    assert r.status_code == 409
    assert r.json()["kind"] == "physics-contract"


def test_run_grid_accuracy_failure_maps_to_422(client):
    sched = {"steps": [{"kind": "gate_half_period", "gate": "NOT"}]}
    r = client.post("/run", json={"schedule": sched, "engine": "grid",
                                  "grid_nodes": 256, "dt": 1.0})
    assert r.status_code == 422
    assert r.json()["kind"] == "engine-accuracy"


def test_run_grid_accuracy_check_can_be_waived(client):
    sched = {"steps": [{"kind": "gate_half_period", "gate": "NOT"}]}
    r = client.post("/run", json={"schedule": sched, "engine": "grid",
                                  "grid_nodes": 256, "dt": 1.0,
                                  "check_accuracy": False})
    assert r.status_code == 200


# --------------------------------------------------------------------------
# programs and verification


def test_program_endpoint(client):
    prog = [
        {"op": "prepare", "qubit": "a", "bit": 0},
        {"op": "gate", "qubit": "a", "gate": "NOT"},
        {"op": "readout", "qubit": "a"},
    ]
    r = client.post("/program", json={"program": prog, "grid_nodes": 512})
    assert r.status_code == 200
    body = r.json()
    assert body["ops"][2]["bit"] == 1
    assert len(body["global_phase_log"]) == 1


def test_program_superposed_cnot_maps_to_409(client):
    prog = [
        {"op": "prepare", "qubit": "c", "bit": 0},
        {"op": "prepare", "qubit": "t", "bit": 0},
        {"op": "gate", "qubit": "c", "gate": "HADAMARD"},
        {"op": "cnot", "control": "c", "target": "t"},
    ]
    r = client.post("/program", json={"program": prog, "grid_nodes": 512})
    assert r.status_code == 409
    assert r.json()["kind"] == "physics-contract"


def test_program_unknown_op_maps_to_400(client):
    r = client.post("/program", json={"program": [{"op": "warp"}],
                                      "grid_nodes": 512})
    assert r.status_code == 400
    assert r.json()["kind"] == "parse"


def test_verify_endpoint_single_criterion(client):
    r = client.post("/verify", json={"level": "quick", "criteria": [4]})
    assert r.status_code == 200
    body = r.json()
    assert body["all_passed"] is True
    assert len(body["results"]) == 1
    assert body["results"][0]["number"] == 4
    assert len(body["lines"]) == 2  # per-criterion line + summary
    assert body["lines"][0].startswith("[PASS] criterion 4")
    assert body["lines"][-1].startswith("ALL PASS")
