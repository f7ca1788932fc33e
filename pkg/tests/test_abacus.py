"""Tests for the qubit layer: profiles, readout, compilation, CNOT, programs."""
import json
import math

import numpy as np
import pytest

from qabacus.abacus import (
    DEFAULT_BUMP_CENTER_ELL,
    DEFAULT_CNOT_THRESHOLD,
    CompiledGate,
    apply_gate,
    bump_profile,
    classical_run,
    cnot_trigger,
    compile_gate,
    ground_profile,
    prepare,
    readout,
    run_program,
)
from qabacus.config import DEFAULT_CONFIG
from qabacus.errors import PhysicsContractError, ScheduleParseError
from qabacus.evolve import run_schedule
from qabacus.oscillator import GridState, make_grid
from qabacus.su2 import HADAMARD, PAULI_X, UnitaryGate, random_unitary

CFG = DEFAULT_CONFIG
GRID = make_grid(CFG, 1024)


def _l2(a: GridState, b: GridState) -> float:
    return math.sqrt(
        GRID.h * float(np.sum(np.abs(a.psi_plus - b.psi_plus) ** 2
                              + np.abs(a.psi_minus - b.psi_minus) ** 2)))


# --------------------------------------------------------------------------
# profiles and preparation


def test_bump_profile_norm_and_placement():
    f = bump_profile(GRID)
    assert abs(GRID.h * float(np.sum(f * f)) - 1.0) < 1e-12
    peak = GRID.x[np.argmax(f)]
    assert abs(peak - DEFAULT_BUMP_CENTER_ELL * CFG.ell) < GRID.h
    # decayed at both the junction and the grid edge
    assert abs(f[0]) < 1e-12 and abs(f[-1]) < 1e-12


def test_bump_profile_validates_geometry():
    with pytest.raises(ValueError):
        bump_profile(GRID, center=GRID.x_max * 2)
    with pytest.raises(ValueError):
        bump_profile(GRID, center=-1.0)
    with pytest.raises(ValueError):
        bump_profile(GRID, center=3.0, width=0.0)


def test_ground_profile_is_renormalized_ground_state():
    f = ground_profile(GRID)
    assert abs(GRID.h * float(np.sum(f * f)) - 1.0) < 1e-12
    # monotone decay away from the origin
    assert np.all(np.diff(f) < 0)


def test_prepare_bits_and_norm():
    q0 = prepare(grid=GRID)
    assert q0.profile_name == "bump"
    assert np.all(q0.state.psi_minus == 0)
    assert abs(q0.state.norm() - 1.0) < 1e-12
    q1 = prepare(bit=1, grid=GRID)
    assert np.all(q1.state.psi_plus == 0)
    assert np.array_equal(q1.state.psi_minus.real, q0.state.psi_plus.real)
    with pytest.raises(ValueError):
        prepare(bit=2, grid=GRID)


def test_prepare_named_profiles_and_overrides():
    q = prepare("bump", grid=GRID, center=2.5 * CFG.ell, width=0.3 * CFG.ell)
    peak = GRID.x[np.argmax(q.profile)]
    assert abs(peak - 2.5 * CFG.ell) < GRID.h
    g = prepare("ground", grid=GRID)
    assert g.profile_name == "ground"
    with pytest.raises(ValueError):
        prepare("ground", grid=GRID, center=2.0)
    with pytest.raises(ValueError):
        prepare("nonsense", grid=GRID)


def test_prepare_custom_profiles():
    q = prepare(lambda x: np.exp(-((x - 4.0) / 0.5) ** 2), grid=GRID)
    assert q.profile_name == "custom"
    assert abs(GRID.h * float(np.sum(q.profile ** 2)) - 1.0) < 1e-12
    arr = np.exp(-0.5 * ((GRID.x - 3.0) / 0.4) ** 2)
    q2 = prepare(7.0 * arr, grid=GRID)  # scale is normalized away
    assert abs(GRID.h * float(np.sum(q2.profile ** 2)) - 1.0) < 1e-12
    with pytest.raises(ValueError):
        prepare(arr * (1 + 0.1j), grid=GRID)
    with pytest.raises(ValueError):
        prepare(np.zeros_like(GRID.x), grid=GRID)


def test_prepare_rejects_profiles_that_reach_the_edge():
    with pytest.raises(ValueError, match="decay"):
        prepare(np.ones_like(GRID.x), grid=GRID)
    with pytest.raises(ValueError, match="decay"):
        # wide Gaussian whose tail is still ~1 at x_max
        prepare(lambda x: np.exp(-((x - 6.0) / 40.0) ** 2), grid=GRID)


def test_prepare_grid_config_mismatch():
    from qabacus.config import PhysicalConfig

    other = make_grid(PhysicalConfig(omega=2.0), 512)
    with pytest.raises(ValueError):
        prepare(grid=other)


def test_readout_of_fresh_qubit():
    ro = readout(prepare(grid=GRID))
    assert ro.bit() == 0
    assert abs(ro.p0 - 1.0) < 1e-12 and ro.p1 < 1e-24
    assert abs(ro.fidelity_plus - 1.0) < 1e-12
    assert ro.fidelity_minus == 1.0  # empty side reads as undeformed


# --------------------------------------------------------------------------
# compilation: every branch realizes recorded_phase * target


def _two_sided(q, a, b) -> GridState:
    f = q.profile.astype(complex)
    return GridState(GRID, a * f, b * f)


def _realized_matches(compiled: CompiledGate, a=0.6 + 0.2j, b=-0.3 + 0.7j):
    s = _two_sided(prepare(grid=GRID), a, b)
    out = run_schedule(compiled.schedule, s, "modal").final
    ea, eb = compiled.recorded_phase * (compiled.target.m @ np.array([a, b]))
    expected = _two_sided(prepare(grid=GRID), ea, eb)
    return _l2(out, expected)


def test_compile_scalar_branch():
    c = compile_gate(UnitaryGate(np.exp(0.7j) * np.eye(2)), CFG)
    assert c.n_steps == 1 and c.n_gate_steps == 0
    assert c.schedule.steps[0].kind == "closed_with_potentials"
    assert c.recorded_phase == 1.0 + 0j
    assert _realized_matches(c) < 1e-10


def test_compile_bloch_branch():
    c = compile_gate(HADAMARD, CFG)
    assert c.n_steps == 1 and c.n_gate_steps == 1
    assert c.schedule.steps[0].kind == "gate_half_period"
    assert c.recorded_phase == -1j
    assert _realized_matches(c) < 1e-10


def test_compile_diagonal_branch():
    c = compile_gate(np.diag([np.exp(0.4j), np.exp(-1.1j)]), CFG)
    assert c.n_steps == 1 and c.n_gate_steps == 0
    assert c.schedule.steps[0].kind == "closed_with_potentials"
    assert c.recorded_phase == 1.0 + 0j
    assert _realized_matches(c) < 1e-10


def test_compile_generic_branch():
    rng = np.random.default_rng(5)
    for _ in range(5):
        u = random_unitary(rng)
        if abs(u.m[0, 1]) < 0.05:  # keep it honestly generic
            continue
        c = compile_gate(u, CFG)
        assert c.n_gate_steps <= 4
        assert c.n_steps == c.n_gate_steps + 1
        assert c.schedule.steps[-1].kind == "closed_with_potentials"
        assert c.recorded_phase == 1.0 + 0j
        assert _realized_matches(c) < 1e-9


def test_compile_budget_over_random_targets():
    rng = np.random.default_rng(6)
    for _ in range(25):
        c = compile_gate(random_unitary(rng), CFG)
        assert c.n_gate_steps <= 4 and c.n_steps <= 5


# --------------------------------------------------------------------------
# apply_gate


def test_apply_gate_accepts_specs_and_compiled():
    q = prepare(grid=GRID)
    q1, res = apply_gate(q, "NOT")
    assert readout(q1).bit() == 1
    assert abs(res.final.norm() - 1.0) < 1e-10
    q2, _ = apply_gate(q1, compile_gate(PAULI_X, CFG))
    assert readout(q2).bit() == 0
    ro = readout(q2)
    assert ro.fidelity_plus > 1 - 1e-9  # profile reproduced after NOT twice


def test_apply_gate_hadamard_splits_evenly():
    q, _ = apply_gate(prepare(grid=GRID), HADAMARD)
    ro = readout(q)
    assert abs(ro.p0 - 0.5) < 1e-10 and abs(ro.p1 - 0.5) < 1e-10
    assert ro.fidelity_plus > 1 - 1e-9 and ro.fidelity_minus > 1 - 1e-9


# --------------------------------------------------------------------------
# classical regime


def test_classical_run_bit_trajectory():
    res = classical_run(["open", "closed", "open", "open"], grid=GRID)
    assert res.bits == [1, 1, 0, 1]
    assert not res.decoherent
    assert len(res.readouts) == 4
    assert readout(res.final).bit() == 1
    assert all(max(ro.p0, ro.p1) > 0.999 for ro in res.readouts)


def test_classical_run_from_one():
    res = classical_run(["open"], bit=1, grid=GRID)
    assert res.bits == [0]


def test_classical_run_rejects_unknown_move():
    with pytest.raises(ValueError, match="open"):
        classical_run(["open", "flip"], grid=GRID)


# --------------------------------------------------------------------------
# the trigger CNOT


def test_cnot_truth_table():
    for cb in (0, 1):
        for tb in (0, 1):
            res = cnot_trigger(prepare(bit=cb, grid=GRID),
                               prepare(bit=tb, grid=GRID))
            assert res.applied == (cb == 0)
            assert readout(res.control).bit() == cb
            assert readout(res.target).bit() == tb ^ (1 - cb)


def test_cnot_rejects_superposed_control():
    c, _ = apply_gate(prepare(grid=GRID), HADAMARD)
    t = prepare(bit=0, grid=GRID)
    with pytest.raises(PhysicsContractError, match="classical"):
        cnot_trigger(c, t)


def test_cnot_threshold_is_the_knob():
    c, _ = apply_gate(prepare(grid=GRID), HADAMARD)
    t = prepare(bit=0, grid=GRID)
    res = cnot_trigger(c, t, threshold=0.45)
    assert res.applied  # p0 = 1/2 clears the lowered threshold
    assert 0 < DEFAULT_CNOT_THRESHOLD < 1


# --------------------------------------------------------------------------
# programs


def test_run_program_end_to_end():
    prog = [
        {"op": "prepare", "qubit": "c", "bit": 0},
        {"op": "prepare", "qubit": "t", "bit": 1},
        {"op": "gate", "qubit": "t", "gate": "NOT"},
        {"op": "cnot", "control": "c", "target": "t"},
        {"op": "readout", "qubit": "c"},
        {"op": "readout", "qubit": "t"},
    ]
    out = run_program(prog, grid=GRID)
    json.dumps(out)  # JSON-able by contract
    assert out["engine"] == "modal"
    recs = out["ops"]
    assert [r["op"] for r in recs] == ["prepare", "prepare", "gate", "cnot",
                                       "readout", "readout"]
    gate_rec = recs[2]
    assert gate_rec["n_steps"] == 1
    assert gate_rec["recorded_phase"] == [0.0, -1.0]
    assert abs(gate_rec["norm"] - 1.0) < 1e-10
    cnot_rec = recs[3]
    assert cnot_rec["applied"] is True
    assert cnot_rec["threshold"] == DEFAULT_CNOT_THRESHOLD
    assert recs[4]["bit"] == 0
    assert recs[5]["bit"] == 1  # NOT then triggered NOT restores |1>
    log = out["global_phase_log"]
    assert len(log) == 1 and log[0]["op_index"] == 2
    sp = complex(*log[0]["schedule_phase"])
    assert abs(sp + 1j) < 1e-9  # one open move contributes -i


def test_run_program_parse_errors():
    with pytest.raises(ScheduleParseError):
        run_program({"op": "prepare"}, grid=GRID)  # not a list
    with pytest.raises(ScheduleParseError):
        run_program([{"qubit": "q"}], grid=GRID)  # missing op
    with pytest.raises(ScheduleParseError):
        run_program([{"op": "prepare"}], grid=GRID)  # missing name
    with pytest.raises(ScheduleParseError):
        run_program([{"op": "warp", "qubit": "q"}], grid=GRID)
    with pytest.raises(ScheduleParseError):
        run_program([{"op": "gate", "qubit": "q", "gate": "NOT"}], grid=GRID)
    with pytest.raises(ScheduleParseError):
        run_program([{"op": "prepare", "qubit": "q"},
                     {"op": "gate", "qubit": "q"}], grid=GRID)
    with pytest.raises(ScheduleParseError):
        run_program([{"op": "prepare", "qubit": "q"},
                     {"op": "gate", "qubit": "q", "gate": "WAT"}], grid=GRID)
    with pytest.raises(ScheduleParseError):
        run_program([{"op": "prepare", "qubit": "q", "bit": 2}], grid=GRID)


def test_run_program_superposed_cnot_is_a_physics_error():
    prog = [
        {"op": "prepare", "qubit": "c", "bit": 0},
        {"op": "prepare", "qubit": "t", "bit": 0},
        {"op": "gate", "qubit": "c", "gate": "HADAMARD"},
        {"op": "cnot", "control": "c", "target": "t"},
    ]
    with pytest.raises(PhysicsContractError):
        run_program(prog, grid=GRID)
