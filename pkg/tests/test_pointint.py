"""Junction boundary condition: scattering amplitudes and trap spectra."""
import math

import numpy as np
import pytest

from qabacus.errors import PhysicsContractError
from qabacus.pointint import (
    PointInteraction,
    SpectrumResult,
    connection_residual,
    fd_oracle_levels,
    robin_levels,
    scattering_amplitudes,
    spectrum,
)
from qabacus.su2 import (
    HADAMARD,
    IDENTITY,
    MINUS_IDENTITY,
    PAULI_X,
    PAULI_Z,
    conjugate,
    random_bloch,
    random_unitary,
)

# independent finite-difference oracle at 8192 nodes, frozen: first levels of
# the theta = pi/2 Robin ladder in units of hbar omega (value at 4096 nodes
# differs in the 5th decimal, so the analytic solver must land within 5e-5)
PI_HALF_LEVELS_FD_8192 = [-0.3424191853, 2.2207690870, 4.2912249318, 6.3257725556]


def test_point_interaction_validation():
    p = PointInteraction(PAULI_X, 1.0)
    assert p.l0 == 1.0
    with pytest.raises(ValueError):
        PointInteraction(PAULI_X, -1.0)
    with pytest.raises(ValueError):
        PointInteraction(np.diag([1.0, 2.0]), 1.0)


def test_connection_residual_robin_data():
    # per-side Robin data psi' = -tan(theta/2)/l0 psi satisfies the condition
    th_p, th_m = 0.4, 2.0
    u = np.diag([np.exp(1j * th_p), np.exp(1j * th_m)])
    p = PointInteraction(u, 1.0)
    psi0 = np.array([0.7 + 0.1j, -0.3 + 0.9j])
    dpsi0 = -np.array([math.tan(th_p / 2.0), math.tan(th_m / 2.0)]) * psi0
    assert connection_residual(p, psi0, dpsi0) < 1e-14
    assert connection_residual(p, psi0, -dpsi0) > 1e-2


def test_scattering_free_and_walls():
    # sigma_1 glues the half lines into a free line: full transmission
    for k in (0.3, 1.0, 7.7):
        amp = scattering_amplitudes(PAULI_X, k)
        assert abs(amp.transmission - 1.0) < 1e-12
        assert abs(amp.r_lr) < 1e-12
    # +/-I and sigma_3 are separating: no transmission, unimodular reflection
    for gate in (IDENTITY, MINUS_IDENTITY, PAULI_Z):
        amp = scattering_amplitudes(gate, 2.1)
        assert abs(amp.t_lr) < 1e-12 and abs(amp.t_rl) < 1e-12
        assert abs(abs(amp.r_lr) - 1.0) < 1e-12


def test_scattering_hadamard_flat_half():
    for k in np.geomspace(1e-3, 1e3, 25):
        amp = scattering_amplitudes(HADAMARD, float(k))
        assert abs(amp.transmission - 0.5) < 1e-12
        assert amp.unitarity_residual() < 1e-12


def test_scattering_unitarity_and_reciprocity_seeded():
    rng = np.random.default_rng(19)
    for _ in range(25):
        gate = random_unitary(rng)
        k = float(rng.uniform(0.05, 20.0))
        amp = scattering_amplitudes(gate, k)
        assert amp.unitarity_residual() < 1e-12
        assert abs(abs(amp.t_lr) - abs(amp.t_rl)) < 1e-12, "transmission reciprocity"
    with pytest.raises(ValueError):
        scattering_amplitudes(HADAMARD, 0.0)


def test_robin_levels_exact_special_ladders():
    assert np.array_equal(robin_levels(0.0, 6).levels, np.arange(6) * 2.0 + 0.5)
    assert np.array_equal(robin_levels(math.pi, 6).levels, np.arange(6) * 2.0 + 1.5)


def test_robin_levels_pi_half_against_frozen_fd():
    an = robin_levels(math.pi / 2.0, 4)
    assert np.abs(an.levels - np.array(PI_HALF_LEVELS_FD_8192)).max() < 5e-5
    assert np.abs(an.residuals).max() < 1e-10


def test_robin_levels_deep_state_branch():
    # theta just below pi binds at kappa ~ cot((pi - theta)/2): E ~ -kappa^2/2
    lv = robin_levels(math.pi - 0.2, 3)
    kappa = 1.0 / math.tan(0.1)
    assert lv.levels[0] == pytest.approx(-0.5 * kappa * kappa, rel=1e-3)
    assert np.abs(lv.residuals).max() < 1e-9
    assert np.all(np.diff(lv.levels) > 0)
    # excited levels squeeze toward the Dirichlet ladder from below
    assert 1.5 < lv.levels[1] < 2.5


def test_fd_oracle_converges_quadratically():
    th = 2.2
    exact = robin_levels(th, 5).levels
    e1 = np.abs(fd_oracle_levels(th, 5, nodes=1024).levels - exact)
    e2 = np.abs(fd_oracle_levels(th, 5, nodes=2048).levels - exact)
    ratios = e1[e1 > 1e-12] / e2[e1 > 1e-12]
    assert 3.0 < np.median(ratios) < 5.0


def test_fd_oracle_rejects_coarse_grid():
    with pytest.raises(ValueError):
        fd_oracle_levels(1.0, 4, nodes=256)


def test_spectrum_bloch_is_full_ladder():
    rng = np.random.default_rng(23)
    for gate in (PAULI_X, PAULI_Z, HADAMARD, random_bloch(rng).gate()):
        sp = spectrum(gate, count=7)
        assert np.array_equal(sp.levels, np.arange(7) + 0.5)
        assert sp.boundary == "scale_invariant_bloch"


def test_spectrum_identity_gates_double_ladders():
    sp = spectrum(IDENTITY, count=6)
    assert np.abs(sp.levels - np.array([0.5, 0.5, 2.5, 2.5, 4.5, 4.5])).max() < 1e-9
    sm = spectrum(MINUS_IDENTITY, count=4)
    assert np.abs(sm.levels - np.array([1.5, 1.5, 3.5, 3.5])).max() < 1e-9


def test_spectrum_diagonal_merges_side_ladders():
    th_p, th_m = 0.9, 2.4
    u = np.diag([np.exp(1j * th_p), np.exp(1j * th_m)])
    merged = spectrum(u, count=8).levels
    manual = np.sort(np.concatenate([robin_levels(th_p, 8).levels,
                                     robin_levels(th_m, 8).levels]))[:8]
    assert np.abs(merged - manual).max() < 1e-12


def test_spectrum_invariant_under_conjugation():
    rng = np.random.default_rng(29)
    th_p, th_m = 0.8, 2.9
    u = np.diag([np.exp(1j * th_p), np.exp(1j * th_m)])
    for _ in range(3):
        w = conjugate(u, random_unitary(rng))
        assert np.abs(spectrum(w, count=6).levels
                      - spectrum(u, count=6).levels).max() < 1e-9


def test_spectrum_fd_route_cross_checks_analytic():
    u = np.diag([np.exp(0.7j), np.exp(2.1j)])
    an = spectrum(u, count=6)
    fd = spectrum(u, count=6, method="fd")
    assert np.abs(an.levels - fd.levels).max() < 1e-4
    assert fd.method == "finite_difference"


def test_spectrum_result_requires_ascending():
    with pytest.raises(ValueError):
        SpectrumResult(levels=np.array([1.0, 0.5]),
                       residuals=np.zeros(2), boundary="x", method="analytic")


def test_spectrum_result_csv(tmp_path):
    sp = robin_levels(0.0, 3)
    path = tmp_path / "levels.csv"
    sp.to_csv(path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "index,E_over_hbar_omega,residual"
    assert lines[1].startswith("0,0.5,")
