"""Grids, trap eigenfunctions, and modal projections."""
import math

import numpy as np
import pytest

from qabacus.config import DEFAULT_CONFIG, PhysicalConfig
from qabacus.errors import PhysicsContractError
from qabacus.oscillator import (
    GridState,
    ModalWorkspace,
    eigenfunction,
    ho_wavefunction,
    ho_wavefunction_deriv,
    ho_wavefunction_table,
    make_grid,
    modal_energy,
    project,
    synthesize,
)
from qabacus.su2 import HADAMARD, IDENTITY, MINUS_IDENTITY, PAULI_X, random_unitary

CFG = DEFAULT_CONFIG


def test_make_grid_staggered_midpoints():
    g = make_grid(CFG, 256)
    assert g.x[0] == pytest.approx(g.h / 2.0)
    assert np.abs(np.diff(g.x) - g.h).max() < 1e-15
    assert g.x[-1] == pytest.approx(g.x_max - g.h / 2.0)
    with pytest.raises(ValueError):
        make_grid(CFG, 4)


def test_hermite_table_orthonormal_on_line():
    # quadrature over the symmetric line: midpoint sums of u_n u_m
    g = make_grid(CFG, 2048)
    tab = ho_wavefunction_table(40, g.x)
    gram = 2.0 * g.h * (tab @ tab.T)  # even/odd split makes cross terms vanish
    par = (-1.0) ** np.arange(40)
    same_parity = (par[:, None] * par[None, :]) > 0
    expect = np.where(same_parity, np.eye(40), gram)
    assert np.abs(gram - expect).max() < 1e-10


def test_ho_wavefunction_satisfies_ode():
    # -hbar^2/2m u'' + (1/2) m w^2 x^2 u = E u, checked by finite differences
    x = np.linspace(0.3, 4.0, 200)
    dx = 1e-5
    for n in (0, 1, 5, 17):
        u = ho_wavefunction(n, x)
        upp = (ho_wavefunction(n, x + dx) - 2.0 * u + ho_wavefunction(n, x - dx)) / dx**2
        lhs = -0.5 * upp + 0.5 * x * x * u
        assert np.abs(lhs - (n + 0.5) * u).max() < 1e-5


def test_ho_wavefunction_deriv_matches_difference():
    x = np.linspace(0.1, 5.0, 100)
    h = 1e-6
    for n in (0, 3, 12):
        d = ho_wavefunction_deriv(n, x)
        fd = (ho_wavefunction(n, x + h) - ho_wavefunction(n, x - h)) / (2.0 * h)
        assert np.abs(d - fd).max() < 1e-8


def test_modal_energy_ladders():
    for n in range(12):
        assert modal_energy(HADAMARD, n) == pytest.approx((n + 0.5) * CFG.hbar * CFG.omega)
    # +/-I keep only one parity per side: even indices on +, odd on -
    assert modal_energy(IDENTITY, 0) == pytest.approx(0.5)
    assert modal_energy(IDENTITY, 1) == pytest.approx(0.5)
    assert modal_energy(IDENTITY, 2) == pytest.approx(2.5)
    assert modal_energy(MINUS_IDENTITY, 0) == pytest.approx(1.5)
    assert modal_energy(MINUS_IDENTITY, 3) == pytest.approx(3.5)


def test_eigenfunction_normalization_and_boundary():
    g = make_grid(CFG, 4096)
    for gate in (HADAMARD, PAULI_X, IDENTITY, MINUS_IDENTITY):
        for n in (0, 1, 4, 9):
            phi = eigenfunction(gate, n, g.x)
            norm = g.h * float(np.sum(np.abs(phi) ** 2))
            assert abs(norm - 1.0) < 1e-8, f"{gate!r} mode {n} norm {norm}"
    with pytest.raises(PhysicsContractError):
        eigenfunction(np.diag([np.exp(0.3j), np.exp(1.0j)]), 0, g.x)


def test_grid_state_norm_inner_sides():
    g = make_grid(CFG, 512)
    f = np.exp(-0.5 * ((g.x - 3.0) / 0.4) ** 2)
    f /= math.sqrt(g.h * float(np.sum(f * f)))
    s = GridState(g, f, np.zeros_like(f))
    assert s.norm() == pytest.approx(1.0)
    p, m = s.side_populations()
    assert p == pytest.approx(1.0) and m == pytest.approx(0.0)
    t = GridState(g, np.zeros_like(f), 1j * f)
    assert abs(s.inner(t)) < 1e-15
    both = GridState(g, f / math.sqrt(2.0), 1j * f / math.sqrt(2.0))
    assert both.norm_sq() == pytest.approx(1.0)


def test_apply_pointwise_mirror_swaps_exactly():
    g = make_grid(CFG, 256)
    a = np.sin(g.x) + 0.2j * g.x
    b = np.cos(g.x)
    s = GridState(g, a, b)
    sw = s.apply_pointwise(PAULI_X.m)
    assert np.array_equal(sw.psi_plus, s.psi_minus)
    assert np.array_equal(sw.psi_minus, s.psi_plus)
    assert sw.norm() == pytest.approx(s.norm())


def test_grid_state_csv_round_trip(tmp_path):
    g = make_grid(CFG, 128)
    s = GridState(g, np.exp(1j * g.x), np.exp(-0.5 * g.x))
    path = tmp_path / "state.csv"
    s.to_csv(path)
    back = GridState.from_csv(path)
    assert np.abs(back.psi_plus - s.psi_plus).max() < 1e-15
    assert np.abs(back.psi_minus - s.psi_minus).max() < 1e-15
    assert back.grid.h == pytest.approx(g.h)


def test_workspace_requires_even_mode_count():
    g = make_grid(CFG, 256)
    with pytest.raises(ValueError):
        ModalWorkspace(grid=g, n_modes=7)


def _bump_state(grid, rng):
    ell = grid.cfg.ell
    f = np.exp(-0.5 * ((grid.x - 3.0 * ell) / (0.375 * ell)) ** 2)
    f /= math.sqrt(grid.h * float(np.sum(f * f)))
    z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    z /= np.linalg.norm(z)
    return GridState(grid, z[0] * f, z[1] * f)


def test_project_synthesize_round_trip_all_classes():
    rng = np.random.default_rng(7)
    g = make_grid(CFG, 2048)
    for gate in (HADAMARD, PAULI_X, IDENTITY, MINUS_IDENTITY):
        s = _bump_state(g, rng)
        ms = project(s, gate, normalize=False)
        back = synthesize(ms, g)
        d = math.sqrt(g.h * float(np.sum(np.abs(back.psi_plus - s.psi_plus) ** 2)
                                  + np.sum(np.abs(back.psi_minus - s.psi_minus) ** 2)))
        assert d < 1e-10, f"{gate!r}: round trip {d:.2e}"
        assert abs(ms.truncation_loss) < 1e-10


def test_projection_rejects_generic_gate():
    rng = np.random.default_rng(9)
    g = make_grid(CFG, 256)
    s = _bump_state(g, rng)
    with pytest.raises(PhysicsContractError):
        project(s, random_unitary(rng))


def test_truncation_loss_reports_escaped_weight():
    # a state far outside the basis's reach leaves weight behind
    g = make_grid(CFG, 2048)
    f = np.exp(-0.5 * ((g.x - 3.0) / 0.05) ** 2)  # very narrow -> broad spectrum
    f /= math.sqrt(g.h * float(np.sum(f * f)))
    s = GridState(g, f, np.zeros_like(f))
    with pytest.warns(UserWarning, match="truncation loss"):
        ms = project(s, HADAMARD, n_modes=32, normalize=False)
    assert ms.truncation_loss > 0.01


def test_modal_norm_preserved_under_projection():
    rng = np.random.default_rng(13)
    g = make_grid(CFG, 2048)
    s = _bump_state(g, rng)
    ms = project(s, HADAMARD, normalize=False)
    assert float(np.sum(np.abs(ms.coefficients) ** 2)) == pytest.approx(
        s.norm_sq(), abs=1e-10)


def test_custom_config_scales():
    cfg = PhysicalConfig(mass=2.0, omega=3.0, hbar=0.5, l0=0.7)
    assert cfg.ell == pytest.approx(math.sqrt(0.5 / (2.0 * 3.0)))
    assert cfg.tau == pytest.approx(math.pi / 3.0)
    g = make_grid(cfg, 512)
    u0 = ho_wavefunction(0, g.x, cfg)
    norm = 2.0 * g.h * float(np.sum(u0 * u0))
    assert abs(norm - 1.0) < 1e-8
