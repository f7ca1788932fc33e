"""Harmonic-trap eigenfunctions and the two-component state representations.

States live on the half line x > 0 as pairs Psi = (psi_plus, psi_minus),
psi_plus(x) = psi(x) and psi_minus(x) = psi(-x).  The inner product is
int_0^inf (conj(a_plus) b_plus + conj(a_minus) b_minus) dx.

Junction eigenfunctions for a scale-invariant gate U = V^-1 sz V are
Phi_n^U = V^-1 Phi_n^sz with

    Phi_n^sz = (sqrt2 u_n, 0)   n even      (open side, Neumann ladder)
             = (0, -sqrt2 u_n)  n odd       (mirror side, Dirichlet ladder)

where u_n are the full-line oscillator eigenfunctions; the modal energy is
(n + 1/2) hbar omega.  For U = +/-I the two sides decouple and the basis
interleaves them: index 2k holds the plus side, 2k+1 the minus side, both at
energy (2k + 1/2) hbar omega (+I, Neumann) or (2k + 3/2) hbar omega (-I,
Dirichlet).

The grid is staggered: nodes sit at midpoints x_j = (j - 1/2) h so the
junction at x = 0 lies half a step before the first node.  Uniform weights h
then integrate even-parity products with all odd Euler-Maclaurin corrections
vanishing, and the ghost-node interface of the grid engine is second order.
"""
from __future__ import annotations

import math
import warnings
from contextlib import nullcontext
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_CONFIG, DEFAULT_GRID_NODES, DEFAULT_N_MODES, DEFAULT_XMAX_ELL, TOL, PhysicalConfig
from .errors import PhysicsContractError
from .su2 import GateClass, UnitaryGate, as_gate, classify, diagonalize

__all__ = [
    "ho_wavefunction",
    "ho_wavefunction_deriv",
    "ho_wavefunction_table",
    "Grid",
    "make_grid",
    "GridState",
    "ModalState",
    "ModalWorkspace",
    "eigenfunction",
    "modal_energy",
    "project",
    "synthesize",
]

_MAX_MODE = 200


def _hermite_functions(n_max: int, xi: np.ndarray) -> np.ndarray:
    """Normalized Hermite functions phi_0..phi_{n_max-1} at the points xi.

    Stable premultiplied recurrence:
        phi_0 = pi^(-1/4) exp(-xi^2 / 2)
        phi_1 = sqrt(2) xi phi_0
        phi_{n+1} = sqrt(2/(n+1)) xi phi_n - sqrt(n/(n+1)) phi_{n-1}
    Entries that underflow stay at zero, so the table is overflow-safe for
    n <= 200 at |xi| <= 20.
    """
    xi = np.asarray(xi, dtype=float)
    out = np.zeros((n_max, xi.size), dtype=float)
    if n_max == 0:
        return out
    p0 = math.pi ** -0.25 * np.exp(-0.5 * xi * xi)
    out[0] = p0
    if n_max == 1:
        return out
    out[1] = math.sqrt(2.0) * xi * p0
    for n in range(1, n_max - 1):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * xi * out[n] - math.sqrt(n / (n + 1.0)) * out[n - 1]
    return out


def _check_mode_index(n: int) -> int:
    n = int(n)
    if n < 0 or n > _MAX_MODE:
        raise ValueError(f"mode index must be in [0, {_MAX_MODE}], got {n}")
    return n


def ho_wavefunction(n: int, x, cfg: PhysicalConfig = DEFAULT_CONFIG):
    """Full-line trap eigenfunction u_n(x), L2-normalized on the whole line.

    u_n(x) = phi_n(x / ell) / sqrt(ell) with the recurrence above; real, and
    with the conventional positive leading coefficient (u_n(x) > 0 as
    x -> +inf before the Gaussian cuts off).
    """
    n = _check_mode_index(n)
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    ell = cfg.ell
    tab = _hermite_functions(n + 1, xa / ell)
    vals = tab[n] / math.sqrt(ell)
    return vals if np.ndim(x) else float(vals[0])


def ho_wavefunction_deriv(n: int, x, cfg: PhysicalConfig = DEFAULT_CONFIG):
    """d u_n / dx, via phi_n' (xi) = sqrt(2n) phi_{n-1} - xi phi_n."""
    n = _check_mode_index(n)
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    ell = cfg.ell
    xi = xa / ell
    tab = _hermite_functions(n + 1, xi)
    dphi = -xi * tab[n]
    if n > 0:
        dphi = dphi + math.sqrt(2.0 * n) * tab[n - 1]
    vals = dphi / ell ** 1.5
    return vals if np.ndim(x) else float(vals[0])


def ho_wavefunction_table(n_max: int, x, cfg: PhysicalConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Rows u_0 .. u_{n_max-1} evaluated at x; shape (n_max, len(x))."""
    if n_max < 1 or n_max > _MAX_MODE + 1:
        raise ValueError(f"n_max must be in [1, {_MAX_MODE + 1}], got {n_max}")
    xa = np.asarray(x, dtype=float)
    return _hermite_functions(n_max, xa / cfg.ell) / math.sqrt(cfg.ell)


@dataclass(frozen=True)
class Grid:
    """Uniform staggered grid on (0, x_max]: x_j = (j - 1/2) h, j = 1..nodes."""

    x: np.ndarray
    h: float
    x_max: float
    cfg: PhysicalConfig

    @property
    def nodes(self) -> int:
        return self.x.size

    @property
    def weights(self) -> np.ndarray:
        """Quadrature weights (midpoint rule: uniform h)."""
        return np.full(self.x.size, self.h)

    def integrate(self, values) -> complex:
        return self.h * complex(np.sum(values))

    def key(self) -> tuple:
        return (self.nodes, self.x_max, self.cfg)


def make_grid(cfg: PhysicalConfig = DEFAULT_CONFIG, nodes: int = DEFAULT_GRID_NODES,
              x_max: float | None = None) -> Grid:
    if nodes < 8:
        raise ValueError("grid needs at least 8 nodes")
    if x_max is None:
        x_max = DEFAULT_XMAX_ELL * cfg.ell
    if x_max <= 0:
        raise ValueError("x_max must be positive")
    h = x_max / nodes
    x = (np.arange(nodes) + 0.5) * h
    x.setflags(write=False)
    return Grid(x=x, h=h, x_max=x_max, cfg=cfg)


@dataclass
class GridState:
    """Two-component wavefunction sampled on a Grid."""

    grid: Grid
    psi_plus: np.ndarray
    psi_minus: np.ndarray

    def __post_init__(self):
        self.psi_plus = np.asarray(self.psi_plus, dtype=complex)
        self.psi_minus = np.asarray(self.psi_minus, dtype=complex)
        if self.psi_plus.shape != self.grid.x.shape or self.psi_minus.shape != self.grid.x.shape:
            raise ValueError("component arrays must match the grid")

    def stack(self) -> np.ndarray:
        return np.vstack([self.psi_plus, self.psi_minus])

    def norm_sq(self) -> float:
        h = self.grid.h
        return float(h * (np.vdot(self.psi_plus, self.psi_plus).real
                          + np.vdot(self.psi_minus, self.psi_minus).real))

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())

    def normalized(self) -> "GridState":
        n = self.norm()
        if n < 1e-300:
            raise ValueError("cannot normalize a null state")
        return GridState(self.grid, self.psi_plus / n, self.psi_minus / n)

    def inner(self, other: "GridState") -> complex:
        """<self, other> with the quadrature weights."""
        h = self.grid.h
        return complex(h * (np.vdot(self.psi_plus, other.psi_plus)
                            + np.vdot(self.psi_minus, other.psi_minus)))

    def side_populations(self) -> tuple[float, float]:
        """(p_plus, p_minus): quadrature weight of each component."""
        h = self.grid.h
        return (float(h * np.vdot(self.psi_plus, self.psi_plus).real),
                float(h * np.vdot(self.psi_minus, self.psi_minus).real))

    def apply_pointwise(self, m) -> "GridState":
        """Apply a 2x2 matrix to the two components at every node."""
        mm = np.asarray(m, dtype=complex)
        s = mm @ self.stack()
        return GridState(self.grid, s[0], s[1])

    def copy(self) -> "GridState":
        return GridState(self.grid, self.psi_plus.copy(), self.psi_minus.copy())

    # -- CSV round trip (columns: x, re/im of each component) ----------------

    def to_csv(self, path) -> None:
        cm = (nullcontext(path) if hasattr(path, "write")
              else open(path, "w", encoding="ascii"))
        with cm as fh:
            fh.write("x,re_psi_plus,im_psi_plus,re_psi_minus,im_psi_minus\n")
            for x, p, m in zip(self.grid.x, self.psi_plus, self.psi_minus):
                fh.write(f"{x:.17g},{p.real:.17g},{p.imag:.17g},{m.real:.17g},{m.imag:.17g}\n")

    @classmethod
    def from_csv(cls, path, cfg: PhysicalConfig = DEFAULT_CONFIG) -> "GridState":
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        if data.ndim != 2 or data.shape[1] != 5:
            raise ValueError("expected columns x, re+, im+, re-, im-")
        x = data[:, 0]
        h = 2.0 * x[0]
        if np.abs(np.diff(x) - h).max() > 1e-9 * h:
            raise ValueError("grid samples are not a uniform staggered grid")
        grid = Grid(x=x, h=h, x_max=float(x[-1] + h / 2.0), cfg=cfg)
        return cls(grid, data[:, 1] + 1j * data[:, 2], data[:, 3] + 1j * data[:, 4])


def _family_class(gate) -> GateClass:
    cls = classify(gate)
    if cls not in (GateClass.SCALE_INVARIANT_BLOCH, GateClass.PLUS_IDENTITY,
                   GateClass.MINUS_IDENTITY):
        raise PhysicsContractError(
            "junction eigenbasis exists only for the scale-invariant family "
            f"(Bloch matrices and +/-I); got class {cls.value}")
    return cls


def modal_energy(gate, n: int, cfg: PhysicalConfig = DEFAULT_CONFIG) -> float:
    """Energy attached to modal index n of the given junction gate."""
    cls = _family_class(gate)
    hw = cfg.hbar * cfg.omega
    if cls is GateClass.SCALE_INVARIANT_BLOCH:
        return (n + 0.5) * hw
    k = n // 2
    if cls is GateClass.PLUS_IDENTITY:
        return (2 * k + 0.5) * hw
    return (2 * k + 1.5) * hw


def _sigma3_eigenfunction(n: int, x, cfg: PhysicalConfig) -> np.ndarray:
    u = ho_wavefunction(n, x, cfg)
    u = np.atleast_1d(np.asarray(u))
    z = np.zeros_like(u)
    if n % 2 == 0:
        return np.vstack([math.sqrt(2.0) * u, z])
    return np.vstack([z, -math.sqrt(2.0) * u])


def eigenfunction(gate, n: int, x, cfg: PhysicalConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Junction eigenfunction Phi_n^U evaluated at x > 0; shape (2, len(x)).

    Normalized so that int_0^inf (|Phi_+|^2 + |Phi_-|^2) dx = 1.
    """
    n = _check_mode_index(n)
    cls = _family_class(gate)
    if cls is GateClass.SCALE_INVARIANT_BLOCH:
        v, _ = diagonalize(gate)
        base = _sigma3_eigenfunction(n, x, cfg).astype(complex)
        return v.dagger @ base
    k = n // 2
    idx = 2 * k if cls is GateClass.PLUS_IDENTITY else 2 * k + 1
    u = math.sqrt(2.0) * np.atleast_1d(np.asarray(ho_wavefunction(idx, x, cfg)))
    z = np.zeros_like(u)
    comps = (u, z) if n % 2 == 0 else (z, u)
    return np.vstack(comps).astype(complex)


@dataclass
class ModalState:
    """Coefficients over the junction eigenbasis of basis_gate.

    Coefficients are kept at unit modal norm; truncation_loss records the
    quadrature weight that fell outside the basis at projection time.
    """

    basis_gate: UnitaryGate
    coefficients: np.ndarray
    truncation_loss: float = 0.0

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=complex)
        if self.coefficients.ndim != 1 or self.coefficients.size == 0:
            raise ValueError("coefficients must be a nonempty 1-d array")

    @property
    def n_modes(self) -> int:
        return self.coefficients.size

    def norm_sq(self) -> float:
        return float(np.vdot(self.coefficients, self.coefficients).real)


class ModalWorkspace:
    """Shared tables for projecting grid states onto junction eigenbases.

    Holds the oscillator-function table on one grid; per-gate work reduces to
    a 2x2 rotation of the components plus fixed real matrix products, so any
    Bloch gate reuses the same table.
    """

    def __init__(self, cfg: PhysicalConfig = DEFAULT_CONFIG, grid: Grid | None = None,
                 n_modes: int = DEFAULT_N_MODES):
        if n_modes < 2 or n_modes % 2:
            raise ValueError("n_modes must be even and >= 2 (the basis interleaves two "
                             "index-parity ladders)")
        self.cfg = cfg
        self.grid = grid if grid is not None else make_grid(cfg)
        self.n_modes = int(n_modes)
        self.utab = ho_wavefunction_table(self.n_modes, self.grid.x, cfg)
        self._ueven = self.utab[0::2]
        self._uodd = self.utab[1::2]
        self._vcache: dict[bytes, tuple[GateClass, np.ndarray | None]] = {}

    def _gate_info(self, gate) -> tuple[GateClass, np.ndarray | None]:
        g = as_gate(gate)
        key = g.m.tobytes()
        hit = self._vcache.get(key)
        if hit is not None:
            return hit
        cls = _family_class(g)
        v = diagonalize(g)[0].m if cls is GateClass.SCALE_INVARIANT_BLOCH else None
        self._vcache[key] = (cls, v)
        return cls, v

    def project(self, state: GridState, gate, *, normalize: bool = True) -> ModalState:
        """Expand a grid state in the eigenbasis of `gate`.

        Truncation loss (input weight outside the basis span) is recorded on
        the result; losses above the policy threshold warn but never raise.
        """
        if state.grid.key() != self.grid.key():
            raise ValueError("state grid does not match workspace grid")
        cls, v = self._gate_info(gate)
        h = self.grid.h
        s = state.stack()
        a = np.empty(self.n_modes, dtype=complex)
        r2 = math.sqrt(2.0)
        if cls is GateClass.SCALE_INVARIANT_BLOCH:
            w = v @ s
            a[0::2] = r2 * h * (self._ueven @ w[0])
            a[1::2] = -r2 * h * (self._uodd @ w[1])
        else:
            tab = self._ueven if cls is GateClass.PLUS_IDENTITY else self._uodd
            half = self.n_modes // 2
            a[0::2] = r2 * h * (tab[: self.n_modes - half] @ s[0])
            a[1::2] = r2 * h * (tab[:half] @ s[1])
        nrm2 = float(np.vdot(a, a).real)
        loss = state.norm_sq() - nrm2
        if loss > TOL.truncation_warn:
            warnings.warn(f"modal truncation loss {loss:.3e} exceeds {TOL.truncation_warn:.1e}",
                          stacklevel=2)
        if normalize:
            if nrm2 < 1e-300:
                raise ValueError("state has no weight inside the modal basis")
            a = a / math.sqrt(nrm2)
        return ModalState(basis_gate=as_gate(gate), coefficients=a, truncation_loss=loss)

    def synthesize(self, modal: ModalState) -> GridState:
        a = modal.coefficients
        if a.size > self.n_modes:
            raise ValueError("modal state exceeds workspace mode count")
        cls, v = self._gate_info(modal.basis_gate)
        r2 = math.sqrt(2.0)
        ne = a[0::2].size
        no = a[1::2].size
        if cls is GateClass.SCALE_INVARIANT_BLOCH:
            w0 = r2 * (a[0::2] @ self._ueven[:ne])
            w1 = -r2 * (a[1::2] @ self._uodd[:no])
            s = v.conj().T @ np.vstack([w0, w1])
            return GridState(self.grid, s[0], s[1])
        tab = self._ueven if cls is GateClass.PLUS_IDENTITY else self._uodd
        return GridState(self.grid,
                         r2 * (a[0::2] @ tab[:ne]),
                         r2 * (a[1::2] @ tab[:no]))


_default_workspace: ModalWorkspace | None = None


def default_workspace() -> ModalWorkspace:
    global _default_workspace
    if _default_workspace is None:
        _default_workspace = ModalWorkspace()
    return _default_workspace


def project(state: GridState, gate, n_modes: int = DEFAULT_N_MODES,
            workspace: ModalWorkspace | None = None, *,
            normalize: bool = True) -> ModalState:
    """Module-level convenience over ModalWorkspace.project."""
    ws = _resolve_workspace(state.grid, n_modes, workspace)
    return ws.project(state, gate, normalize=normalize)


def synthesize(modal: ModalState, grid: Grid | None = None,
               workspace: ModalWorkspace | None = None) -> GridState:
    """Evaluate a modal state on a grid (the workspace grid by default)."""
    if workspace is None:
        if grid is None:
            grid = default_workspace().grid
        workspace = _resolve_workspace(grid, modal.n_modes + (modal.n_modes & 1), None)
    return workspace.synthesize(modal)


_ws_cache: dict[tuple, ModalWorkspace] = {}


def _resolve_workspace(grid: Grid, n_modes: int, workspace: ModalWorkspace | None) -> ModalWorkspace:
    if workspace is not None:
        if workspace.grid.key() != grid.key():
            raise ValueError("workspace grid mismatch")
        if workspace.n_modes < n_modes:
            raise ValueError("workspace has fewer modes than requested")
        return workspace
    key = grid.key() + (n_modes,)
    ws = _ws_cache.get(key)
    if ws is None:
        ws = ModalWorkspace(cfg=grid.cfg, grid=grid, n_modes=n_modes)
        _ws_cache[key] = ws
    return ws
