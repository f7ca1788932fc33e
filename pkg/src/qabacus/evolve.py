"""Time evolution engines and schedules.

Two independent engines evolve two-component trap states:

* modal -- expand in the junction eigenbasis and advance the exact
  eigenphases e^{-i E_n t / hbar}.  Exact for the scale-invariant family up
  to basis truncation, valid for any duration, and supporting constant side
  potentials when the sides are separated (gate +/-I) or an overall offset
  otherwise.

* grid -- Crank-Nicolson on the staggered grid, the junction entering only
  through ghost-node elimination of the discretized connection condition.
  It never uses the half-period shortcut, which makes it the independent
  check of the identity "half period under a scale-invariant gate = -i U
  pointwise".

A Schedule is an ordered list of Steps of two kinds:

* gate_half_period(U): hold junction U for exactly one half period tau;
* closed_with_potentials(V+, V-, V0, duration): hold a separated gate
  (-I by default, +I recorded) with constant side potentials for an
  arbitrary duration in half periods.

Phase bookkeeping: a gate_half_period step acts as the scalar -i times the
gate matrix applied pointwise; an integer-duration closed step acts on each
side as the scalar (eta e^{-i (V_side + V0) tau / hbar})^d with eta = i for
-I and -i for +I.  run_schedule records these predicted factors next to
measured norms and side populations so states can be compared free of phase
conventions.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import get_lapack_funcs

from .config import DEFAULT_CN_STEPS_PER_HALF_PERIOD, DEFAULT_CONFIG, DEFAULT_N_MODES, PhysicalConfig
from .errors import EngineAccuracyError, PhysicsContractError, ScheduleParseError
from .oscillator import GridState, ModalState, ModalWorkspace, _resolve_workspace, make_grid
from .su2 import (
    HADAMARD,
    IDENTITY,
    MINUS_IDENTITY,
    PAULI_X,
    BlochVector,
    DiagonalGate,
    GateClass,
    UnitaryGate,
    as_gate,
    as_matrix,
    classify,
    diagonalize,
    is_scale_invariant,
    wrap_angle,
)

__all__ = [
    "Step",
    "Schedule",
    "StepRecord",
    "RunResult",
    "gate_step",
    "closed_step",
    "phase_step",
    "diagonal_step",
    "half_period_map",
    "evolve_modal",
    "evolve_grid_cn",
    "GridPropagator",
    "run_schedule",
    "gate_to_spec",
    "gate_from_spec",
]

KIND_GATE = "gate_half_period"
KIND_CLOSED = "closed_with_potentials"


# --------------------------------------------------------------------------
# steps and schedules


@dataclass(frozen=True)
class Step:
    """One schedule entry; see the module docstring for the two kinds."""

    kind: str
    gate: UnitaryGate
    v_plus: float = 0.0
    v_minus: float = 0.0
    v_zero: float = 0.0
    duration_half_periods: float = 1.0
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "gate", as_gate(self.gate))
        for name in ("v_plus", "v_minus", "v_zero", "duration_half_periods"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, val)
        if self.kind == KIND_GATE:
            if self.duration_half_periods != 1.0:
                raise ValueError("gate_half_period steps last exactly one half period")
            if self.v_plus or self.v_minus or self.v_zero:
                raise ValueError("gate_half_period steps carry no potentials; "
                                 "use closed_with_potentials")
        elif self.kind == KIND_CLOSED:
            if classify(self.gate) not in (GateClass.PLUS_IDENTITY, GateClass.MINUS_IDENTITY):
                raise ValueError("closed steps require gate +I or -I")
            if self.duration_half_periods < 0.0:
                raise ValueError("duration must be >= 0")
        else:
            raise ValueError(f"unknown step kind {self.kind!r}")

    def side_factors(self, cfg: PhysicalConfig) -> tuple[complex, complex] | None:
        """Predicted exact per-side scalar factors, when they exist.

        Gate steps act as -i times the gate (not per-side scalars unless the
        gate is diagonal); closed steps of integer duration d act per side as
        (eta e^{-i (V_side + V0) tau / hbar})^d.  Returns None otherwise.
        """
        if self.kind == KIND_GATE:
            return None
        d = self.duration_half_periods
        if not float(d).is_integer():
            return None
        eta = 1j if classify(self.gate) is GateClass.MINUS_IDENTITY else -1j
        per = [eta * np.exp(-1j * (vs + self.v_zero) * cfg.tau / cfg.hbar)
               for vs in (self.v_plus, self.v_minus)]
        k = int(d)
        return (complex(per[0] ** k), complex(per[1] ** k))

    def scalar_factor(self, cfg: PhysicalConfig) -> complex | None:
        """The step's global scalar prefactor when well-defined.

        -i for gate steps; the common side factor of a closed step when both
        sides agree; None otherwise.
        """
        if self.kind == KIND_GATE:
            return -1j
        sf = self.side_factors(cfg)
        if sf is not None and abs(sf[0] - sf[1]) <= 1e-12:
            return sf[0]
        return None


def gate_step(gate, label: str = "") -> Step:
    return Step(kind=KIND_GATE, gate=as_gate(gate), label=label)


def closed_step(v_plus: float = 0.0, v_minus: float = 0.0, v_zero: float = 0.0,
                duration_half_periods: float = 1.0, gate=MINUS_IDENTITY,
                label: str = "") -> Step:
    return Step(kind=KIND_CLOSED, gate=as_gate(gate), v_plus=v_plus, v_minus=v_minus,
                v_zero=v_zero, duration_half_periods=duration_half_periods, label=label)


def diagonal_step(d: DiagonalGate, cfg: PhysicalConfig = DEFAULT_CONFIG) -> Step:
    """Closed step realizing diag(e^{i theta+}, e^{i theta-}) in one half period.

    With the gate -I each side picks up the intrinsic factor i per half
    period, so V_side = (pi/2 - theta_side) hbar / tau makes the net factor
    e^{i theta_side} exactly; the branch with the smallest |V| is chosen.
    """
    scale = cfg.hbar / cfg.tau
    return Step(kind=KIND_CLOSED, gate=MINUS_IDENTITY,
                v_plus=wrap_angle(math.pi / 2.0 - d.theta_plus) * scale,
                v_minus=wrap_angle(math.pi / 2.0 - d.theta_minus) * scale,
                label="diagonal")


def phase_step(phi: float, cfg: PhysicalConfig = DEFAULT_CONFIG) -> Step:
    """Closed step realizing the scalar e^{i phi} I in one half period.

    Same construction as diagonal_step with both angles equal, carried by
    the global offset V0 instead of the side potentials.
    """
    v0 = wrap_angle(math.pi / 2.0 - phi) * cfg.hbar / cfg.tau
    return Step(kind=KIND_CLOSED, gate=MINUS_IDENTITY, v_zero=v0, label="phase")


_NAMED_GATES = (("I", IDENTITY), ("-I", MINUS_IDENTITY), ("NOT", PAULI_X),
                ("HADAMARD", HADAMARD))
_BLOCH_RE = re.compile(r"^BLOCH\(\s*([^,()\s]+)\s*,\s*([^,()\s]+)\s*\)$")


def gate_to_spec(gate):
    """Serialize a gate as a name ("I", "-I", "NOT", "HADAMARD",
    "BLOCH(mu,nu)") or a row-major list of [re, im] pairs."""
    g = as_gate(gate)
    for name, ref in _NAMED_GATES:
        if g.isclose(ref, 1e-12):
            return name
    if classify(g) is GateClass.SCALE_INVARIANT_BLOCH:
        b = BlochVector.from_matrix(g.m)
        return f"BLOCH({b.mu!r},{b.nu!r})"
    return g.to_json_entries()


def gate_from_spec(spec) -> UnitaryGate:
    """Inverse of gate_to_spec; raises ScheduleParseError on malformed input."""
    if isinstance(spec, str):
        for name, ref in _NAMED_GATES:
            if spec == name:
                return ref
        m = _BLOCH_RE.match(spec)
        if m:
            try:
                mu, nu = float(m.group(1)), float(m.group(2))
            except ValueError as exc:
                raise ScheduleParseError(f"bad BLOCH angles in {spec!r}") from exc
            return BlochVector.from_angles(mu, nu).gate()
        raise ScheduleParseError(f"unknown gate name {spec!r}")
    try:
        return UnitaryGate.from_json_entries(spec)
    except (TypeError, ValueError) as exc:
        raise ScheduleParseError(f"bad gate matrix: {exc}") from exc


_STEP_KEYS = {"kind", "gate", "V_plus", "V_minus", "V_zero", "duration_half_periods", "label"}
_CFG_KEYS = {"mass", "omega", "hbar", "l0"}


@dataclass(frozen=True)
class Schedule:
    """Ordered steps plus the physical configuration they assume."""

    steps: tuple[Step, ...]
    cfg: PhysicalConfig = DEFAULT_CONFIG

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))

    @property
    def total_half_periods(self) -> float:
        return sum(s.duration_half_periods for s in self.steps)

    def to_dict(self) -> dict:
        return {
            "config": {"mass": self.cfg.mass, "omega": self.cfg.omega,
                       "hbar": self.cfg.hbar, "l0": self.cfg.l0},
            "steps": [
                {"kind": s.kind, "gate": gate_to_spec(s.gate),
                 "V_plus": s.v_plus, "V_minus": s.v_minus, "V_zero": s.v_zero,
                 "duration_half_periods": s.duration_half_periods, "label": s.label}
                for s in self.steps
            ],
        }

    @classmethod
    def from_dict(cls, data) -> "Schedule":
        if not isinstance(data, dict):
            raise ScheduleParseError("schedule must be a JSON object")
        unknown = set(data) - {"config", "steps"}
        if unknown:
            raise ScheduleParseError(f"unknown schedule fields {sorted(unknown)}")
        cfg_d = data.get("config", {})
        if not isinstance(cfg_d, dict) or set(cfg_d) - _CFG_KEYS:
            raise ScheduleParseError("config must be an object with keys "
                                     f"{sorted(_CFG_KEYS)}")
        try:
            cfg = PhysicalConfig(mass=float(cfg_d.get("mass", 1.0)),
                                 omega=float(cfg_d.get("omega", 1.0)),
                                 hbar=float(cfg_d.get("hbar", 1.0)),
                                 l0=float(cfg_d.get("l0", 1.0)))
        except (TypeError, ValueError) as exc:
            raise ScheduleParseError(f"bad config: {exc}") from exc
        raw_steps = data.get("steps", [])
        if not isinstance(raw_steps, list):
            raise ScheduleParseError("steps must be a list")
        steps = []
        for i, sd in enumerate(raw_steps):
            if not isinstance(sd, dict):
                raise ScheduleParseError(f"step {i} must be an object")
            unknown = set(sd) - _STEP_KEYS
            if unknown:
                raise ScheduleParseError(f"step {i} has unknown keys {sorted(unknown)}")
            kind = sd.get("kind")
            if kind not in (KIND_GATE, KIND_CLOSED):
                raise ScheduleParseError(f"step {i}: kind must be '{KIND_GATE}' or "
                                         f"'{KIND_CLOSED}', got {kind!r}")
            gate_spec = sd.get("gate", "-I" if kind == KIND_CLOSED else None)
            if gate_spec is None:
                raise ScheduleParseError(f"step {i}: gate_half_period needs a gate")
            gate = gate_from_spec(gate_spec)
            try:
                step = Step(kind=kind, gate=gate,
                            v_plus=float(sd.get("V_plus", 0.0)),
                            v_minus=float(sd.get("V_minus", 0.0)),
                            v_zero=float(sd.get("V_zero", 0.0)),
                            duration_half_periods=float(sd.get("duration_half_periods", 1.0)),
                            label=str(sd.get("label", "")))
            except (TypeError, ValueError) as exc:
                raise ScheduleParseError(f"step {i}: {exc}") from exc
            steps.append(step)
        return cls(steps=tuple(steps), cfg=cfg)

    def dump(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "Schedule":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ScheduleParseError(f"cannot read schedule {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ScheduleParseError(f"invalid JSON in {path}: {exc}") from exc
        return cls.from_dict(data)


# --------------------------------------------------------------------------
# modal engine


def half_period_map(gate) -> UnitaryGate:
    """The evolution operator over one half period as a pointwise matrix: -iU.

    Valid exactly for the scale-invariant family; other junctions evolve in
    an energy-dependent way and have no pointwise half-period map.
    """
    g = as_gate(gate)
    if not is_scale_invariant(g):
        raise PhysicsContractError(
            "the half-period identity holds only for the scale-invariant family "
            f"(Bloch matrices and +/-I); got class {classify(g).value}")
    return UnitaryGate(-1j * g.m)


def _modal_energies(cls: GateClass, n_modes: int, cfg: PhysicalConfig,
                    v_plus: float, v_minus: float, v_zero: float) -> np.ndarray:
    k = np.arange(n_modes)
    hw = cfg.hbar * cfg.omega
    if cls is GateClass.SCALE_INVARIANT_BLOCH:
        if abs(v_plus - v_minus) > 1e-12 * max(1.0, abs(v_plus), abs(v_minus)):
            raise PhysicsContractError(
                "unequal side potentials require a separated gate (+I or -I); "
                "a connected junction mixes the sides")
        return (k + 0.5) * hw + v_plus + v_zero
    base = 0.5 if cls is GateClass.PLUS_IDENTITY else 1.5
    e = (2.0 * (k // 2) + base) * hw
    return e + np.where(k % 2 == 0, v_plus, v_minus) + v_zero


def evolve_modal(gate, s: ModalState, t: float, cfg: PhysicalConfig = DEFAULT_CONFIG, *,
                 v_plus: float = 0.0, v_minus: float = 0.0, v_zero: float = 0.0,
                 workspace: ModalWorkspace | None = None) -> ModalState:
    """Advance a modal state by time t under a scale-invariant junction.

    Coefficients pick up the exact phases e^{-i E_n t / hbar}.  If the state
    is expressed in a different junction's basis it is re-projected first
    (through `workspace`, or a default-grid workspace).  Side potentials are
    admitted per side for +/-I and only as an equal pair (a global offset)
    for connected Bloch gates.
    """
    g = as_gate(gate)
    cls = classify(g)
    if cls not in (GateClass.SCALE_INVARIANT_BLOCH, GateClass.PLUS_IDENTITY,
                   GateClass.MINUS_IDENTITY):
        raise PhysicsContractError(
            f"modal evolution requires a scale-invariant junction; got {cls.value}")
    if not s.basis_gate.isclose(g, 1e-12):
        ws = workspace
        if ws is None:
            grid = make_grid(cfg)
            ws = _resolve_workspace(grid, s.n_modes + (s.n_modes & 1), None)
        s = ws.project(ws.synthesize(s), g, normalize=False)
    energies = _modal_energies(cls, s.n_modes, cfg, v_plus, v_minus, v_zero)
    coeff = s.coefficients * np.exp(-1j * energies * (t / cfg.hbar))
    return ModalState(basis_gate=s.basis_gate, coefficients=coeff,
                      truncation_loss=s.truncation_loss)


# --------------------------------------------------------------------------
# grid engine (Crank-Nicolson)


def _interface_matrix(gate: UnitaryGate, beta: float) -> np.ndarray:
    """Ghost-elimination matrix M with Psi(-h/2) = M Psi(h/2).

    In the junction eigenbasis the discretized connection condition gives
    per eigenphase theta:

        m = -(sin(theta/2) + 2 beta cos(theta/2))
            /(sin(theta/2) - 2 beta cos(theta/2)),     beta = l0 / h,

    (m = -1 Dirichlet, +1 Neumann) and M = W diag(m) W^dagger is Hermitian,
    which keeps the Crank-Nicolson step exactly norm-preserving.
    """
    v, d = diagonalize(gate)
    ms = []
    for th in (d.theta_plus, d.theta_minus):
        s, c = math.sin(th / 2.0), math.cos(th / 2.0)
        den = s - 2.0 * beta * c
        if abs(den) < 1e-10 * (abs(s) + abs(2.0 * beta * c)):
            raise EngineAccuracyError(
                f"junction eigenphase {th:.6g} resonates with the grid step "
                "(tan(theta/2) = 2 l0/h); change the node count")
        ms.append(-(s + 2.0 * beta * c) / den)
    return v.dagger @ np.diag(ms).astype(complex) @ v.m


class GridPropagator:
    """Prefactored Crank-Nicolson stepper for one (gate, potentials, dt).

    The two components interleave into one vector [psi+(x1), psi-(x1),
    psi+(x2), ...], giving a pentadiagonal Hamiltonian: nearest-node kinetic
    coupling at index distance 2, the junction's component coupling at
    distance 1 in the first node pair only.  A = I + i dt H / 2 hbar is LU
    factorized once; each step is one banded solve plus one banded matvec.
    """

    def __init__(self, grid, gate, dt: float, v_plus: float = 0.0,
                 v_minus: float = 0.0, v_zero: float = 0.0):
        cfg = grid.cfg
        g = as_gate(gate)
        if dt <= 0 or not math.isfinite(dt):
            raise ValueError("dt must be positive and finite")
        self.grid = grid
        self.dt = float(dt)
        nodes = grid.nodes
        n = 2 * nodes
        k0 = cfg.hbar ** 2 / (2.0 * cfg.mass * grid.h ** 2)
        m_int = _interface_matrix(g, cfg.l0 / grid.h)

        pot = 0.5 * cfg.mass * cfg.omega ** 2 * grid.x ** 2
        d0 = np.empty(n, dtype=complex)
        d0[0::2] = 2.0 * k0 + pot + (v_plus + v_zero)
        d0[1::2] = 2.0 * k0 + pot + (v_minus + v_zero)
        d0[0] -= k0 * m_int[0, 0]
        d0[1] -= k0 * m_int[1, 1]
        d1u = np.zeros(n - 1, dtype=complex)
        d1l = np.zeros(n - 1, dtype=complex)
        d1u[0] = -k0 * m_int[0, 1]
        d1l[0] = -k0 * m_int[1, 0]
        d2 = np.full(n - 2, -k0, dtype=complex)

        lam = self.dt / (2.0 * cfg.hbar)
        # A = I + i lam H in LAPACK band storage (kl = ku = 2, 2 scratch rows)
        ab = np.zeros((7, n), dtype=complex)
        ab[2, 2:] = 1j * lam * d2
        ab[3, 1:] = 1j * lam * d1u
        ab[4, :] = 1.0 + 1j * lam * d0
        ab[5, :-1] = 1j * lam * d1l
        ab[6, :-2] = 1j * lam * d2
        gbtrf, gbtrs = get_lapack_funcs(("gbtrf", "gbtrs"), (ab,))
        lu, piv, info = gbtrf(ab, 2, 2)
        if info != 0:
            raise EngineAccuracyError(f"banded LU factorization failed (info = {info})")
        self._lu, self._piv, self._gbtrs = lu, piv, gbtrs
        # B = I - i lam H kept as diagonals for the explicit half of the step
        self._b0 = 1.0 - 1j * lam * d0
        self._b1u = -1j * lam * d1u
        self._b1l = -1j * lam * d1l
        self._b2 = -1j * lam * d2

    def _apply_b(self, y: np.ndarray) -> np.ndarray:
        out = self._b0 * y
        out[:-1] += self._b1u * y[1:]
        out[1:] += self._b1l * y[:-1]
        out[:-2] += self._b2 * y[2:]
        out[2:] += self._b2 * y[:-2]
        return out

    def step_vector(self, y: np.ndarray) -> np.ndarray:
        rhs = self._apply_b(y)
        x, info = self._gbtrs(self._lu, 2, 2, rhs, self._piv)
        if info != 0:
            raise EngineAccuracyError(f"banded solve failed (info = {info})")
        return x

    def evolve(self, state: GridState, n_steps: int) -> GridState:
        y = np.empty(2 * self.grid.nodes, dtype=complex)
        y[0::2] = state.psi_plus
        y[1::2] = state.psi_minus
        for _ in range(n_steps):
            y = self.step_vector(y)
        return GridState(self.grid, y[0::2].copy(), y[1::2].copy())


def evolve_grid_cn(gate, s: GridState, t: float, v_plus: float = 0.0,
                   v_minus: float = 0.0, v_zero: float = 0.0, dt: float | None = None,
                   check_accuracy: bool = False) -> GridState:
    """Crank-Nicolson evolution for time t under any unitary junction gate.

    dt defaults to tau / 2000 (rounded so an integer number of steps lands
    exactly on t).  With check_accuracy the run is repeated at dt/2 and an
    EngineAccuracyError is raised if the final state moves by more than 1e-3
    in L2; the dt-resolution state is returned when the check passes.
    """
    from .pointint import PointInteraction  # local import to avoid a cycle

    if isinstance(gate, PointInteraction):
        if abs(gate.l0 - s.grid.cfg.l0) > 1e-15 * max(1.0, gate.l0):
            raise PhysicsContractError("junction length scale differs from the "
                                       "grid configuration's l0")
        gate = gate.gate
    cfg = s.grid.cfg
    if t < 0 or not math.isfinite(t):
        raise ValueError("t must be >= 0 and finite")
    if t == 0.0:
        return s.copy()
    if dt is None:
        dt = cfg.tau / DEFAULT_CN_STEPS_PER_HALF_PERIOD
    n_steps = max(1, round(t / dt))
    dt_eff = t / n_steps
    result = GridPropagator(s.grid, gate, dt_eff, v_plus, v_minus, v_zero).evolve(s, n_steps)
    if check_accuracy:
        fine = GridPropagator(s.grid, gate, dt_eff / 2.0, v_plus, v_minus,
                              v_zero).evolve(s, 2 * n_steps)
        diff = math.sqrt(s.grid.h * float(
            np.sum(np.abs(fine.psi_plus - result.psi_plus) ** 2)
            + np.sum(np.abs(fine.psi_minus - result.psi_minus) ** 2)))
        if diff > 1e-3:
            raise EngineAccuracyError(
                f"step-halving moved the final state by {diff:.3e} in L2 "
                f"(dt = {dt_eff:.3e}); refine dt")
    return result


# --------------------------------------------------------------------------
# schedule execution


@dataclass
class StepRecord:
    """Diagnostics for one executed step."""

    index: int
    kind: str
    label: str
    duration_half_periods: float
    norm: float
    p_plus: float
    p_minus: float
    scalar_factor: complex | None
    side_factors: tuple[complex, complex] | None
    reference_fidelity: float | None
    state: GridState | None = None

    def to_jsonable(self) -> dict:
        def cpx(z):
            return None if z is None else [z.real, z.imag]

        return {
            "index": self.index, "kind": self.kind, "label": self.label,
            "duration_half_periods": self.duration_half_periods,
            "norm": self.norm, "p_plus": self.p_plus, "p_minus": self.p_minus,
            "scalar_factor": cpx(self.scalar_factor),
            "side_factors": None if self.side_factors is None
            else [cpx(self.side_factors[0]), cpx(self.side_factors[1])],
            "reference_fidelity": self.reference_fidelity,
        }


@dataclass
class RunResult:
    """Final state plus the per-step trace of a schedule run.

    global_phase multiplies the predicted scalar factors of all steps; it is
    None as soon as any step has no well-defined scalar (e.g. a closed step
    whose sides acquire different phases).
    """

    final: GridState
    trace: list[StepRecord]
    global_phase: complex | None
    engine: str


def _reference_map(step: Step, cfg: PhysicalConfig) -> np.ndarray | None:
    """Exact pointwise 2x2 map of a step, when one exists."""
    if step.kind == KIND_GATE:
        if is_scale_invariant(step.gate):
            return -1j * step.gate.m
        return None
    sf = step.side_factors(cfg)
    if sf is None:
        return None
    return np.diag(sf)


def _fidelity(a: GridState, b: GridState) -> float:
    na, nb = a.norm_sq(), b.norm_sq()
    if na < 1e-300 or nb < 1e-300:
        return 0.0
    return abs(a.inner(b)) ** 2 / (na * nb)


def run_schedule(sch: Schedule, s, engine: str = "modal", *, dt: float | None = None,
                 n_modes: int = DEFAULT_N_MODES, workspace: ModalWorkspace | None = None,
                 check_accuracy: bool = False, record_states: bool = False) -> RunResult:
    """Execute a schedule on a state with the chosen engine.

    The state may be a GridState or a ModalState (synthesized first).  The
    modal engine requires every gate to be scale-invariant and round-trips
    each step through the junction eigenbasis without renormalizing, so the
    recorded norms expose truncation honestly.  The grid engine accepts any
    unitary gate.  Each record carries the fidelity of the computed step
    against the exact pointwise map whenever that map exists.
    """
    if engine not in ("modal", "grid"):
        raise ValueError("engine must be 'modal' or 'grid'")
    cfg = sch.cfg
    if isinstance(s, ModalState):
        ws0 = workspace if workspace is not None else _resolve_workspace(
            make_grid(cfg), max(n_modes, s.n_modes + (s.n_modes & 1)), None)
        s = ws0.synthesize(s)
    if not isinstance(s, GridState):
        raise TypeError("state must be a GridState or ModalState")
    if s.grid.cfg != cfg:
        raise PhysicsContractError("schedule config differs from the state's grid config")

    ws = None
    if engine == "modal":
        ws = _resolve_workspace(s.grid, n_modes, workspace)

    tau = cfg.tau
    cur = s
    trace: list[StepRecord] = []
    global_phase: complex | None = complex(1.0)
    for i, step in enumerate(sch.steps):
        t = step.duration_half_periods * tau
        if engine == "modal":
            if not is_scale_invariant(step.gate):
                raise PhysicsContractError(
                    f"modal engine requires scale-invariant steps; step {i} has a "
                    f"{classify(step.gate).value} gate (use the grid engine)")
            modal = ws.project(cur, step.gate, normalize=False)
            modal = evolve_modal(step.gate, modal, t, cfg, v_plus=step.v_plus,
                                 v_minus=step.v_minus, v_zero=step.v_zero)
            nxt = ws.synthesize(modal)
        else:
            nxt = evolve_grid_cn(step.gate, cur, t, v_plus=step.v_plus,
                                 v_minus=step.v_minus, v_zero=step.v_zero,
                                 dt=dt, check_accuracy=check_accuracy)

        ref = _reference_map(step, cfg)
        fid = _fidelity(cur.apply_pointwise(ref), nxt) if ref is not None else None
        scalar = step.scalar_factor(cfg)
        if global_phase is not None:
            global_phase = None if scalar is None else global_phase * scalar
        pp, pm = nxt.side_populations()
        trace.append(StepRecord(
            index=i, kind=step.kind, label=step.label,
            duration_half_periods=step.duration_half_periods,
            norm=nxt.norm(), p_plus=pp, p_minus=pm,
            scalar_factor=scalar, side_factors=step.side_factors(cfg),
            reference_fidelity=fid,
            state=nxt.copy() if record_states else None))
        cur = nxt
    return RunResult(final=cur, trace=trace, global_phase=global_phase, engine=engine)
