"""The qubit layer on the junction trap: preparation, readout, compilation.

A qubit is carried by which side of the junction holds the particle:
|0> = (f, 0) and |1> = (0, f) for a shared real half-line profile f with
unit quadrature norm.  Holding a scale-invariant junction for one half
period multiplies the side amplitudes by -iU while reproducing the profile,
so any U(2) gate becomes a short schedule:

* Bloch matrix   -> one gate_half_period step (scalar -i recorded)
* diagonal       -> one closed step with side potentials (exact, phase 1)
* anything else  -> four gate steps from the reflection decomposition plus
                    one closed step absorbing the residual phase, making the
                    realized map equal the target exactly (phase 1).

Readout is the presence/absence of the particle per side plus the overlap
of each side's normalized wavefunction with f.  The classical regime uses
only open (NOT) and closed (-I) moves; the two-qubit CNOT is a classical
trigger: measure the control's side, then open or close the target's gate
for one half period while the control's gate stays closed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_CONFIG, PhysicalConfig
from .errors import PhysicsContractError, ScheduleParseError
from .evolve import (
    KIND_GATE,
    RunResult,
    Schedule,
    diagonal_step,
    gate_from_spec,
    gate_step,
    gate_to_spec,
    phase_step,
    run_schedule,
)
from .oscillator import Grid, GridState, ho_wavefunction, make_grid
from .su2 import (
    MINUS_IDENTITY,
    PAULI_X,
    DiagonalGate,
    GateClass,
    UnitaryGate,
    as_gate,
    classify,
    decompose_gate,
    pauli_decompose,
)

__all__ = [
    "QubitState",
    "Readout",
    "CompiledGate",
    "ClassicalRunResult",
    "CnotResult",
    "bump_profile",
    "ground_profile",
    "prepare",
    "readout",
    "apply_gate",
    "compile_gate",
    "classical_run",
    "cnot_trigger",
    "run_program",
    "DEFAULT_BUMP_CENTER_ELL",
    "DEFAULT_CNOT_THRESHOLD",
]

DEFAULT_BUMP_CENTER_ELL = 3.0
# width tied to the center keeps the profile's value at the origin below
# ~1e-14; nonzero boundary data feeds a slowly decaying tail of modal
# coefficients, and this ratio keeps that tail under ~1e-12 at 200 modes
_BUMP_WIDTH_FRACTION = 1.0 / 8.0
DEFAULT_CNOT_THRESHOLD = 0.99


def bump_profile(grid: Grid, center: float | None = None,
                 width: float | None = None) -> np.ndarray:
    """Half-line Gaussian bump away from the junction, unit quadrature norm."""
    ell = grid.cfg.ell
    if center is None:
        center = DEFAULT_BUMP_CENTER_ELL * ell
    if width is None:
        width = center * _BUMP_WIDTH_FRACTION
    if not (0 < center < grid.x_max and width > 0):
        raise ValueError("bump must sit inside the grid with positive width")
    f = np.exp(-0.5 * ((grid.x - center) / width) ** 2)
    return f / math.sqrt(grid.h * float(np.sum(f * f)))


def ground_profile(grid: Grid) -> np.ndarray:
    """Trap ground state restricted to the half line: sqrt(2) u0, renormalized."""
    f = math.sqrt(2.0) * ho_wavefunction(0, grid.x, grid.cfg)
    return f / math.sqrt(grid.h * float(np.sum(f * f)))


@dataclass
class QubitState:
    """A two-component state together with its preparation profile."""

    state: GridState
    profile: np.ndarray
    profile_name: str = "custom"

    def __post_init__(self):
        self.profile = np.asarray(self.profile, dtype=float)
        if self.profile.shape != self.state.grid.x.shape:
            raise ValueError("profile must be sampled on the state's grid")

    @property
    def grid(self) -> Grid:
        return self.state.grid

    @property
    def cfg(self) -> PhysicalConfig:
        return self.state.grid.cfg

    def with_state(self, state: GridState) -> "QubitState":
        return QubitState(state=state, profile=self.profile,
                          profile_name=self.profile_name)


@dataclass(frozen=True)
class Readout:
    """Side populations and per-side profile fidelities.

    fidelity_side = |<f, psi_side / |psi_side|>|^2, reported as 1.0 for an
    empty side (nothing there to deform).
    """

    p0: float
    p1: float
    fidelity_plus: float
    fidelity_minus: float

    def bit(self) -> int:
        return 0 if self.p0 >= self.p1 else 1


def _resolve_profile(profile, grid: Grid, center, width) -> tuple[np.ndarray, str]:
    if isinstance(profile, str):
        if profile == "bump":
            return bump_profile(grid, center, width), "bump"
        if profile == "ground":
            if center is not None or width is not None:
                raise ValueError("center/width apply only to the bump profile")
            return ground_profile(grid), "ground"
        raise ValueError(f"unknown profile {profile!r} (use 'bump' or 'ground')")
    if center is not None or width is not None:
        raise ValueError("center/width apply only to the bump profile")
    f = profile(grid.x) if callable(profile) else profile
    f = np.asarray(f)
    if np.iscomplexobj(f):
        if np.abs(f.imag).max() > 1e-12:
            raise ValueError("profile must be real")
        f = f.real
    f = f.astype(float)
    if f.shape != grid.x.shape:
        raise ValueError("sampled profile must match the grid")
    if not np.all(np.isfinite(f)):
        raise ValueError("profile is not normalizable (non-finite samples)")
    nrm2 = grid.h * float(np.sum(f * f))
    if not (nrm2 > 1e-30 and math.isfinite(nrm2)):
        raise ValueError("profile is not normalizable on the half line")
    tail = np.abs(f[-1]) / max(float(np.abs(f).max()), 1e-300)
    if tail > 1e-6:
        raise ValueError("profile does not decay by the grid edge; "
                         "not normalizable on the half line")
    return f / math.sqrt(nrm2), "custom"


def prepare(profile="bump", bit: int = 0, cfg: PhysicalConfig = DEFAULT_CONFIG,
            grid: Grid | None = None, center: float | None = None,
            width: float | None = None) -> QubitState:
    """Prepare |0> = (f, 0) or |1> = (0, f) from a named or sampled profile.

    Named profiles: "bump" (half-Gaussian away from the junction; `center`
    and `width` tune it) and "ground" (trap ground state folded to one
    side).  A callable is sampled on the grid; an array is used as-is.  The
    profile is normalized to unit quadrature norm and must be real and
    decayed at the grid edge.
    """
    if bit not in (0, 1):
        raise ValueError("bit must be 0 or 1")
    if grid is None:
        grid = make_grid(cfg)
    elif grid.cfg != cfg:
        raise ValueError("grid was built for a different configuration")
    f, name = _resolve_profile(profile, grid, center, width)
    zero = np.zeros_like(f)
    comps = (f, zero) if bit == 0 else (zero, f)
    return QubitState(state=GridState(grid, comps[0].astype(complex),
                                      comps[1].astype(complex)),
                      profile=f, profile_name=name)


def _side_fidelity(profile: np.ndarray, psi: np.ndarray, h: float, pop: float) -> float:
    if pop < 1e-12:
        return 1.0
    ov = h * complex(np.vdot(profile.astype(complex), psi))
    return abs(ov) ** 2 / pop  # profile has unit norm


def readout(q: QubitState) -> Readout:
    """Side populations and profile fidelities of a qubit state."""
    pp, pm = q.state.side_populations()
    h = q.grid.h
    return Readout(p0=pp, p1=pm,
                   fidelity_plus=_side_fidelity(q.profile, q.state.psi_plus, h, pp),
                   fidelity_minus=_side_fidelity(q.profile, q.state.psi_minus, h, pm))


# --------------------------------------------------------------------------
# gate compilation


@dataclass(frozen=True)
class CompiledGate:
    """A target gate lowered to a runnable schedule.

    Executing `schedule` applies `recorded_phase * target` to the side
    amplitudes of any qubit-space state (exactly in the modal engine, up to
    truncation).  recorded_phase is -i for single-step Bloch targets and 1
    otherwise (the trailing closed step absorbs all bookkeeping).
    """

    target: UnitaryGate
    schedule: Schedule
    recorded_phase: complex

    @property
    def n_gate_steps(self) -> int:
        return sum(1 for s in self.schedule.steps if s.kind == KIND_GATE)

    @property
    def n_steps(self) -> int:
        return len(self.schedule.steps)


def compile_gate(target, cfg: PhysicalConfig = DEFAULT_CONFIG) -> CompiledGate:
    """Lower an arbitrary U(2) target to at most 4 gate steps + 1 closed step.

    Branch policy: scalar and diagonal targets compile to a single closed
    step (exact, recorded phase 1); Bloch targets to the single obvious gate
    step (recorded phase -i); generic targets to the four-reflection
    decomposition, time-reversed into schedule order, with one closed step
    supplying the residual phase e^{i xi} so the schedule realizes the
    target exactly (recorded phase 1; the four -i factors cancel as
    (-i)^4 = 1).
    """
    u = as_gate(target)
    c0, cvec = pauli_decompose(u.m)
    if np.abs(cvec).max() <= 1e-12:
        th = math.atan2(c0.imag, c0.real)
        return CompiledGate(target=u, schedule=Schedule((phase_step(th, cfg),), cfg),
                            recorded_phase=1.0 + 0j)
    if classify(u) is GateClass.SCALE_INVARIANT_BLOCH:
        return CompiledGate(target=u, schedule=Schedule((gate_step(u, label="bloch"),), cfg),
                            recorded_phase=-1j)
    m = u.m
    if abs(m[0, 1]) + abs(m[1, 0]) <= 1e-12:
        d = DiagonalGate(math.atan2(m[0, 0].imag, m[0, 0].real),
                         math.atan2(m[1, 1].imag, m[1, 1].real))
        return CompiledGate(target=u, schedule=Schedule((diagonal_step(d, cfg),), cfg),
                            recorded_phase=1.0 + 0j)
    dec = decompose_gate(u)  # target = e^{i xi} steps[0] ... steps[-1]
    gate_steps = tuple(gate_step(s.gate(), label="bloch") for s in reversed(dec.steps))
    sch = Schedule(gate_steps + (phase_step(dec.xi, cfg),), cfg)
    return CompiledGate(target=u, schedule=sch, recorded_phase=1.0 + 0j)


def apply_gate(q: QubitState, gate, engine: str = "modal", *,
               dt: float | None = None, n_modes: int | None = None,
               check_accuracy: bool = False) -> tuple[QubitState, RunResult]:
    """Compile (if needed) and run a gate on a qubit state.

    Accepts a UnitaryGate/matrix, a gate spec string, or a CompiledGate.
    Returns the new qubit state and the schedule's RunResult.
    """
    if isinstance(gate, CompiledGate):
        compiled = gate
    else:
        if isinstance(gate, str):
            gate = gate_from_spec(gate)
        compiled = compile_gate(gate, q.cfg)
    kwargs = {"dt": dt, "check_accuracy": check_accuracy}
    if n_modes is not None:
        kwargs["n_modes"] = n_modes
    result = run_schedule(compiled.schedule, q.state, engine, **kwargs)
    return q.with_state(result.final), result


# --------------------------------------------------------------------------
# classical regime and the trigger CNOT


@dataclass
class ClassicalRunResult:
    """Bit trajectory of open/closed abacus moves."""

    bits: list[int]
    readouts: list[Readout]
    final: QubitState
    decoherent: bool


def classical_run(moves, engine: str = "modal", cfg: PhysicalConfig = DEFAULT_CONFIG, *,
                  bit: int = 0, profile="bump", center: float | None = None,
                  width: float | None = None, grid: Grid | None = None,
                  dt: float | None = None) -> ClassicalRunResult:
    """Drive a localized packet with open (NOT) and closed (-I) moves.

    Each move holds the gate for one half period; the bit after each move is
    whichever side carries the particle.  The run is flagged decoherent if
    any intermediate readout leaves (0.01, 0.99) undecided -- which classical
    gates should never do.
    """
    q = prepare(profile, bit, cfg, grid=grid, center=center, width=width)
    first = readout(q)
    if max(first.p0, first.p1) < 0.999:
        raise ValueError("packet must start localized on one side (readout >= 0.999)")
    steps = []
    for i, move in enumerate(moves):
        if move == "open":
            steps.append(gate_step(PAULI_X, label=f"open[{i}]"))
        elif move == "closed":
            steps.append(gate_step(MINUS_IDENTITY, label=f"closed[{i}]"))
        else:
            raise ValueError(f"move {i} must be 'open' or 'closed', got {move!r}")
    result = run_schedule(Schedule(tuple(steps), cfg), q.state, engine,
                          dt=dt, record_states=True)
    bits, readouts = [], []
    decoherent = False
    for rec in result.trace:
        ro = readout(q.with_state(rec.state))
        readouts.append(ro)
        bits.append(ro.bit())
        if 0.01 < ro.p0 / max(ro.p0 + ro.p1, 1e-300) < 0.99:
            decoherent = True
    return ClassicalRunResult(bits=bits, readouts=readouts,
                              final=q.with_state(result.final), decoherent=decoherent)


@dataclass
class CnotResult:
    control: QubitState
    target: QubitState
    applied: bool


def cnot_trigger(control: QubitState, target: QubitState,
                 threshold: float = DEFAULT_CNOT_THRESHOLD, engine: str = "modal", *,
                 dt: float | None = None) -> CnotResult:
    """Classically triggered CNOT between two independent systems.

    The control is read out; if its x > 0 side (the |0> carrier) holds at
    least `threshold` probability, the target's gate opens (NOT) for one
    half period, otherwise it stays closed (-I).  The control's own gate is
    kept closed throughout.  A control with max(p0, p1) < threshold is not
    classical and is rejected: the trigger is a classical signal and defines
    no unitary on superpositions.
    """
    ro = readout(control)
    if max(ro.p0, ro.p1) < threshold:
        raise PhysicsContractError(
            f"control is not classical (max side population {max(ro.p0, ro.p1):.6f} "
            f"< threshold {threshold}); the trigger CNOT is undefined on superposed "
            "controls")
    applied = ro.p0 >= threshold
    ctrl_sched = Schedule((gate_step(MINUS_IDENTITY, label="control-closed"),), control.cfg)
    tgt_gate = PAULI_X if applied else MINUS_IDENTITY
    tgt_sched = Schedule((gate_step(tgt_gate, label="target"),), target.cfg)
    new_control = control.with_state(
        run_schedule(ctrl_sched, control.state, engine, dt=dt).final)
    new_target = target.with_state(
        run_schedule(tgt_sched, target.state, engine, dt=dt).final)
    return CnotResult(control=new_control, target=new_target, applied=applied)


# --------------------------------------------------------------------------
# qubit programs (external interface)


def _cpx(z: complex | None):
    return None if z is None else [z.real, z.imag]


def run_program(program, cfg: PhysicalConfig = DEFAULT_CONFIG, engine: str = "modal", *,
                grid: Grid | None = None, dt: float | None = None) -> dict:
    """Execute a qubit program: a list of {"op": ..., ...} instructions.

    Ops: prepare {qubit, bit, profile?, center?, width?}, gate {qubit, gate},
    cnot {control, target, threshold?}, readout {qubit}.  Returns a JSON-able
    dict with one record per op (probabilities, fidelities, applied flags)
    and a global-phase log with one entry per gate op.
    """
    if not isinstance(program, list):
        raise ScheduleParseError("program must be a JSON list of ops")
    if grid is None:
        grid = make_grid(cfg)
    qubits: dict[str, QubitState] = {}
    records: list[dict] = []
    phase_log: list[dict] = []

    def get_qubit(d, key) -> tuple[str, QubitState]:
        name = str(d.get(key, ""))
        if name not in qubits:
            raise ScheduleParseError(f"op {len(records)}: qubit {name!r} is not prepared")
        return name, qubits[name]

    for i, op_d in enumerate(program):
        if not isinstance(op_d, dict) or "op" not in op_d:
            raise ScheduleParseError(f"op {i} must be an object with an 'op' field")
        op = op_d["op"]
        try:
            if op == "prepare":
                name = str(op_d.get("qubit", ""))
                if not name:
                    raise ScheduleParseError(f"op {i}: prepare needs a qubit name")
                qubits[name] = prepare(op_d.get("profile", "bump"),
                                       int(op_d.get("bit", 0)), cfg, grid=grid,
                                       center=op_d.get("center"),
                                       width=op_d.get("width"))
                records.append({"op": "prepare", "qubit": name,
                                "bit": int(op_d.get("bit", 0)),
                                "profile": qubits[name].profile_name})
            elif op == "gate":
                name, q = get_qubit(op_d, "qubit")
                if "gate" not in op_d:
                    raise ScheduleParseError(f"op {i}: gate op needs a 'gate' field")
                compiled = compile_gate(gate_from_spec(op_d["gate"]), cfg)
                q2, result = apply_gate(q, compiled, engine, dt=dt)
                qubits[name] = q2
                records.append({"op": "gate", "qubit": name,
                                "gate": gate_to_spec(compiled.target),
                                "n_steps": compiled.n_steps,
                                "recorded_phase": _cpx(compiled.recorded_phase),
                                "norm": result.final.norm()})
                phase_log.append({"op_index": i, "qubit": name,
                                  "recorded_phase": _cpx(compiled.recorded_phase),
                                  "schedule_phase": _cpx(result.global_phase)})
            elif op == "cnot":
                cname, c = get_qubit(op_d, "control")
                tname, t = get_qubit(op_d, "target")
                thr = float(op_d.get("threshold", DEFAULT_CNOT_THRESHOLD))
                res = cnot_trigger(c, t, thr, engine, dt=dt)
                qubits[cname], qubits[tname] = res.control, res.target
                records.append({"op": "cnot", "control": cname, "target": tname,
                                "threshold": thr, "applied": res.applied})
            elif op == "readout":
                name, q = get_qubit(op_d, "qubit")
                ro = readout(q)
                records.append({"op": "readout", "qubit": name, "p0": ro.p0,
                                "p1": ro.p1, "bit": ro.bit(),
                                "fidelity_plus": ro.fidelity_plus,
                                "fidelity_minus": ro.fidelity_minus})
            else:
                raise ScheduleParseError(f"op {i}: unknown op {op!r}")
        except (TypeError, ValueError) as exc:
            if isinstance(exc, (ScheduleParseError, PhysicsContractError)):
                raise
            raise ScheduleParseError(f"op {i}: {exc}") from exc
    return {"engine": engine, "ops": records, "global_phase_log": phase_log}
