"""Quantum abacus: a particle on a line with a tunable U(2) junction.

A harmonic trap is cut at the origin by a zero-size interaction parametrized
by a unitary matrix U.  For the scale-invariant family, evolving for half a
trap period applies the gate -iU pointwise to the two-component state, which
turns side occupation into a qubit and gate matrices into schedules of
half-period steps.  The package provides

* `su2` -- gate algebra: classification, Bloch parametrization, and the
  <= 4-step reflection decomposition of an arbitrary U(2) matrix;
* `oscillator` -- grids, trap eigenfunctions, and modal projections;
* `pointint` -- the junction itself: connection condition, scattering
  amplitudes, and trap spectra (Gamma-function roots + fd oracle);
* `evolve` -- schedules and the two engines (exact modal, Crank-Nicolson);
* `abacus` -- the qubit layer: prepare/readout, gate compiler, classical
  moves, triggered CNOT, and qubit programs;
* `verify` -- the nine-criterion verification suite;
* `cli` / `service` -- command-line and HTTP frontends.
"""

from .abacus import (
    ClassicalRunResult,
    CnotResult,
    CompiledGate,
    QubitState,
    Readout,
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
from .config import DEFAULT_CONFIG, PhysicalConfig, Tolerances
from .errors import EngineAccuracyError, PhysicsContractError, ScheduleParseError
from .evolve import (
    KIND_CLOSED,
    KIND_GATE,
    RunResult,
    Schedule,
    Step,
    StepRecord,
    closed_step,
    diagonal_step,
    evolve_grid_cn,
    evolve_modal,
    gate_from_spec,
    gate_step,
    gate_to_spec,
    half_period_map,
    phase_step,
    run_schedule,
)
from .oscillator import (
    Grid,
    GridState,
    ModalState,
    ModalWorkspace,
    eigenfunction,
    make_grid,
    modal_energy,
    project,
    synthesize,
)
from .pointint import (
    PointInteraction,
    ScatteringAmplitudes,
    SpectrumResult,
    connection_residual,
    fd_oracle_levels,
    robin_levels,
    scattering_amplitudes,
    spectrum,
)
from .su2 import (
    HADAMARD,
    IDENTITY,
    MINUS_IDENTITY,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    BlochVector,
    DiagonalGate,
    GateClass,
    GateDecomposition,
    UnitaryGate,
    bloch_matrix,
    classify,
    conjugate,
    decompose_gate,
    diagonalize,
    is_scale_invariant,
    random_bloch,
    random_unitary,
)
from .verify import CriterionResult, VerificationReport, run_verification

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # config / errors
    "DEFAULT_CONFIG", "PhysicalConfig", "Tolerances",
    "EngineAccuracyError", "PhysicsContractError", "ScheduleParseError",
    # su2
    "HADAMARD", "IDENTITY", "MINUS_IDENTITY", "PAULI_X", "PAULI_Y", "PAULI_Z",
    "BlochVector", "DiagonalGate", "GateClass", "GateDecomposition",
    "UnitaryGate", "bloch_matrix", "classify", "conjugate", "decompose_gate",
    "diagonalize", "is_scale_invariant", "random_bloch", "random_unitary",
    # oscillator
    "Grid", "GridState", "ModalState", "ModalWorkspace", "eigenfunction",
    "make_grid", "modal_energy", "project", "synthesize",
    # pointint
    "PointInteraction", "ScatteringAmplitudes", "SpectrumResult",
    "connection_residual", "fd_oracle_levels", "robin_levels",
    "scattering_amplitudes", "spectrum",
    # evolve
    "KIND_CLOSED", "KIND_GATE", "RunResult", "Schedule", "Step", "StepRecord",
    "closed_step", "diagonal_step", "evolve_grid_cn", "evolve_modal",
    "gate_from_spec", "gate_step", "gate_to_spec", "half_period_map",
    "phase_step", "run_schedule",
    # abacus
    "ClassicalRunResult", "CnotResult", "CompiledGate", "QubitState",
    "Readout", "apply_gate", "bump_profile", "classical_run", "cnot_trigger",
    "compile_gate", "ground_profile", "prepare", "readout", "run_program",
    # verify
    "CriterionResult", "VerificationReport", "run_verification",
]
