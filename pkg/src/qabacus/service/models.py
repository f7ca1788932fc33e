"""Request/response models for the HTTP service.

Gate specs follow the schedule JSON convention: a name ("NOT", "HADAMARD",
"I", "-I", "BLOCH(mu,nu)") or a 2x2 matrix as four [re, im] rows in row-major
order.  Deep validation is left to the domain parsers so the service and the
library reject malformed input with identical messages.
"""
from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..config import PhysicalConfig

GateSpec = Any  # name string or row-major [re, im] matrix; parsed by gate_from_spec


class ConfigModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mass: float = Field(default=1.0, gt=0)
    omega: float = Field(default=1.0, gt=0)
    hbar: float = Field(default=1.0, gt=0)
    l0: float = Field(default=1.0, gt=0)

    def to_physical(self) -> PhysicalConfig:
        return PhysicalConfig(mass=self.mass, omega=self.omega,
                              hbar=self.hbar, l0=self.l0)

    @classmethod
    def from_physical(cls, cfg: PhysicalConfig) -> "ConfigModel":
        return cls(mass=cfg.mass, omega=cfg.omega, hbar=cfg.hbar, l0=cfg.l0)


class SpectrumRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    gate: GateSpec | None = None
    theta: float | None = None  # single-side reflection angle instead of a gate
    count: int = Field(default=8, ge=1, le=128)
    method: Literal["analytic", "fd"] = "analytic"
    config: ConfigModel = ConfigModel()

    @model_validator(mode="after")
    def _exactly_one_source(self):
        if (self.gate is None) == (self.theta is None):
            raise ValueError("provide exactly one of 'gate' or 'theta'")
        return self


class SpectrumResponse(BaseModel):
    boundary: str
    method: str
    levels: list[float]
    residuals: list[float]
    csv: str


class ScatterRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    gate: GateSpec
    k_min: float = Field(default=0.1, gt=0)  # in units of 1/ell
    k_max: float = Field(default=10.0, gt=0)
    count: int = Field(default=50, ge=1, le=100_000)
    spacing: Literal["log", "linear"] = "log"
    config: ConfigModel = ConfigModel()

    @model_validator(mode="after")
    def _ordered(self):
        if self.k_max < self.k_min:
            raise ValueError("k_max must be >= k_min")
        return self


class ScatterRow(BaseModel):
    k_ell: float  # k in units of 1/ell
    transmission: float
    reflection: float
    unitarity_residual: float


class ScatterResponse(BaseModel):
    gate: GateSpec
    rows: list[ScatterRow]
    csv: str


class CompileRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    gate: GateSpec
    config: ConfigModel = ConfigModel()


class CompileResponse(BaseModel):
    schedule: dict
    recorded_phase: tuple[float, float]
    n_gate_steps: int
    n_steps: int


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schedule: dict
    engine: Literal["modal", "grid"] = "modal"
    profile: Literal["bump", "ground"] = "bump"
    bit: Literal[0, 1] = 0
    grid_nodes: int | None = Field(default=None, ge=8)
    xmax: float | None = Field(default=None, gt=0)  # in units of ell
    dt: float | None = Field(default=None, gt=0)  # in the schedule's time units
    n_modes: int | None = Field(default=None, ge=2)
    check_accuracy: bool | None = None  # None: on for grid runs, moot for modal
    include_states: bool = False


class ReadoutModel(BaseModel):
    p0: float
    p1: float
    bit: int
    fidelity_plus: float
    fidelity_minus: float


class RunResponse(BaseModel):
    engine: str
    config: ConfigModel
    grid_nodes: int
    x_max: float
    dt: float | None
    profile: str
    bit: int
    steps: list[dict]
    global_phase: tuple[float, float] | None
    norm: float
    readout: ReadoutModel
    final_state_csv: str | None = None
    step_state_csv: list[str] | None = None


class ProgramRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    program: list[dict]
    engine: Literal["modal", "grid"] = "modal"
    grid_nodes: int | None = Field(default=None, ge=8)
    dt: float | None = Field(default=None, gt=0)
    config: ConfigModel = ConfigModel()


class ProgramResponse(BaseModel):
    engine: str
    ops: list[dict]
    global_phase_log: list[dict]


class VerifyRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    level: Literal["quick", "full"] = "quick"
    seed: int = 12345
    criteria: list[int] | None = None
    grid_nodes: int | None = Field(default=None, ge=8)
    dt: float | None = Field(default=None, gt=0)
    parallel: bool = True


class CriterionModel(BaseModel):
    number: int
    name: str
    passed: bool
    detail: str
    measured: dict
    seconds: float


class VerifyResponse(BaseModel):
    level: str
    seed: int
    all_passed: bool
    results: list[CriterionModel]
    lines: list[str]


class ErrorBody(BaseModel):
    kind: Literal["parse", "physics-contract", "engine-accuracy", "internal"]
    message: str


class HealthResponse(BaseModel):
    status: str
    version: str
