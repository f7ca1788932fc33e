"""Request -> response operations shared by the HTTP service and the CLI.

Every function takes a validated request model and returns a response model;
domain errors (ScheduleParseError, PhysicsContractError, EngineAccuracyError)
propagate to the caller, which maps them to HTTP statuses or exit codes.
Keeping the CLI on these functions guarantees that local and --server runs
produce byte-identical artifacts.
"""
from __future__ import annotations

import io

import numpy as np

from ..abacus import compile_gate, prepare, readout, run_program
from ..config import DEFAULT_GRID_NODES, DEFAULT_N_MODES, DEFAULT_XMAX_ELL
from ..evolve import Schedule, gate_from_spec, run_schedule
from ..oscillator import make_grid
from ..pointint import PointInteraction, fd_oracle_levels, robin_levels, \
    scattering_amplitudes, spectrum
from ..verify import run_verification
from .models import (
    CompileRequest,
    CompileResponse,
    ConfigModel,
    CriterionModel,
    ProgramRequest,
    ProgramResponse,
    ReadoutModel,
    RunRequest,
    RunResponse,
    ScatterRequest,
    ScatterResponse,
    ScatterRow,
    SpectrumRequest,
    SpectrumResponse,
    VerifyRequest,
    VerifyResponse,
)

__all__ = ["do_spectrum", "do_scatter", "do_compile", "do_run", "do_program",
           "do_verify"]


def _csv_string(obj) -> str:
    buf = io.StringIO()
    obj.to_csv(buf)
    return buf.getvalue()


def do_spectrum(req: SpectrumRequest) -> SpectrumResponse:
    cfg = req.config.to_physical()
    if req.theta is not None:
        solver = fd_oracle_levels if req.method == "fd" else robin_levels
        res = solver(req.theta, req.count, cfg)
    else:
        res = spectrum(PointInteraction(gate_from_spec(req.gate), cfg.l0),
                       req.count, cfg, method=req.method)
    return SpectrumResponse(boundary=res.boundary, method=res.method,
                            levels=[float(e) for e in res.levels],
                            residuals=[float(r) for r in res.residuals],
                            csv=_csv_string(res))


def do_scatter(req: ScatterRequest) -> ScatterResponse:
    cfg = req.config.to_physical()
    pi = PointInteraction(gate_from_spec(req.gate), cfg.l0)
    if req.count == 1:
        ks = np.array([req.k_min])
    elif req.spacing == "log":
        ks = np.geomspace(req.k_min, req.k_max, req.count)
    else:
        ks = np.linspace(req.k_min, req.k_max, req.count)
    rows = []
    for k_ell in ks:
        amp = scattering_amplitudes(pi, float(k_ell) / cfg.ell)
        rows.append(ScatterRow(k_ell=float(k_ell), transmission=amp.transmission,
                               reflection=amp.reflection,
                               unitarity_residual=amp.unitarity_residual()))
    lines = ["k_ell,transmission,reflection,unitarity_residual"]
    lines += [f"{r.k_ell:.17g},{r.transmission:.17g},{r.reflection:.17g},"
              f"{r.unitarity_residual:.17g}" for r in rows]
    return ScatterResponse(gate=req.gate, rows=rows, csv="\n".join(lines) + "\n")


def do_compile(req: CompileRequest) -> CompileResponse:
    cfg = req.config.to_physical()
    compiled = compile_gate(gate_from_spec(req.gate), cfg)
    ph = compiled.recorded_phase
    return CompileResponse(schedule=compiled.schedule.to_dict(),
                           recorded_phase=(float(ph.real), float(ph.imag)),
                           n_gate_steps=compiled.n_gate_steps,
                           n_steps=compiled.n_steps)


def do_run(req: RunRequest) -> RunResponse:
    sch = Schedule.from_dict(req.schedule)
    cfg = sch.cfg
    nodes = req.grid_nodes or DEFAULT_GRID_NODES
    x_max = (req.xmax if req.xmax is not None else DEFAULT_XMAX_ELL) * cfg.ell
    grid = make_grid(cfg, nodes, x_max)
    q = prepare(req.profile, req.bit, cfg, grid=grid)
    check = req.check_accuracy
    if check is None:
        check = req.engine == "grid"
    result = run_schedule(sch, q.state, req.engine, dt=req.dt,
                          n_modes=req.n_modes or DEFAULT_N_MODES,
                          check_accuracy=check, record_states=req.include_states)
    ro = readout(q.with_state(result.final))
    gp = result.global_phase
    step_csv = None
    if req.include_states:
        step_csv = [_csv_string(rec.state) for rec in result.trace]
    return RunResponse(
        engine=result.engine, config=ConfigModel.from_physical(cfg),
        grid_nodes=nodes, x_max=float(x_max), dt=req.dt,
        profile=req.profile, bit=req.bit,
        steps=[rec.to_jsonable() for rec in result.trace],
        global_phase=None if gp is None else (float(gp.real), float(gp.imag)),
        norm=result.final.norm(),
        readout=ReadoutModel(p0=ro.p0, p1=ro.p1, bit=ro.bit(),
                             fidelity_plus=ro.fidelity_plus,
                             fidelity_minus=ro.fidelity_minus),
        final_state_csv=_csv_string(result.final) if req.include_states else None,
        step_state_csv=step_csv)


def do_program(req: ProgramRequest) -> ProgramResponse:
    cfg = req.config.to_physical()
    grid = make_grid(cfg, req.grid_nodes or DEFAULT_GRID_NODES)
    out = run_program(req.program, cfg, req.engine, grid=grid, dt=req.dt)
    return ProgramResponse(**out)


def do_verify(req: VerifyRequest) -> VerifyResponse:
    rep = run_verification(req.level, req.seed, criteria=req.criteria,
                           grid_nodes=req.grid_nodes, dt=req.dt,
                           parallel=req.parallel)
    return VerifyResponse(level=rep.level, seed=rep.seed,
                          all_passed=rep.all_passed,
                          results=[CriterionModel(**r.to_jsonable())
                                   for r in rep.results],
                          lines=rep.lines())
