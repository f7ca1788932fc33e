"""FastAPI wrapper around the simulator: one endpoint per CLI operation.

Domain errors map to structured JSON bodies with a `kind` the CLI translates
back into its exit codes: parse -> 2, physics-contract -> 3,
engine-accuracy -> 1.
"""
from __future__ import annotations

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from ..errors import EngineAccuracyError, PhysicsContractError, ScheduleParseError
from . import ops
from .models import (
    CompileRequest,
    CompileResponse,
    ErrorBody,
    HealthResponse,
    ProgramRequest,
    ProgramResponse,
    RunRequest,
    RunResponse,
    ScatterRequest,
    ScatterResponse,
    SpectrumRequest,
    SpectrumResponse,
    VerifyRequest,
    VerifyResponse,
)

SERVICE_VERSION = "0.1.0"

ERROR_KINDS: dict[type, tuple[int, str]] = {
    ScheduleParseError: (400, "parse"),
    PhysicsContractError: (409, "physics-contract"),
    EngineAccuracyError: (422, "engine-accuracy"),
}

_ERR = {"model": ErrorBody}


def create_app() -> FastAPI:
    app = FastAPI(title="quantum abacus service", version=SERVICE_VERSION,
                  description="Junction-gate simulator: spectra, scattering, "
                              "schedule runs, qubit programs, verification.")

    def make_handler(status: int, kind: str):
        async def handle(request, exc):
            return JSONResponse(status_code=status,
                                content={"kind": kind, "message": str(exc)})
        return handle

    for exc_type, (status, kind) in ERROR_KINDS.items():
        app.add_exception_handler(exc_type, make_handler(status, kind))

    @app.get("/healthz", response_model=HealthResponse)
    def healthz() -> HealthResponse:
        return HealthResponse(status="ok", version=SERVICE_VERSION)

    @app.post("/spectrum", response_model=SpectrumResponse,
              responses={400: _ERR})
    def post_spectrum(req: SpectrumRequest) -> SpectrumResponse:
        return ops.do_spectrum(req)

    @app.post("/scatter", response_model=ScatterResponse, responses={400: _ERR})
    def post_scatter(req: ScatterRequest) -> ScatterResponse:
        return ops.do_scatter(req)

    @app.post("/compile", response_model=CompileResponse, responses={400: _ERR})
    def post_compile(req: CompileRequest) -> CompileResponse:
        return ops.do_compile(req)

    @app.post("/run", response_model=RunResponse,
              responses={400: _ERR, 409: _ERR, 422: _ERR})
    def post_run(req: RunRequest) -> RunResponse:
        return ops.do_run(req)

    @app.post("/program", response_model=ProgramResponse,
              responses={400: _ERR, 409: _ERR, 422: _ERR})
    def post_program(req: ProgramRequest) -> ProgramResponse:
        return ops.do_program(req)

    @app.post("/verify", response_model=VerifyResponse)
    def post_verify(req: VerifyRequest) -> VerifyResponse:
        return ops.do_verify(req)

    return app


app = create_app()
