"""HTTP service wrapping the simulator (FastAPI + pydantic models)."""
from .app import ERROR_KINDS, create_app
from .models import (
    CompileRequest,
    CompileResponse,
    ConfigModel,
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

__all__ = [
    "ERROR_KINDS",
    "create_app",
    "CompileRequest",
    "CompileResponse",
    "ConfigModel",
    "ErrorBody",
    "HealthResponse",
    "ProgramRequest",
    "ProgramResponse",
    "RunRequest",
    "RunResponse",
    "ScatterRequest",
    "ScatterResponse",
    "SpectrumRequest",
    "SpectrumResponse",
    "VerifyRequest",
    "VerifyResponse",
]
