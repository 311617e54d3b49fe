"""FastAPI application wrapping the optimization and evaluation handlers."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import ContractError, DomainError, InputError
from . import handlers
from .models import (
    BackbonesResponse,
    CapabilityRequest,
    CapabilityResponse,
    ExperimentRequest,
    ExperimentResponse,
    HealthResponse,
    OptimizeRequest,
    OptimizeResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(title="peo", version=__version__)

    @app.exception_handler(InputError)
    async def input_error(_: Request, exc: InputError) -> JSONResponse:
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(ContractError)
    async def contract_error(_: Request, exc: ContractError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(DomainError)
    async def domain_error(_: Request, exc: DomainError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/v1/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return handlers.handle_health()

    @app.get("/v1/backbones", response_model=BackbonesResponse)
    def backbones() -> BackbonesResponse:
        return handlers.handle_backbones()

    @app.post("/v1/capability-check", response_model=CapabilityResponse)
    def capability(request: CapabilityRequest) -> CapabilityResponse:
        return handlers.handle_capability(request)

    @app.post("/v1/optimize", response_model=OptimizeResponse)
    def optimize(request: OptimizeRequest) -> OptimizeResponse:
        return handlers.handle_optimize(request)

    @app.post("/v1/experiments", response_model=ExperimentResponse)
    def experiments(request: ExperimentRequest) -> ExperimentResponse:
        return handlers.handle_experiment(request)

    return app


app = create_app()
