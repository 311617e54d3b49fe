"""Client for the peo service.

Local mode (the default) dispatches straight to the service handlers with
the same request/response models the HTTP routes use; remote mode speaks
to a running server over HTTP.  Callers cannot tell the difference.
"""

from __future__ import annotations

import httpx

from .errors import InputError
from .service import handlers
from .service.models import (
    BackbonesResponse,
    CapabilityRequest,
    CapabilityResponse,
    ExperimentRequest,
    ExperimentResponse,
    HealthResponse,
    OptimizeRequest,
    OptimizeResponse,
)


class PeoClient:
    def __init__(self, base_url: str | None = None, timeout: float = 600.0):
        self.base_url = base_url.rstrip("/") if base_url else None
        self.timeout = timeout

    def _post(self, path: str, payload: dict) -> dict:
        with httpx.Client(base_url=self.base_url, timeout=self.timeout) as client:
            resp = client.post(path, json=payload)
            if resp.status_code >= 400:
                detail = ""
                try:
                    detail = resp.json().get("detail", "")
                except Exception:  # noqa: BLE001
                    detail = resp.text
                raise InputError(f"server rejected {path}: {resp.status_code} {detail}")
            return resp.json()

    def _get(self, path: str) -> dict:
        with httpx.Client(base_url=self.base_url, timeout=self.timeout) as client:
            resp = client.get(path)
            resp.raise_for_status()
            return resp.json()

    def health(self) -> HealthResponse:
        if self.base_url is None:
            return handlers.handle_health()
        return HealthResponse(**self._get("/v1/health"))

    def backbones(self) -> BackbonesResponse:
        if self.base_url is None:
            return handlers.handle_backbones()
        return BackbonesResponse(**self._get("/v1/backbones"))

    def capability_check(self, request: CapabilityRequest) -> CapabilityResponse:
        if self.base_url is None:
            return handlers.handle_capability(request)
        return CapabilityResponse(**self._post("/v1/capability-check", request.model_dump()))

    def optimize(self, request: OptimizeRequest) -> OptimizeResponse:
        if self.base_url is None:
            return handlers.handle_optimize(request)
        return OptimizeResponse(**self._post("/v1/optimize", request.model_dump()))

    def run_experiment(self, request: ExperimentRequest) -> ExperimentResponse:
        if self.base_url is None:
            return handlers.handle_experiment(request)
        return ExperimentResponse(**self._post("/v1/experiments", request.model_dump()))
