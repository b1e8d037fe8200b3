"""FastAPI app exposing the simulation and analysis operations."""

from __future__ import annotations

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import ConfigurationError
from . import handlers, schemas


def create_app() -> FastAPI:
    app = FastAPI(
        title="brownsync",
        description=(
            "Monte Carlo simulation of Brownian particles with stochastic "
            "synchronizing jumps, plus closed-form and regime analysis."
        ),
        version=__version__,
    )

    @app.exception_handler(ConfigurationError)
    async def _config_error(request, exc: ConfigurationError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/simulate", response_model=schemas.SimulateResponse)
    def simulate(req: schemas.SimulateRequest) -> schemas.SimulateResponse:
        return handlers.run_simulate(req)

    @app.post("/kappa", response_model=schemas.KappaResponse)
    def kappa(req: schemas.KappaRequest) -> schemas.KappaResponse:
        return handlers.run_kappa(req)

    @app.post("/oracle", response_model=schemas.OracleResponse)
    def oracle(req: schemas.OracleRequest) -> schemas.OracleResponse:
        return handlers.run_oracle(req)

    @app.post("/sweep", response_model=schemas.SweepResponse)
    def sweep(req: schemas.SweepRequest) -> schemas.SweepResponse:
        return handlers.run_sweep(req)

    @app.post("/renewal-check", response_model=schemas.RenewalCheckResponse)
    def renewal_check(
        req: schemas.RenewalCheckRequest,
    ) -> schemas.RenewalCheckResponse:
        return handlers.run_renewal_check(req)

    return app


app = create_app()
