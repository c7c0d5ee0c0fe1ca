"""FastAPI application wrapping the mencode core.

Domain errors map onto stable status codes so the CLI can translate them
into exit codes: configuration and data problems give 400 (422 for body
validation), no-interior-mode conditions give 409, and exhaustive-search
size limits give 413.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import (
    InstanceTooLarge,
    MencodeError,
    NoInteriorMaximum,
    NoInteriorMode,
)
from . import core, schemas

app = FastAPI(title="mencode", version=__version__)


def _status_for(exc: MencodeError) -> int:
    if isinstance(exc, (NoInteriorMode, NoInteriorMaximum)):
        return 409
    if isinstance(exc, InstanceTooLarge):
        return 413
    return 400


@app.exception_handler(MencodeError)
async def mencode_error_handler(_request: Request, exc: MencodeError):
    body = schemas.ErrorBody(
        error=type(exc).__name__,
        message=str(exc),
        min_feasible_ess=getattr(exc, "min_feasible_ess", None),
    )
    return JSONResponse(status_code=_status_for(exc), content=body.model_dump())


@app.get("/")
def root():
    return {"service": "mencode", "version": __version__}


@app.post("/runs/bench", response_model=schemas.BenchResponse)
def bench(req: schemas.BenchRequest):
    return core.run_bench(req)


@app.post("/runs/loo", response_model=schemas.LooResponse)
def loo(req: schemas.LooRequest):
    return core.run_loo(req)


@app.post("/runs/curve", response_model=schemas.CurveResponse)
def curve(req: schemas.CurveRequest):
    return core.run_curve(req)


@app.post("/codelab/estimates", response_model=schemas.EstimatesResponse)
def codelab_estimates(req: schemas.EstimatesRequest):
    return core.run_codelab_estimates(req)


@app.post("/codelab/lengths", response_model=schemas.LengthsResponse)
def codelab_lengths(req: schemas.LengthsRequest):
    return core.run_codelab_lengths(req)


@app.post("/codelab/smml", response_model=schemas.SmmlResponse)
def codelab_smml(req: schemas.SmmlRequest):
    return core.run_codelab_smml(req)


@app.post("/codelab/normalize", response_model=schemas.NormalizeResponse)
def codelab_normalize(req: schemas.NormalizeRequest):
    return core.run_codelab_normalize(req)
