"""FastAPI application exposing measurement and analysis endpoints.

Run it with ``uvicorn cpilab.service.app:app`` or ``cpilab serve``. One
server should own a given measurement testbed: external-command backends
reconfigure a shared emulated link, and the backend serializes those
invocations within the process.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from . import handlers
from . import models as m

app = FastAPI(title="cpilab", version=__version__)


@app.exception_handler(handlers.ServiceError)
async def _service_error(_request: Request, exc: handlers.ServiceError) -> JSONResponse:
    return JSONResponse(status_code=exc.status, content={"detail": exc.detail()})


@app.get("/healthz")
def healthz() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/measure", response_model=m.MeasureResponse)
def measure(request: m.MeasureRequest) -> m.MeasureResponse:
    return handlers.measure(request)


@app.post("/classify", response_model=m.ClassifyResponse)
def classify(request: m.ClassifyRequest) -> m.ClassifyResponse:
    return handlers.classify(request)


@app.post("/features", response_model=m.FeaturesResponse)
def features(request: m.FeaturesRequest) -> m.FeaturesResponse:
    return handlers.features(request)


@app.post("/regress", response_model=m.RegressResponse)
def regress(request: m.RegressRequest) -> m.RegressResponse:
    return handlers.regress(request)


@app.post("/plot", response_model=m.PlotResponse)
def plot(request: m.PlotRequest) -> m.PlotResponse:
    return handlers.plot(request)
