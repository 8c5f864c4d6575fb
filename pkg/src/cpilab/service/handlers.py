"""Service operations behind the HTTP endpoints.

Each handler is a plain function from a request model to a response model
so the CLI can call them in-process and the FastAPI app can expose them
over the wire with identical behavior. Domain failures raise
:class:`ServiceError`, which the app maps to a structured error payload.
"""

from __future__ import annotations

from ..classify import aggregate_rows as _aggregate_rows
from ..classify import classify_batch as _classify_batch
from ..har import MalformedHar, extract_features
from ..model import NetPoint
from ..regression import (
    InsufficientData,
    RankDeficient,
    dataset_from_features,
    evaluate_splits,
    fit_ols,
)
from ..search import SearchAborted, search_trace
from ..svgplot import render_plot
from . import models as m


class ServiceError(Exception):
    """A domain failure with a wire-friendly code and optional partial result."""

    def __init__(self, code: str, message: str, partial_path: m.CpiPathModel | None = None,
                 status: int = 400):
        super().__init__(message)
        self.code = code
        self.message = message
        self.partial_path = partial_path
        self.status = status

    def detail(self) -> dict:
        return {
            "code": self.code,
            "message": self.message,
            "partial_path": self.partial_path.model_dump() if self.partial_path else None,
        }


def measure(request: m.MeasureRequest) -> m.MeasureResponse:
    try:
        backend = request.backend.build()
        start = request.start.to_core()
        schedule = request.schedule.to_core()
    except ValueError as exc:
        raise ServiceError("InvalidConfiguration", str(exc)) from exc
    try:
        path, trace = search_trace(
            start, schedule, backend,
            trials=request.trials,
            plateau_epsilon=request.plateau_epsilon,
            site_id=request.site_id,
            aggregate=request.aggregate,
        )
    except SearchAborted as exc:
        cause = exc.__cause__
        code = type(cause).__name__ if cause is not None else "BackendFailure"
        partial = m.CpiPathModel.from_core(exc.partial_path) if exc.partial_path else None
        raise ServiceError(code, str(exc), partial_path=partial) from exc
    return m.MeasureResponse(
        path=m.CpiPathModel.from_core(path),
        trace=m.TraceModel.from_core(trace) if request.include_trace else None,
    )


def _aggregate(rows, key_fields: tuple[str, ...]) -> list[m.GroupSummaryModel]:
    return [
        m.GroupSummaryModel.from_core(key_fields, key, summary)
        for key, summary in _aggregate_rows(rows, key_fields)
    ]


def classify(request: m.ClassifyRequest) -> m.ClassifyResponse:
    try:
        paths = [p.to_core() for p in request.paths]
        envelopes = [e.to_core() for e in request.envelopes]
    except ValueError as exc:
        raise ServiceError("InvalidConfiguration", str(exc)) from exc
    if not envelopes and not request.invalid_envelopes:
        raise ServiceError("NoValidPairs", "no envelopes supplied")
    invalid = [e.to_core() for e in request.invalid_envelopes]
    rows = _classify_batch(paths, envelopes, invalid)
    if not any(r.label is not None for r in rows):
        raise ServiceError("NoValidPairs", "no (path, envelope) pair classified successfully")
    return m.ClassifyResponse(
        rows=[m.ClassificationRowModel.from_core(r) for r in rows],
        by_site=_aggregate(rows, ("site_id",)),
        by_provider_year=_aggregate(rows, ("provider", "year")),
        by_city_provider_year=_aggregate(rows, ("city", "provider", "year")),
    )


def features(request: m.FeaturesRequest) -> m.FeaturesResponse:
    rows = []
    errors = []
    for document in request.documents:
        try:
            rows.append(m.PageFeaturesModel.from_core(extract_features(document.har, document.site_id)))
        except MalformedHar as exc:
            errors.append(m.FeatureErrorModel(site_id=document.site_id, message=str(exc)))
    return m.FeaturesResponse(rows=rows, errors=errors)


def regress(request: m.RegressRequest) -> m.RegressResponse:
    ratios = {r.site_id: r.ratio for r in request.ratios}
    feature_rows = [f.to_core() for f in request.features]
    try:
        dataset, join = dataset_from_features(feature_rows, ratios)
        fit = fit_ols(dataset)
        evaluation = evaluate_splits(dataset, request.train_fraction, request.trials, request.seed)
    except (InsufficientData, RankDeficient, ValueError) as exc:
        raise ServiceError(type(exc).__name__, str(exc)) from exc
    return m.RegressResponse(
        intercept=fit.intercept,
        coefficients=[m.CoefficientModel(factor=n, coefficient=v) for n, v in fit.sorted_report],
        evaluation=m.EvaluationModel(
            mean_factor_error=evaluation.mean_factor_error,
            median_factor_error=evaluation.median_factor_error,
            trials_skipped=evaluation.trials_skipped,
            per_trial=[
                m.TrialModel(index=t.index, n_test=t.n_test,
                             mean_factor_error=t.mean_factor_error, skipped=t.skipped)
                for t in evaluation.per_trial
            ],
        ),
        join=m.JoinModel(
            matched=join.matched,
            features_only=list(join.features_only),
            ratios_only=list(join.ratios_only),
            undefined_ratio_excluded=join.undefined_ratio_excluded,
        ),
    )


def plot(request: m.PlotRequest) -> m.PlotResponse:
    try:
        paths = [p.to_core() for p in request.paths]
        envelopes = [e.to_core() for e in request.envelopes]
        svg = render_plot(paths, envelopes)
    except ValueError as exc:
        raise ServiceError("InvalidConfiguration", str(exc)) from exc
    return m.PlotResponse(svg=svg)


# Route name -> (handler, request model, response model); shared by the app
# and by the CLI's in-process dispatch.
ROUTES = {
    "measure": (measure, m.MeasureRequest, m.MeasureResponse),
    "classify": (classify, m.ClassifyRequest, m.ClassifyResponse),
    "features": (features, m.FeaturesRequest, m.FeaturesResponse),
    "regress": (regress, m.RegressRequest, m.RegressResponse),
    "plot": (plot, m.PlotRequest, m.PlotResponse),
}
