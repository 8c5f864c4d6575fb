"""Request/response models for the measurement and analysis service.

These pydantic models are the wire format shared by the HTTP API and the
CLI client; converters to and from the core domain types live alongside
them so handlers stay thin.
"""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, Field, model_validator

from ..classify import ClassificationRow, InvalidEnvelope, RatioSummary
from ..har import PageFeatures
from ..backends import (
    DEFAULT_COMMAND_TIMEOUT_S,
    ExternalCommandBackend,
    ReplayGridBackend,
    SyntheticBackend,
)
from ..model import CpiPath, Envelope, NetPoint, PsiSample, StepSchedule
from ..search import SearchTrace


class NetPointModel(BaseModel):
    latency_ms: float = Field(ge=0)
    bandwidth_kbps: float = Field(gt=0)

    def to_core(self) -> NetPoint:
        return NetPoint(self.latency_ms, self.bandwidth_kbps)


class ScheduleModel(BaseModel):
    latency_step_ms: float = Field(default=10.0, gt=0)
    doubling_ceiling_kbps: float = Field(default=8192.0, gt=0)
    linear_step_kbps: float = Field(default=8192.0, gt=0)
    latency_floor_ms: float = Field(default=20.0, ge=0)
    bandwidth_ceiling_kbps: float = Field(default=307200.0, gt=0)

    @model_validator(mode="after")
    def _ordered(self):
        if self.doubling_ceiling_kbps > self.bandwidth_ceiling_kbps:
            raise ValueError("doubling ceiling cannot exceed the bandwidth ceiling")
        return self

    def to_core(self) -> StepSchedule:
        return StepSchedule(**self.model_dump())

    @classmethod
    def from_core(cls, schedule: StepSchedule) -> "ScheduleModel":
        return cls(
            latency_step_ms=schedule.latency_step_ms,
            doubling_ceiling_kbps=schedule.doubling_ceiling_kbps,
            linear_step_kbps=schedule.linear_step_kbps,
            latency_floor_ms=schedule.latency_floor_ms,
            bandwidth_ceiling_kbps=schedule.bandwidth_ceiling_kbps,
        )


class PsiSampleModel(BaseModel):
    latency_ms: float
    bandwidth_kbps: float
    psi_samples: list[float]
    psi_mean: float

    @classmethod
    def from_core(cls, sample: PsiSample) -> "PsiSampleModel":
        return cls(
            latency_ms=sample.point.latency_ms,
            bandwidth_kbps=sample.point.bandwidth_kbps,
            psi_samples=list(sample.samples),
            psi_mean=sample.mean,
        )

    def to_core(self) -> PsiSample:
        return PsiSample.from_samples(NetPoint(self.latency_ms, self.bandwidth_kbps), self.psi_samples)


class CpiPathModel(BaseModel):
    site_id: str
    schedule: ScheduleModel
    points: list[PsiSampleModel]

    @classmethod
    def from_core(cls, path: CpiPath) -> "CpiPathModel":
        return cls(
            site_id=path.site_id,
            schedule=ScheduleModel.from_core(path.schedule),
            points=[PsiSampleModel.from_core(s) for s in path.points],
        )

    def to_core(self) -> CpiPath:
        return CpiPath(self.site_id, self.schedule.to_core(), tuple(p.to_core() for p in self.points))


class SyntheticBackendModel(BaseModel):
    kind: Literal["synthetic"] = "synthetic"
    base: float = 0.0
    lat_coeff: float = 0.0
    bw_coeff: float = 0.0
    noise_stddev: float = Field(default=0.0, ge=0)
    seed: int = 0

    def build(self) -> SyntheticBackend:
        return SyntheticBackend(self.base, self.lat_coeff, self.bw_coeff, self.noise_stddev, self.seed)


class ReplaySampleModel(BaseModel):
    latency_ms: float
    bandwidth_kbps: float
    psi: float = Field(gt=0)


class ReplayBackendModel(BaseModel):
    kind: Literal["replay"] = "replay"
    site_id: str = ""
    samples: list[ReplaySampleModel] = Field(min_length=1)

    def build(self) -> ReplayGridBackend:
        entries: dict[tuple[float, float], list[float]] = {}
        for s in self.samples:
            entries.setdefault((s.latency_ms, s.bandwidth_kbps), []).append(s.psi)
        return ReplayGridBackend(self.site_id, entries)


class ExternalBackendModel(BaseModel):
    kind: Literal["external"] = "external"
    command: str = Field(min_length=1)
    timeout_s: float = Field(default=DEFAULT_COMMAND_TIMEOUT_S, gt=0)

    def build(self) -> ExternalCommandBackend:
        return ExternalCommandBackend(self.command, self.timeout_s)


BackendModel = Union[SyntheticBackendModel, ReplayBackendModel, ExternalBackendModel]


class MeasureRequest(BaseModel):
    site_id: str = "site"
    start: NetPointModel = Field(default_factory=lambda: NetPointModel(latency_ms=180.0, bandwidth_kbps=256.0))
    schedule: ScheduleModel = Field(default_factory=ScheduleModel)
    backend: BackendModel = Field(discriminator="kind")
    trials: Optional[int] = Field(default=None, ge=1)
    plateau_epsilon: Optional[float] = Field(default=None, ge=0)
    aggregate: Literal["mean", "median"] = "mean"
    include_trace: bool = False


class DecisionModel(BaseModel):
    latency_candidate: Optional[PsiSampleModel]
    bandwidth_candidate: Optional[PsiSampleModel]
    chosen_axis: str


class TraceModel(BaseModel):
    decisions: list[DecisionModel]
    stop_reason: str
    plateau_probe: list[PsiSampleModel]

    @classmethod
    def from_core(cls, trace: SearchTrace) -> "TraceModel":
        return cls(
            decisions=[
                DecisionModel(
                    latency_candidate=PsiSampleModel.from_core(d.latency_candidate) if d.latency_candidate else None,
                    bandwidth_candidate=PsiSampleModel.from_core(d.bandwidth_candidate) if d.bandwidth_candidate else None,
                    chosen_axis=d.chosen_axis,
                )
                for d in trace.decisions
            ],
            stop_reason=trace.stop_reason,
            plateau_probe=[PsiSampleModel.from_core(s) for s in trace.plateau_probe],
        )


class MeasureResponse(BaseModel):
    path: CpiPathModel
    trace: Optional[TraceModel] = None


class EnvelopeModel(BaseModel):
    provider: str
    city: str
    year: int
    lat_lo_ms: float = Field(gt=0)
    lat_hi_ms: float = Field(gt=0)
    bw_lo_kbps: float = Field(gt=0)
    bw_hi_kbps: float = Field(gt=0)

    @model_validator(mode="after")
    def _ordered(self):
        if not self.lat_lo_ms < self.lat_hi_ms:
            raise ValueError("lat_lo_ms must be < lat_hi_ms")
        if not self.bw_lo_kbps < self.bw_hi_kbps:
            raise ValueError("bw_lo_kbps must be < bw_hi_kbps")
        return self

    def to_core(self) -> Envelope:
        return Envelope(self.provider, self.city, self.year,
                        self.lat_lo_ms, self.lat_hi_ms, self.bw_lo_kbps, self.bw_hi_kbps)

    @classmethod
    def from_core(cls, env: Envelope) -> "EnvelopeModel":
        return cls(provider=env.provider, city=env.city, year=env.year,
                   lat_lo_ms=env.lat_lo_ms, lat_hi_ms=env.lat_hi_ms,
                   bw_lo_kbps=env.bw_lo_kbps, bw_hi_kbps=env.bw_hi_kbps)


class InvalidEnvelopeModel(BaseModel):
    provider: str = ""
    city: str = ""
    year: Optional[int] = None
    reason: str

    def to_core(self) -> InvalidEnvelope:
        return InvalidEnvelope(self.provider, self.city, self.year, self.reason)


class ClassifyRequest(BaseModel):
    paths: list[CpiPathModel] = Field(min_length=1)
    envelopes: list[EnvelopeModel]
    invalid_envelopes: list[InvalidEnvelopeModel] = []


class ClassificationRowModel(BaseModel):
    site_id: str
    provider: str
    city: str
    year: Optional[int]
    label: Optional[str]
    error: Optional[str] = None

    @classmethod
    def from_core(cls, row: ClassificationRow) -> "ClassificationRowModel":
        return cls(
            site_id=row.site_id, provider=row.provider, city=row.city, year=row.year,
            label=row.label.value if row.label is not None else None,
            error=row.error,
        )

    def to_core(self) -> ClassificationRow:
        from ..model import CaseLabel

        return ClassificationRow(
            self.site_id, self.provider, self.city, self.year,
            CaseLabel(self.label) if self.label is not None else None,
            self.error,
        )


class GroupSummaryModel(BaseModel):
    key: dict[str, Optional[Union[int, str]]]
    count_a: int
    count_b: int
    count_c: int
    count_d: int
    terminates_inside: int
    beyond_path: int
    errors: int
    ratio: Optional[float]
    share: Optional[float]

    @classmethod
    def from_core(cls, key_fields: tuple[str, ...], key: tuple,
                  summary: RatioSummary) -> "GroupSummaryModel":
        counts = summary.counts
        return cls(
            key=dict(zip(key_fields, key)),
            count_a=counts.a, count_b=counts.b, count_c=counts.c, count_d=counts.d,
            terminates_inside=counts.terminates_inside, beyond_path=counts.beyond_path,
            errors=counts.errors, ratio=summary.ratio, share=summary.share,
        )


class ClassifyResponse(BaseModel):
    rows: list[ClassificationRowModel]
    by_site: list[GroupSummaryModel]
    by_provider_year: list[GroupSummaryModel]
    by_city_provider_year: list[GroupSummaryModel]


class HarDocumentModel(BaseModel):
    site_id: str
    har: dict


class FeaturesRequest(BaseModel):
    documents: list[HarDocumentModel] = Field(min_length=1)


class PageFeaturesModel(BaseModel):
    site_id: str
    css_count: int = 0
    image_count: int = 0
    script_count: int = 0
    text_count: int = 0
    other_count: int = 0
    css_kb: float = 0.0
    image_kb: float = 0.0
    script_kb: float = 0.0
    text_kb: float = 0.0
    skipped_entries: int = 0

    @classmethod
    def from_core(cls, features: PageFeatures) -> "PageFeaturesModel":
        return cls(**features.__dict__)

    def to_core(self) -> PageFeatures:
        return PageFeatures(**self.model_dump())


class FeatureErrorModel(BaseModel):
    site_id: str
    message: str


class FeaturesResponse(BaseModel):
    rows: list[PageFeaturesModel]
    errors: list[FeatureErrorModel]


class SiteRatioModel(BaseModel):
    site_id: str
    ratio: Optional[float] = None


class RegressRequest(BaseModel):
    features: list[PageFeaturesModel] = Field(min_length=1)
    ratios: list[SiteRatioModel] = Field(min_length=1)
    train_fraction: float = Field(default=0.8, gt=0, lt=1)
    trials: int = Field(default=100, ge=1)
    seed: int = 0


class CoefficientModel(BaseModel):
    factor: str
    coefficient: float


class TrialModel(BaseModel):
    index: int
    n_test: int
    mean_factor_error: Optional[float]
    skipped: bool


class EvaluationModel(BaseModel):
    mean_factor_error: float
    median_factor_error: float
    trials_skipped: int
    per_trial: list[TrialModel]


class JoinModel(BaseModel):
    matched: int
    features_only: list[str]
    ratios_only: list[str]
    undefined_ratio_excluded: int


class RegressResponse(BaseModel):
    intercept: float
    coefficients: list[CoefficientModel]
    evaluation: EvaluationModel
    join: JoinModel


class PlotRequest(BaseModel):
    paths: list[CpiPathModel] = Field(min_length=1)
    envelopes: list[EnvelopeModel] = []


class PlotResponse(BaseModel):
    svg: str
