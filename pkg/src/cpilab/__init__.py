"""Measure how webpage performance responds to small latency and bandwidth
changes, and classify sites against network performance envelopes."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    CaseLabel,
    CpiPath,
    Envelope,
    NetPoint,
    PsiSample,
    StepSchedule,
    bw_successor,
    lat_successor,
)
from .search import candidates, search, search_trace  # noqa: F401
from .classify import classify, classify_batch, case_ratio  # noqa: F401
from .har import classify_asset, extract_features  # noqa: F401
from .regression import evaluate_splits, factor_error, fit_ols  # noqa: F401
