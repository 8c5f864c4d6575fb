"""Least-squares prediction of bandwidth-limitation ratios from page features.

The model is plain OLS on raw (unstandardized) feature scales, fit through
a QR decomposition for numerical stability. Predictive quality is reported
as a symmetric factor error over repeated seeded train/test splits.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr as scipy_qr
from scipy.linalg import solve_triangular

# Fixed feature order for the page-characteristics pipeline.
FEATURE_ORDER = (
    "css_count",
    "image_count",
    "script_count",
    "css_kb",
    "text_count",
    "text_kb",
    "script_kb",
    "image_kb",
)

# Floor applied to predictions and actuals before the factor error, since
# observed ratios can be exactly zero.
FACTOR_EPSILON = 1e-6


class RankDeficient(ValueError):
    """The design matrix has collinear columns."""

    def __init__(self, columns):
        self.columns = tuple(int(c) for c in columns)
        super().__init__(
            f"design matrix is rank deficient; offending column indices {self.columns} "
            "(0 is the intercept, 1.. are features)"
        )


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    """Feature matrix (n rows, fixed arity) and non-negative targets."""

    features: np.ndarray
    targets: np.ndarray

    @classmethod
    def from_rows(cls, rows) -> "Dataset":
        feats = []
        targets = []
        arity = None
        for row_features, target in rows:
            vec = [float(v) for v in row_features]
            if arity is None:
                arity = len(vec)
            elif len(vec) != arity:
                raise ValueError(f"inconsistent feature arity: {len(vec)} != {arity}")
            feats.append(vec)
            targets.append(float(target))
        if not feats:
            raise InsufficientData("dataset has no rows")
        targets_arr = np.asarray(targets, dtype=float)
        if not np.all(np.isfinite(targets_arr)):
            raise ValueError("targets must be finite")
        return cls(np.asarray(feats, dtype=float), targets_arr)

    def __post_init__(self):
        if self.features.ndim != 2 or self.targets.ndim != 1:
            raise ValueError("features must be 2-D and targets 1-D")
        if self.features.shape[0] != self.targets.shape[0]:
            raise ValueError("features and targets disagree on row count")

    def __len__(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class FitResult:
    """OLS solution: intercept, raw coefficients, and a descending report."""

    intercept: float
    coefficients: tuple[float, ...]
    sorted_report: tuple[tuple[str, float], ...]

    def predict(self, features: np.ndarray) -> np.ndarray:
        return self.intercept + np.asarray(features, dtype=float) @ np.asarray(self.coefficients)


def _factor_names(n_features: int) -> tuple[str, ...]:
    if n_features == len(FEATURE_ORDER):
        return FEATURE_ORDER
    return tuple(f"feature_{i}" for i in range(n_features))


def fit_ols(data: Dataset) -> FitResult:
    """Least-squares fit with an intercept, via pivoted QR.

    Raises :class:`RankDeficient` with the offending design-matrix column
    indices when the intercept-augmented design is collinear, and
    :class:`InsufficientData` when there are not strictly more rows than
    features.
    """
    n, p = data.features.shape
    if n <= p:
        raise InsufficientData(f"need more than {p} rows to fit {p} features, got {n}")
    design = np.column_stack([np.ones(n), data.features])
    q, r, piv = scipy_qr(design, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = diag[0] * max(design.shape) * np.finfo(float).eps if diag.size else 0.0
    rank = int(np.sum(diag > tol))
    cols = p + 1
    if rank < cols:
        raise RankDeficient(sorted(piv[rank:]))
    rhs = q.T @ data.targets
    beta_perm = solve_triangular(r, rhs)
    beta = np.empty(cols)
    beta[piv] = beta_perm
    intercept = float(beta[0])
    coefficients = tuple(float(c) for c in beta[1:])
    names = _factor_names(p)
    report = tuple(sorted(zip(names, coefficients), key=lambda kv: (-kv[1], kv[0])))
    return FitResult(intercept, coefficients, report)


def fit_ols_normal_equations(data: Dataset) -> FitResult:
    """Brute-force reference fit solving the normal equations directly.

    Kept as an independent cross-check of :func:`fit_ols`; no shared linear
    algebra path beyond the raw solver.
    """
    n, p = data.features.shape
    if n <= p:
        raise InsufficientData(f"need more than {p} rows to fit {p} features, got {n}")
    design = np.column_stack([np.ones(n), data.features])
    gram = design.T @ design
    if np.linalg.matrix_rank(gram) < p + 1:
        raise RankDeficient(range(p + 1))
    beta = np.linalg.solve(gram, design.T @ data.targets)
    names = _factor_names(p)
    coefficients = tuple(float(c) for c in beta[1:])
    report = tuple(sorted(zip(names, coefficients), key=lambda kv: (-kv[1], kv[0])))
    return FitResult(float(beta[0]), coefficients, report)


def factor_error(prediction: float, actual: float) -> float:
    """Symmetric multiplicative error, always >= 1.

    Both values are floored at :data:`FACTOR_EPSILON` so zero targets stay
    finite; a value of 2.0 means off by a factor of two in either direction.
    """
    p = max(float(prediction), FACTOR_EPSILON)
    a = max(float(actual), FACTOR_EPSILON)
    return max(p, a) / min(p, a)


@dataclass(frozen=True)
class TrialResult:
    index: int
    n_test: int
    mean_factor_error: float | None
    skipped: bool = False


@dataclass(frozen=True)
class SplitEvaluation:
    """Factor-error statistics across all test predictions of all trials."""

    mean_factor_error: float
    median_factor_error: float
    per_trial: tuple[TrialResult, ...]
    trials_skipped: int


def evaluate_splits(data: Dataset, train_fraction: float = 0.8,
                    trials: int = 100, seed: int = 0) -> SplitEvaluation:
    """Repeated seeded train/test splits; reports mean and median factor error.

    Rows are first put in a canonical lexicographic order so the result is
    invariant under permutations of the input; each trial then shuffles with
    its own pre-drawn seed, fits on the training split, and scores the test
    split. Rank-deficient trials are skipped and counted.
    """
    if not (0 < train_fraction < 1):
        raise ValueError("train_fraction must be in (0, 1)")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n, p = data.features.shape
    n_train = int(n * train_fraction)
    if n_train <= p or n_train >= n:
        raise InsufficientData(
            f"{n} rows at train fraction {train_fraction} leave {n_train} training rows; "
            f"need more than {p} for the fit and at least 1 for testing"
        )

    # lexsort treats the last key as primary; order keys so column 0 leads
    # and the target breaks remaining ties.
    order = np.lexsort((data.targets,) + tuple(data.features[:, j] for j in range(p - 1, -1, -1)))
    feats = data.features[order]
    targets = data.targets[order]

    master = np.random.default_rng(seed)
    trial_seeds = master.integers(0, 2 ** 63 - 1, size=trials)

    all_errors: list[float] = []
    per_trial: list[TrialResult] = []
    skipped = 0
    for index, trial_seed in enumerate(trial_seeds):
        rng = np.random.default_rng(int(trial_seed))
        perm = rng.permutation(n)
        train, test = perm[:n_train], perm[n_train:]
        try:
            fit = fit_ols(Dataset(feats[train], targets[train]))
        except RankDeficient:
            skipped += 1
            per_trial.append(TrialResult(index, 0, None, skipped=True))
            continue
        predictions = fit.predict(feats[test])
        errors = [factor_error(pred, act) for pred, act in zip(predictions, targets[test])]
        all_errors.extend(errors)
        per_trial.append(TrialResult(index, len(errors), statistics.fmean(errors)))
    if not all_errors:
        raise InsufficientData("every trial was rank deficient; no predictions to score")
    return SplitEvaluation(
        mean_factor_error=statistics.fmean(all_errors),
        median_factor_error=statistics.median(all_errors),
        per_trial=tuple(per_trial),
        trials_skipped=skipped,
    )


@dataclass(frozen=True)
class JoinReport:
    matched: int
    features_only: tuple[str, ...]
    ratios_only: tuple[str, ...]
    undefined_ratio_excluded: int


def dataset_from_features(feature_rows, ratios) -> tuple[Dataset, JoinReport]:
    """Join page features with per-site ratios into a regression dataset.

    ``ratios`` maps site_id to a ratio or None (undefined, excluded with a
    count rather than imputed). Sites present on only one side are reported.
    """
    by_site = {row.site_id: row for row in feature_rows}
    features_only = tuple(sorted(set(by_site) - set(ratios)))
    ratios_only = tuple(sorted(set(ratios) - set(by_site)))
    rows = []
    undefined = 0
    for site_id in sorted(set(by_site) & set(ratios)):
        ratio = ratios[site_id]
        if ratio is None:
            undefined += 1
            continue
        row = by_site[site_id]
        vector = [float(getattr(row, name)) for name in FEATURE_ORDER]
        rows.append((vector, float(ratio)))
    if not rows:
        raise InsufficientData("no joined rows with a defined ratio")
    report = JoinReport(len(rows), features_only, ratios_only, undefined)
    return Dataset.from_rows(rows), report
