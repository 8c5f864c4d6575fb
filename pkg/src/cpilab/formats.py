"""On-disk formats: path documents, envelope/replay/feature CSVs, report tables.

All writers emit stable key and column orders with no timestamps, so two
runs over identical inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .classify import CaseCounts, InvalidEnvelope, RatioSummary
from .har import PageFeatures
from .model import CpiPath, Envelope, NetPoint, PsiSample, StepSchedule

PATH_FILE_SUFFIX = ".cpi.json"

ENVELOPE_HEADER = ["provider", "city", "year", "lat_mean_ms", "lat_ci_ms", "bw_mean_kbps", "bw_ci_kbps"]
REPLAY_HEADER = ["latency_ms", "bandwidth_kbps", "trial", "psi"]
FEATURES_HEADER = [
    "site_id",
    "css_count", "image_count", "script_count", "text_count",
    "css_kb", "image_kb", "script_kb", "text_kb",
    "other_count",
]
CLASSIFICATION_HEADER = ["site_id", "provider", "city", "year", "label", "error"]
COUNT_COLUMNS = ["count_a", "count_b", "count_c", "count_d", "terminates_inside", "beyond_path", "errors"]


def schedule_to_dict(schedule: StepSchedule) -> dict:
    return {
        "latency_step_ms": schedule.latency_step_ms,
        "doubling_ceiling_kbps": schedule.doubling_ceiling_kbps,
        "linear_step_kbps": schedule.linear_step_kbps,
        "latency_floor_ms": schedule.latency_floor_ms,
        "bandwidth_ceiling_kbps": schedule.bandwidth_ceiling_kbps,
    }


def path_to_document(path: CpiPath) -> dict:
    return {
        "site_id": path.site_id,
        "schedule": schedule_to_dict(path.schedule),
        "start": {
            "latency_ms": path.start.latency_ms,
            "bandwidth_kbps": path.start.bandwidth_kbps,
        },
        "points": [
            {
                "latency_ms": s.point.latency_ms,
                "bandwidth_kbps": s.point.bandwidth_kbps,
                "psi_samples": list(s.samples),
                "psi_mean": s.mean,
            }
            for s in path.points
        ],
    }


def path_from_document(document: dict) -> CpiPath:
    try:
        schedule = StepSchedule(**document["schedule"])
        points = tuple(
            PsiSample.from_samples(
                NetPoint(p["latency_ms"], p["bandwidth_kbps"]), p["psi_samples"]
            )
            for p in document["points"]
        )
        return CpiPath(document["site_id"], schedule, points)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"not a valid path document: {exc}") from exc


def write_path_file(path: CpiPath, file) -> None:
    file = Path(file)
    file.write_text(json.dumps(path_to_document(path), indent=2) + "\n")


def read_path_file(file) -> CpiPath:
    return path_from_document(json.loads(Path(file).read_text()))


def read_paths_dir(directory) -> list[CpiPath]:
    """All path documents in a directory, sorted by file name."""
    directory = Path(directory)
    return [read_path_file(f) for f in sorted(directory.glob(f"*{PATH_FILE_SUFFIX}"))]


def _check_header(reader, expected: list[str], what: str) -> None:
    if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != expected:
        raise ValueError(f"{what} must have header {','.join(expected)}, got {reader.fieldnames}")


def load_envelopes_csv(file) -> tuple[list[Envelope], list[InvalidEnvelope]]:
    """Parse envelope rows given as mean and confidence interval per axis.

    Rectangles are [mean - ci, mean + ci] on each axis. Rows whose derived
    bounds are non-positive or unordered are rejected with the offending
    file line number; valid rows still load.
    """
    envelopes: list[Envelope] = []
    invalid: list[InvalidEnvelope] = []
    with open(file, newline="") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader, ENVELOPE_HEADER, "envelope CSV")
        for line, row in enumerate(reader, start=2):
            provider = (row.get("provider") or "").strip()
            city = (row.get("city") or "").strip()
            try:
                year = int(row["year"])
                lat_mean = float(row["lat_mean_ms"])
                lat_ci = float(row["lat_ci_ms"])
                bw_mean = float(row["bw_mean_kbps"])
                bw_ci = float(row["bw_ci_kbps"])
            except (KeyError, TypeError, ValueError) as exc:
                invalid.append(InvalidEnvelope(provider, city, None, f"row {line}: unparseable value ({exc})"))
                continue
            try:
                envelopes.append(Envelope(
                    provider, city, year,
                    lat_lo_ms=lat_mean - lat_ci, lat_hi_ms=lat_mean + lat_ci,
                    bw_lo_kbps=bw_mean - bw_ci, bw_hi_kbps=bw_mean + bw_ci,
                ))
            except ValueError as exc:
                invalid.append(InvalidEnvelope(provider, city, year, f"row {line}: {exc}"))
    return envelopes, invalid


def load_replay_csv(file) -> dict[tuple[float, float], list[float]]:
    """Replay grid rows, one PSI sample per row, keyed verbatim by coordinates."""
    entries: dict[tuple[float, float], list[float]] = {}
    with open(file, newline="") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader, REPLAY_HEADER, "replay grid CSV")
        for line, row in enumerate(reader, start=2):
            try:
                key = (float(row["latency_ms"]), float(row["bandwidth_kbps"]))
                int(row["trial"])
                psi = float(row["psi"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"replay grid CSV row {line}: {exc}") from exc
            entries.setdefault(key, []).append(psi)
    if not entries:
        raise ValueError("replay grid CSV has no rows")
    return entries


def write_features_csv(rows: list[PageFeatures], file) -> None:
    with open(file, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FEATURES_HEADER)
        for r in rows:
            writer.writerow([
                r.site_id,
                r.css_count, r.image_count, r.script_count, r.text_count,
                r.css_kb, r.image_kb, r.script_kb, r.text_kb,
                r.other_count,
            ])


def read_features_csv(file) -> list[PageFeatures]:
    rows = []
    with open(file, newline="") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader, FEATURES_HEADER, "features CSV")
        for row in reader:
            rows.append(PageFeatures(
                site_id=row["site_id"],
                css_count=int(row["css_count"]),
                image_count=int(row["image_count"]),
                script_count=int(row["script_count"]),
                text_count=int(row["text_count"]),
                other_count=int(row["other_count"]),
                css_kb=float(row["css_kb"]),
                image_kb=float(row["image_kb"]),
                script_kb=float(row["script_kb"]),
                text_kb=float(row["text_kb"]),
            ))
    return rows


def write_classification_csv(rows, file) -> None:
    with open(file, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CLASSIFICATION_HEADER)
        for r in rows:
            writer.writerow([
                r.site_id, r.provider, r.city,
                "" if r.year is None else r.year,
                "" if r.label is None else r.label.value,
                r.error or "",
            ])


def _counts_cells(counts: CaseCounts) -> list[int]:
    return [counts.a, counts.b, counts.c, counts.d,
            counts.terminates_inside, counts.beyond_path, counts.errors]


def write_aggregate_csv(aggregates: list[tuple[tuple, RatioSummary]],
                        key_fields: tuple[str, ...], file) -> None:
    """Grouped counts plus ratio/share columns; undefined statistics stay blank."""
    with open(file, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(key_fields) + COUNT_COLUMNS + ["ratio", "share"])
        for key, summary in aggregates:
            cells = ["" if k is None else k for k in key]
            cells += _counts_cells(summary.counts)
            cells.append("" if summary.ratio is None else summary.ratio)
            cells.append("" if summary.share is None else summary.share)
            writer.writerow(cells)


def read_ratios_csv(file) -> dict[str, float | None]:
    """site_id -> ratio from any CSV carrying those two columns.

    The per-site aggregate written by the classify command qualifies. Blank
    ratios (no A or D cases in the group) map to None.
    """
    ratios: dict[str, float | None] = {}
    with open(file, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "site_id" not in reader.fieldnames or "ratio" not in reader.fieldnames:
            raise ValueError(f"ratio CSV needs site_id and ratio columns, got {reader.fieldnames}")
        for row in reader:
            raw = (row.get("ratio") or "").strip()
            ratios[row["site_id"]] = float(raw) if raw else None
    return ratios


def write_coefficients_csv(pairs, file) -> None:
    """Coefficient table, one (factor, coefficient) row per pair, given in
    the descending order produced by the fit."""
    with open(file, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["factor", "coefficient"])
        for name, value in pairs:
            writer.writerow([name, value])


def write_evaluation_csv(cells: dict, file) -> None:
    """Single-row evaluation summary with a fixed column order."""
    with open(file, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(cells))
        writer.writerow(["" if v is None else v for v in cells.values()])
