"""Command-line client for the measurement and analysis service.

Subcommands: measure, classify, features, regress, plot, serve. All file
reading and writing happens here; the actual work runs through the service
handlers, either in-process (default) or against a remote server given via
``--server``. Exit codes: 0 success, 1 operational failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import httpx

from . import __version__, formats
from .classify import CaseCounts, RatioSummary
from .model import DEFAULT_START_BANDWIDTH_KBPS, DEFAULT_START_LATENCY_MS
from .service import handlers
from .service import models as m
from .service.handlers import ServiceError

AGGREGATE_KEYS = {
    "by_site": ("site_id",),
    "by_provider_year": ("provider", "year"),
    "by_city_provider_year": ("city", "provider", "year"),
}


class UsageError(Exception):
    pass


def _dispatch(args, route: str, request):
    """Run a service route in-process, or POST it to --server when given."""
    handler, _request_cls, response_cls = handlers.ROUTES[route]
    if not args.server:
        return handler(request)
    url = args.server.rstrip("/") + "/" + route
    try:
        response = httpx.post(url, json=request.model_dump(mode="json"), timeout=None)
    except httpx.HTTPError as exc:
        raise ServiceError("ConnectionError", f"cannot reach {url}: {exc}") from exc
    if response.status_code != 200:
        try:
            detail = response.json().get("detail")
        except ValueError:
            detail = None
        if isinstance(detail, dict) and "code" in detail:
            partial = detail.get("partial_path")
            raise ServiceError(
                detail["code"], detail.get("message", ""),
                partial_path=m.CpiPathModel.model_validate(partial) if partial else None,
            )
        raise ServiceError("HTTPError", f"{url} returned {response.status_code}: {response.text[:500]}")
    return response_cls.model_validate(response.json())


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _backend_model(args) -> m.BackendModel:
    if args.backend == "synthetic":
        return m.SyntheticBackendModel(
            base=args.base, lat_coeff=args.lat_coeff, bw_coeff=args.bw_coeff,
            noise_stddev=args.noise, seed=args.seed,
        )
    if args.backend == "replay":
        if not args.grid:
            raise UsageError("--grid is required with --backend replay")
        entries = formats.load_replay_csv(args.grid)
        samples = [
            m.ReplaySampleModel(latency_ms=lat, bandwidth_kbps=bw, psi=psi)
            for (lat, bw), psis in sorted(entries.items())
            for psi in psis
        ]
        return m.ReplayBackendModel(site_id=args.site, samples=samples)
    if not args.command:
        raise UsageError("--command is required with --backend external")
    if args.timeout is not None:
        timeout = args.timeout
    else:
        timeout = float(os.environ.get("CPI_TIMEOUT_S", 300.0))
    return m.ExternalBackendModel(command=args.command, timeout_s=timeout)


def cmd_measure(args) -> int:
    request = m.MeasureRequest(
        site_id=args.site,
        start=m.NetPointModel(latency_ms=args.start_lat, bandwidth_kbps=args.start_bw),
        schedule=m.ScheduleModel(
            latency_step_ms=args.lat_step,
            doubling_ceiling_kbps=args.bw_double_ceiling,
            linear_step_kbps=args.bw_linear_step,
            latency_floor_ms=args.lat_floor,
            bandwidth_ceiling_kbps=args.bw_ceiling,
        ),
        backend=_backend_model(args),
        trials=args.trials,
        plateau_epsilon=args.plateau_epsilon,
        aggregate=args.aggregate,
        include_trace=args.trace,
    )
    out = _out_dir(args)
    target = out / f"{args.site}{formats.PATH_FILE_SUFFIX}"
    try:
        response = _dispatch(args, "measure", request)
    except ServiceError as exc:
        if exc.partial_path is not None:
            partial_file = Path(str(target) + ".partial")
            formats.write_path_file(exc.partial_path.to_core(), partial_file)
            print(f"partial path written to {partial_file}", file=sys.stderr)
        print(f"error [{exc.code}]: {exc.message}", file=sys.stderr)
        return 1
    path = response.path.to_core()
    formats.write_path_file(path, target)
    if args.trace and response.trace is not None:
        trace_file = out / f"{args.site}.trace.json"
        trace_file.write_text(json.dumps(response.trace.model_dump(), indent=2) + "\n")
    final = path.final
    print(
        f"{path.site_id}: {len(path.points)} points, "
        f"final ({final.latency_ms:g} ms, {final.bandwidth_kbps:g} Kbps), "
        f"final mean PSI {path.points[-1].mean:g} -> {target}"
    )
    return 0


def _summary_from_model(group: m.GroupSummaryModel) -> tuple[tuple, RatioSummary]:
    counts = CaseCounts(
        a=group.count_a, b=group.count_b, c=group.count_c, d=group.count_d,
        terminates_inside=group.terminates_inside, beyond_path=group.beyond_path,
        errors=group.errors,
    )
    return tuple(group.key.values()), RatioSummary(counts, group.ratio, group.share)


def _load_classify_inputs(paths_dir, envelopes_csv):
    paths = formats.read_paths_dir(paths_dir)
    if not paths:
        raise ServiceError("NoValidPairs", f"no *{formats.PATH_FILE_SUFFIX} files in {paths_dir}")
    envelopes, invalid = formats.load_envelopes_csv(envelopes_csv)
    return (
        [m.CpiPathModel.from_core(p) for p in paths],
        [m.EnvelopeModel.from_core(e) for e in envelopes],
        [m.InvalidEnvelopeModel(provider=i.provider, city=i.city, year=i.year, reason=i.reason)
         for i in invalid],
    )


def cmd_classify(args) -> int:
    path_models, env_models, invalid_models = _load_classify_inputs(args.paths_dir, args.envelopes_csv)
    request = m.ClassifyRequest(paths=path_models, envelopes=env_models, invalid_envelopes=invalid_models)
    response = _dispatch(args, "classify", request)
    out = _out_dir(args)
    rows = [r.to_core() for r in response.rows]
    formats.write_classification_csv(rows, out / "classification.csv")
    for name, key_fields in AGGREGATE_KEYS.items():
        groups = [_summary_from_model(g) for g in getattr(response, name)]
        formats.write_aggregate_csv(groups, key_fields, out / f"{name}.csv")
    n_errors = sum(1 for r in rows if r.error)
    print(
        f"{len(rows)} pairs classified ({n_errors} error rows) -> "
        f"{out / 'classification.csv'} plus {', '.join(f'{n}.csv' for n in AGGREGATE_KEYS)}"
    )
    return 0


def cmd_features(args) -> int:
    har_dir = Path(args.har_dir)
    documents = []
    read_errors = []
    for file in sorted(har_dir.glob("*.har")):
        try:
            documents.append(m.HarDocumentModel(site_id=file.stem, har=json.loads(file.read_text())))
        except (ValueError, OSError) as exc:
            read_errors.append((file.stem, f"unreadable HAR: {exc}"))
    if not documents:
        print(f"error: no readable *.har files in {har_dir}", file=sys.stderr)
        return 1
    response = _dispatch(args, "features", m.FeaturesRequest(documents=documents))
    for site_id, message in read_errors + [(e.site_id, e.message) for e in response.errors]:
        print(f"skipped {site_id}: {message}", file=sys.stderr)
    if not response.rows:
        print("error: no HAR file produced features", file=sys.stderr)
        return 1
    out = _out_dir(args)
    formats.write_features_csv([r.to_core() for r in response.rows], out / "features.csv")
    print(f"{len(response.rows)} pages -> {out / 'features.csv'}")
    return 0


def cmd_regress(args) -> int:
    feature_rows = formats.read_features_csv(args.features_csv)
    ratios = formats.read_ratios_csv(args.ratios_csv)
    request = m.RegressRequest(
        features=[m.PageFeaturesModel.from_core(f) for f in feature_rows],
        ratios=[m.SiteRatioModel(site_id=k, ratio=v) for k, v in sorted(ratios.items())],
        train_fraction=args.train_fraction,
        trials=args.trials if args.trials is not None else 100,
        seed=args.seed,
    )
    response = _dispatch(args, "regress", request)
    out = _out_dir(args)
    formats.write_coefficients_csv(
        [(c.factor, c.coefficient) for c in response.coefficients], out / "coefficients.csv"
    )
    evaluation = response.evaluation
    formats.write_evaluation_csv(
        {
            "mean_factor_error": evaluation.mean_factor_error,
            "median_factor_error": evaluation.median_factor_error,
            "trials": len(evaluation.per_trial),
            "trials_skipped": evaluation.trials_skipped,
            "matched_sites": response.join.matched,
            "features_only": len(response.join.features_only),
            "ratios_only": len(response.join.ratios_only),
            "undefined_ratio_excluded": response.join.undefined_ratio_excluded,
            "intercept": response.intercept,
        },
        out / "evaluation.csv",
    )
    width = max(len(c.factor) for c in response.coefficients)
    print(f"{'factor'.ljust(width)}  coefficient")
    for c in response.coefficients:
        print(f"{c.factor.ljust(width)}  {c.coefficient:.6f}")
    print(f"intercept (fit separately): {response.intercept:.6f}")
    print(
        f"factor error: mean {evaluation.mean_factor_error:.4f}, "
        f"median {evaluation.median_factor_error:.4f} over {len(evaluation.per_trial)} trials"
    )
    if response.join.features_only or response.join.ratios_only:
        print(
            f"join mismatches: features only {list(response.join.features_only)}, "
            f"ratios only {list(response.join.ratios_only)}",
            file=sys.stderr,
        )
    return 0


def cmd_plot(args) -> int:
    paths = formats.read_paths_dir(args.paths_dir)
    if not paths:
        print(f"error: no *{formats.PATH_FILE_SUFFIX} files in {args.paths_dir}", file=sys.stderr)
        return 1
    envelopes: list = []
    if args.envelopes_csv:
        envelopes, invalid = formats.load_envelopes_csv(args.envelopes_csv)
        for bad in invalid:
            print(f"skipped envelope: {bad.reason}", file=sys.stderr)
    request = m.PlotRequest(
        paths=[m.CpiPathModel.from_core(p) for p in paths],
        envelopes=[m.EnvelopeModel.from_core(e) for e in envelopes],
    )
    response = _dispatch(args, "plot", request)
    out = _out_dir(args)
    target = out / "cpi.svg"
    target.write_text(response.svg)
    print(f"{len(paths)} paths, {len(envelopes)} envelopes -> {target}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory (default: current directory)")
    common.add_argument("--server", default=None,
                        help="base URL of a running service; default runs in-process")
    common.add_argument("--seed", type=int, default=0, help="seed for noisy backends and splits")
    common.add_argument("--trials", type=int, default=None,
                        help="measurement trials per point (default 7) / regression trials (default 100)")

    parser = argparse.ArgumentParser(
        prog="cpilab",
        description="Measure latency/bandwidth improvement paths and classify sites against network envelopes.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("measure", parents=[common], help="run a greedy improvement-path measurement")
    p.add_argument("--site", default="site", help="site identifier used in file names and reports")
    p.add_argument("--backend", required=True, choices=["synthetic", "replay", "external"])
    p.add_argument("--base", type=float, default=0.0, help="synthetic: constant PSI offset")
    p.add_argument("--lat-coeff", type=float, default=0.0, help="synthetic: PSI per ms of latency")
    p.add_argument("--bw-coeff", type=float, default=0.0, help="synthetic: PSI * Kbps (inverse-bandwidth term)")
    p.add_argument("--noise", type=float, default=0.0, help="synthetic: Gaussian noise stddev")
    p.add_argument("--grid", default=None, help="replay: CSV of recorded samples")
    p.add_argument("--command", default=None, help="external: shell command printing PSI on its last line")
    p.add_argument("--timeout", type=float, default=None,
                   help="external: per-invocation timeout in seconds "
                        "(default: CPI_TIMEOUT_S or 300)")
    p.add_argument("--start-lat", type=float, default=DEFAULT_START_LATENCY_MS)
    p.add_argument("--start-bw", type=float, default=DEFAULT_START_BANDWIDTH_KBPS)
    p.add_argument("--lat-step", type=float, default=10.0)
    p.add_argument("--bw-double-ceiling", type=float, default=8192.0)
    p.add_argument("--bw-linear-step", type=float, default=8192.0)
    p.add_argument("--lat-floor", type=float, default=20.0)
    p.add_argument("--bw-ceiling", type=float, default=307200.0)
    p.add_argument("--plateau-epsilon", type=float, default=None,
                   help="stop once the best candidate improves PSI by less than this")
    p.add_argument("--aggregate", choices=["mean", "median"], default="mean",
                   help="summary statistic compared between candidates")
    p.add_argument("--trace", action="store_true", help="also write per-step candidate records")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("classify", parents=[common], help="classify path files against envelopes")
    p.add_argument("paths_dir", help=f"directory of *{formats.PATH_FILE_SUFFIX} files")
    p.add_argument("envelopes_csv", help="CSV of provider,city,year,lat_mean_ms,lat_ci_ms,bw_mean_kbps,bw_ci_kbps")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("features", parents=[common], help="extract asset statistics from HAR files")
    p.add_argument("har_dir", help="directory of *.har files")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("regress", parents=[common],
                       help="predict bandwidth-limitation ratios from page features")
    p.add_argument("features_csv")
    p.add_argument("ratios_csv", help="CSV with site_id and ratio columns (by_site.csv works)")
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.set_defaults(func=cmd_regress)

    p = sub.add_parser("plot", parents=[common], help="render paths and envelopes as SVG")
    p.add_argument("paths_dir")
    p.add_argument("envelopes_csv", nargs="?", default=None)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("serve", parents=[common], help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except ServiceError as exc:
        print(f"error [{exc.code}]: {exc.message}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
