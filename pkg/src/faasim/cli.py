"""Command-line entry point: run presets or config files, write records and reports."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict
from pathlib import Path

from .config import ConfigError, config_to_doc, load_config
from .engine import ExperimentResult, run_experiment
from .metrics import EmptyMetricsError, compare
from .presets import PRESET_NAMES, build_preset
from .workflow import InvalidGraphError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

RECORDS_HEADER = ("request_id", "arrival_ms", "latency_ms", "cold_start", "cache_outcome")


def write_records_csv(result: ExperimentResult, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORDS_HEADER)
        for r in result.records:
            writer.writerow(
                [
                    r.request_id,
                    r.arrival_ms,
                    r.latency_ms,
                    "true" if r.cold_start else "false",
                    r.cache_outcome.value,
                ]
            )


def report_doc(result: ExperimentResult) -> dict:
    doc = asdict(result.report)
    doc["seed"] = result.config.seed
    doc["config"] = config_to_doc(result.config)
    return doc


def write_report_json(result: ExperimentResult, path: Path) -> None:
    path.write_text(json.dumps(report_doc(result), indent=2) + "\n", encoding="utf-8")


def comparison_doc(results: list[ExperimentResult]) -> dict:
    by_name = {r.config.name.rsplit("-", 1)[-1]: r for r in results}
    none, external, internal = by_name["none"], by_name["external"], by_name["internal"]
    return {
        "mean_ms": {
            "none": none.report.mean_ms,
            "external": external.report.mean_ms,
            "internal": internal.report.mean_ms,
        },
        "hit_ratio": {
            "none": none.report.hit_ratio,
            "external": external.report.hit_ratio,
            "internal": internal.report.hit_ratio,
        },
        "internal_saving_ms": none.report.mean_ms - internal.report.mean_ms,
        "external_saving_ms": none.report.mean_ms - external.report.mean_ms,
        "none_vs_internal": asdict(compare(none.report, internal.report)),
        "none_vs_external": asdict(compare(none.report, external.report)),
        "external_vs_internal": asdict(compare(external.report, internal.report)),
    }


def _summary_line(result: ExperimentResult) -> str:
    rep = result.report
    parts = [
        f"{result.config.name}:",
        f"requests={rep.count}",
        f"mean={rep.mean_ms:.2f}ms",
        f"p50={rep.p50_ms:.2f}ms",
        f"p95={rep.p95_ms:.2f}ms",
        f"cold_starts={rep.cold_start_count}",
    ]
    if rep.hit_ratio is not None:
        parts.append(f"hit_ratio={rep.hit_ratio:.3f}")
    return " ".join(parts)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="faasim",
        description=(
            "Deterministic discrete-event simulator of serverless workflows: "
            "function chains, container cold starts, and caching strategies."
        ),
    )
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--preset", metavar="NAME", help="built-in scenario to run")
    source.add_argument("--config", metavar="PATH", type=Path, help="JSON experiment config")
    parser.add_argument("--list-presets", action="store_true", help="list preset names and exit")
    parser.add_argument("--seed", type=int, default=None, metavar="U64",
                        help="master seed (default: config value, presets 1)")
    parser.add_argument("--requests", type=int, default=None, metavar="N",
                        help="override the number of requests")
    parser.add_argument("--out", type=Path, default=Path("out"), metavar="DIR",
                        help="output directory (default: ./out)")
    parser.add_argument("--exclude-cold", action=argparse.BooleanOptionalAction, default=None,
                        help="drop cold-start requests from the statistics")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.list_presets:
        for name in PRESET_NAMES:
            print(name)
        return EXIT_OK
    if not args.preset and not args.config:
        print("error: one of --preset or --config is required", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.preset:
            configs = build_preset(
                args.preset,
                seed=args.seed if args.seed is not None else 1,
                n_requests=args.requests,
                exclude_cold=args.exclude_cold,
            )
        else:
            cfg = load_config(args.config)
            configs = (
                cfg.with_overrides(
                    seed=args.seed, n_requests=args.requests, exclude_cold=args.exclude_cold
                ),
            )
    except ConfigError as exc:
        for line in exc.violations:
            print(f"config error: {line}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        results = [run_experiment(cfg) for cfg in configs]
    except (ConfigError, EmptyMetricsError, InvalidGraphError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        args.out.mkdir(parents=True, exist_ok=True)
        multi = len(results) > 1
        for result in results:
            stem = f"{result.config.name}." if multi else ""
            records_path = args.out / f"{stem}records.csv"
            report_path = args.out / f"{stem}report.json"
            write_records_csv(result, records_path)
            write_report_json(result, report_path)
            print(_summary_line(result))
            print(f"wrote {records_path} and {report_path}")
        if args.preset == "cache-compare":
            doc = comparison_doc(results)
            comparison_path = args.out / "comparison.json"
            comparison_path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
            print(
                f"internal cache saves {doc['internal_saving_ms']:.2f}ms per request "
                f"over no cache; wrote {comparison_path}"
            )
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO

    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
