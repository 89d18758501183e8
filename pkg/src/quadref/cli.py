"""Scenario runner: CSV time series, JSON metrics and SVG report figures.

Exit codes: 0 on success, 2 on a solver or simulation fault (any rows
produced so far are still flushed), 3 on a configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .scenario import Scenario, ScenarioError, list_bundled, load_scenario
from .sim import CSV_COLUMNS, SimulationFault, TimeSeries, compute_metrics, run_scenario

_THREAD_LIMITER = None


def _limit_blas_threads() -> None:
    """Many small factorizations; multithreaded BLAS only adds latency jitter."""
    global _THREAD_LIMITER
    if _THREAD_LIMITER is None:
        try:
            from threadpoolctl import threadpool_limits

            _THREAD_LIMITER = threadpool_limits(limits=1)
        except ImportError:
            _THREAD_LIMITER = False

EXIT_OK = 0
EXIT_FAULT = 2
EXIT_CONFIG = 3


def write_csv(series: TimeSeries, path: Path) -> None:
    with path.open("w", newline="") as stream:
        writer = csv.writer(stream)
        writer.writerow(CSV_COLUMNS)
        for k in range(series.n_rows):
            row = series.row(k)
            writer.writerow([f"{row[name]:.17g}" for name in CSV_COLUMNS])


def emit_outputs(
    series: TimeSeries,
    out_dir: Path,
    scenario: Scenario | None = None,
    write_plots: bool = True,
) -> list[Path]:
    """Write timeseries.csv, metrics.json and the report figures."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    csv_path = out_dir / "timeseries.csv"
    write_csv(series, csv_path)
    written.append(csv_path)

    if scenario is not None:
        metrics = compute_metrics(series, scenario.gov_config, scenario.sim_config)
        metrics_path = out_dir / "metrics.json"
        metrics_path.write_text(json.dumps(metrics, indent=2) + "\n")
        written.append(metrics_path)

    if write_plots and series.n_rows:
        from .plots import render_plots

        written.extend(render_plots(series, out_dir))
    return written


def _print_summary(metrics: dict) -> None:
    print("metrics:")
    for key, value in metrics.items():
        print(f"  {key}: {value}")


def run(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="quadref",
        description="Run a locomotion reference-generation scenario and write its report.",
    )
    parser.add_argument(
        "--scenario", required=True,
        help=f"path to a scenario JSON file, or a bundled name: {', '.join(list_bundled())}",
    )
    parser.add_argument("--out", default="./out", help="output directory (default ./out)")
    parser.add_argument("--seed", type=int, default=None,
                        help="reserved for randomized test tooling; runs are deterministic")
    parser.add_argument("--no-plots", action="store_true", help="skip the SVG figures")
    args = parser.parse_args(argv)
    _limit_blas_threads()

    try:
        scenario = load_scenario(args.scenario)
    except (ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = Path(args.out)
    try:
        series = run_scenario(
            scenario.sim_config,
            scenario.gov_config,
            scenario.lip_params,
            scenario.gait_spec,
            scenario.layout,
            controller=scenario.controller,
            pd_gains=scenario.pd_gains,
            Qu=scenario.Qu,
            Qk=scenario.Qk,
            n_nodes_forces=scenario.n_nodes_forces,
        )
    except SimulationFault as fault:
        print(f"simulation fault: {fault}", file=sys.stderr)
        if fault.partial is not None:
            try:
                emit_outputs(fault.partial, out_dir, scenario=None, write_plots=False)
                print(f"partial time series flushed to {out_dir}", file=sys.stderr)
            except OSError as exc:
                print(f"error writing partial output: {exc}", file=sys.stderr)
        return EXIT_FAULT

    try:
        emit_outputs(series, out_dir, scenario=scenario, write_plots=not args.no_plots)
    except OSError as exc:
        print(f"error writing outputs: {exc}", file=sys.stderr)
        return EXIT_FAULT

    _print_summary(compute_metrics(series, scenario.gov_config, scenario.sim_config))
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
