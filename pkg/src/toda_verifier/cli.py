"""Toda Verifier - Command Line Application"""
import argparse
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import pandas as pd
from tabulate import tabulate

from toda_verifier.checks.metric_checks import branch_consistency, cone_angles, energies
from toda_verifier.checks.report import FIT_MARGIN, CheckResult, VerificationReport
from toda_verifier.checks.residuals import pde_residual, plucker_residual
from toda_verifier.config import (
    DEFAULT_CONFIG,
    DEFAULT_THREADS,
    DEFAULT_TOLERANCES,
    LOG_LEVEL,
    OUTPUT_DIR,
    Tolerances,
    parse_tolerance_overrides,
)
from toda_verifier.errors import ConfigError, DegenerateSeed, InsufficientOrder, OutputError, TodaError
from toda_verifier.exporter import ResultExporter, emit_outputs
from toda_verifier.fuchsian import indicial_roots, operator_residuals, reconstruct
from toda_verifier.scenario import ScenarioConfig, ScenarioLoader
from toda_verifier.toda_geometry import (
    CanonicalCurve,
    chart_unit_error,
    normalized_chart,
    pullback_density,
    xi_metric_density,
)
from toda_verifier.wronskian_engine import normalization_deviation, normalize, reduced_wronskian

logger = logging.getLogger(__name__)

# Exit codes
EXIT_PASS = 0
EXIT_FAILURE = 1
EXIT_FATAL = 2


class ScenarioRunner:
    """Normalizes the scenario's seed once and runs the requested checks against it."""

    def __init__(self, config: ScenarioConfig, tolerances: Optional[Tolerances] = None, threads: int = 1):
        self.config = config
        self.tolerances = tolerances or config.effective_tolerances()
        self.threads = max(1, threads)

        raw_seed = ScenarioLoader.build_seed(config, self.tolerances)
        self.raw_g0 = complex(reduced_wronskian(raw_seed.beta, raw_seed.g)[0])
        self.seed = normalize(raw_seed, self.tolerances)
        self.curve = CanonicalCurve.from_seed(self.seed, self.tolerances)
        self.grid_frame: Optional[pd.DataFrame] = None
        # the energy disc stays inside the validity radius like the fitted grids
        self.energy_radius = min(config.energy_radius, FIT_MARGIN * self.curve.validity_radius)

        self.tasks: dict[str, Callable[[], CheckResult]] = {
            "normalize": self._check_normalization,
            "pde": lambda: self._on_fitted_grid(pde_residual),
            "plucker": lambda: self._on_fitted_grid(plucker_residual),
            "fuchsian": self._check_fuchsian,
            "cone-angle": lambda: cone_angles(self.curve, config.cone_radii, tolerances=self.tolerances),
            "energy": lambda: energies(self.curve, self.energy_radius, config.energy_cutoffs, self.tolerances),
            "metric-grid": self._metric_grid,
            "chart": self._check_chart,
            "branch": lambda: self._on_fitted_grid(branch_consistency),
        }

    def seed_summary(self) -> dict:
        root = self.seed.applied_root or 1.0
        return {
            "beta": list(self.seed.beta),
            "alpha": list(self.seed.exponents.alpha),
            "g_n_at_zero": [self.raw_g0.real, self.raw_g0.imag],
            "applied_root": [complex(root).real, complex(root).imag],
            "normalized_order": self.seed.order,
            "validity_radius": self.curve.validity_radius,
        }

    def run(self) -> VerificationReport:
        """Run every task; failures and errors become report entries."""
        names = list(self.config.tasks)
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            futures = [pool.submit(self._timed, name) for name in names]
            outcomes = [future.result() for future in futures]

        return VerificationReport(
            checks=[result for result, _ in outcomes],
            seed_fingerprint=ScenarioLoader.seed_fingerprint(self.config),
            seed=self.seed_summary(),
            config=self.config.model_dump(mode="json"),
            timings={name: seconds for name, (_, seconds) in zip(names, outcomes)},
        )

    def _timed(self, name: str):
        start = time.perf_counter()
        try:
            result = self.tasks[name]()
        except Exception as exc:
            # anything but a TodaError is a bug in the check; keep its traceback in the log
            logger.warning("Task %s raised %s: %s", name, type(exc).__name__, exc,
                           exc_info=not isinstance(exc, TodaError))
            result = CheckResult.from_error(name, exc)
        return result, time.perf_counter() - start

    # Tasks

    def _on_fitted_grid(self, check: Callable[..., CheckResult]) -> CheckResult:
        """Run a grid check on the scenario grid, pulled inside the validity radius if needed."""
        grid = self.config.grid
        fitted = grid.fitted(self.curve.validity_radius)
        result = check(self.curve, fitted, self.tolerances)
        if fitted is grid:
            return result
        logger.warning("Grid r_max %.4g lies past the validity radius %.4g; %s ran on [%.4g, %.4g] with h = %.3g",
                       grid.r_max, self.curve.validity_radius, result.name, fitted.r_min, fitted.r_max, fitted.fd_step)
        capped = {"grid_capped": True, "requested_grid": grid.model_dump()}
        return result.model_copy(update={"parameters": {**result.parameters, **capped}})

    def _check_normalization(self) -> CheckResult:
        deviation = normalization_deviation(self.seed)
        tolerance = self.tolerances.normalization
        return CheckResult(
            name="normalize",
            status="pass" if deviation <= tolerance else "fail",
            max_residual=deviation,
            tolerance=tolerance,
            parameters=self.seed_summary(),
        )

    def _check_fuchsian(self) -> CheckResult:
        op = reconstruct(self.seed, self.tolerances)
        roots = indicial_roots(op, self.tolerances)
        root_error = float(np.max(np.abs(np.array(roots) - np.array(self.seed.beta))))
        residuals = operator_residuals(op, self.seed)

        ok = (
            root_error <= self.tolerances.exponent
            and max(residuals) <= self.tolerances.operator
            and op.trace_residual <= self.tolerances.trace
        )
        return CheckResult(
            name="fuchsian",
            status="pass" if ok else "fail",
            max_residual=max(root_error, max(residuals)),
            tolerance=self.tolerances.operator,
            parameters={
                "indicial_roots": list(roots),
                "root_error": root_error,
                "operator_residuals": residuals,
                "trace_residual": op.trace_residual,
                "pole_orders": [c.pole_order for c in op.Z],
                "exponent_tolerance": self.tolerances.exponent,
            },
        )

    def _metric_grid(self) -> CheckResult:
        grid = self.config.grid
        if grid.is_empty:
            return CheckResult.skipped("metric-grid", "empty grid", **grid.model_dump())
        self.grid_frame = ResultExporter.metric_grid_frame(self.curve, grid)
        return CheckResult(
            name="metric-grid",
            status="pass",
            parameters={**grid.model_dump(), "rows": len(self.grid_frame)},
        )

    def _check_chart(self) -> CheckResult:
        chart = normalized_chart(self.seed)
        unit_error = chart_unit_error(self.seed, chart)

        radius = 0.5 * min(chart.validity_radius, self.config.grid.r_max)
        xi = radius * np.exp(2j * np.pi * (np.arange(16) + 0.5) / 16)
        simplified = xi_metric_density(chart, self.seed.exponents, xi)
        pulled_back = pullback_density(self.curve, chart, xi)
        chart_error = float(np.max(np.abs(simplified - pulled_back) / pulled_back))

        ok = chart_error <= self.tolerances.chart and unit_error <= self.tolerances.normalization
        return CheckResult(
            name="chart",
            status="pass" if ok else "fail",
            max_residual=chart_error,
            tolerance=self.tolerances.chart,
            parameters={
                "xi_radius": radius,
                "chart_validity_radius": chart.validity_radius,
                "leading_unit_error": unit_error,
                "tilde_g_at_zero": [[complex(t[0]).real, complex(t[0]).imag] for t in chart.tilde_g],
            },
        )


def run_scenario(config: ScenarioConfig, tolerances: Optional[Tolerances] = None, threads: int = 1) -> VerificationReport:
    return ScenarioRunner(config, tolerances, threads).run()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toda-verify",
        description="Build and verify canonical-curve solutions of the SU(n+1) Toda system.",
    )
    parser.add_argument("--log-level", default=LOG_LEVEL, help="Logging level (env TODA_LOG_LEVEL)")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=DEFAULT_CONFIG, required=DEFAULT_CONFIG is None,
                        help="Scenario JSON file (env TODA_CONFIG)")
    common.add_argument("--out", default=str(OUTPUT_DIR), help="Output directory (env TODA_OUT)")
    common.add_argument("--threads", type=int, default=DEFAULT_THREADS, help="Worker threads (env TODA_THREADS)")
    common.add_argument("--tolerance", action="append", default=[], metavar="NAME=VALUE",
                        help="Override a named tolerance; repeatable (env TODA_TOLERANCE, comma separated)")

    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("check", parents=[common], help="Run the scenario's tasks and write report.json")
    commands.add_parser("normalize", parents=[common], help="Write the normalized seed as a scenario file")
    commands.add_parser("fuchsian", parents=[common], help="Write the reconstructed Fuchsian operator")
    commands.add_parser("grid", parents=[common], help="Write the metric grid only")
    return parser


def _prepare(args) -> tuple[ScenarioConfig, Tolerances, Path]:
    config = ScenarioLoader.load_config(args.config)
    overrides = {**parse_tolerance_overrides(DEFAULT_TOLERANCES), **parse_tolerance_overrides(args.tolerance)}
    tolerances = config.effective_tolerances(overrides)
    config = config.model_copy(update={"tolerances": {**config.tolerances, **overrides}})
    return config, tolerances, Path(args.out)


def _print_summary(report: VerificationReport) -> None:
    headers = ["check", "status", "max residual", "tolerance", "message"]
    print(tabulate(report.summary_rows(), headers=headers, floatfmt=".3e", tablefmt="simple"))


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")

    try:
        config, tolerances, out_dir = _prepare(args)
        runner = ScenarioRunner(config, tolerances, args.threads)
    except (ConfigError, DegenerateSeed, InsufficientOrder) as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except TodaError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FATAL

    try:
        if args.command == "check":
            report = runner.run()
            emit_outputs(report, out_dir, config.output.report, runner.grid_frame, config.output.metric_grid)
            _print_summary(report)
            return report.exit_code

        exporter = ResultExporter(out_dir)
        if args.command == "normalize":
            template = config.model_dump(mode="json")
            exporter.write_json(ResultExporter.seed_payload(runner.seed, template), config.output.normalized_seed)
            return EXIT_PASS

        if args.command == "fuchsian":
            try:
                op = reconstruct(runner.seed, tolerances)
                roots = indicial_roots(op, tolerances)
            except TodaError as exc:
                print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
                return EXIT_FAILURE
            exporter.write_json(ResultExporter.operator_payload(op, runner.seed.beta, roots), config.output.operator)
            return EXIT_PASS

        # grid
        result = runner.tasks["metric-grid"]()
        if runner.grid_frame is not None:
            exporter.write_grid(runner.grid_frame, config.output.metric_grid)
        return EXIT_PASS if result.passed else EXIT_FAILURE
    except OutputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
