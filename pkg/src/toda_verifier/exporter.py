"""Toda Verifier - Result Exporter Module"""
import json
import logging
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from toda_verifier.checks.report import GridSpec, VerificationReport
from toda_verifier.errors import OutputError
from toda_verifier.fuchsian import FuchsianOperator
from toda_verifier.toda_geometry import CanonicalCurve
from toda_verifier.wronskian_engine import SeedData

logger = logging.getLogger(__name__)


def _pairs(values) -> list[list[float]]:
    return [[float(np.real(v)), float(np.imag(v))] for v in values]


class ResultExporter:
    """Writes reports, metric grids and derived seeds/operators to an output directory."""

    def __init__(self, output_dir: Path):
        self.output_dir = Path(output_dir)
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OutputError(f"cannot create output directory {self.output_dir}: {exc.strerror}") from None

    @staticmethod
    def metric_grid_frame(curve: CanonicalCurve, grid: GridSpec) -> pd.DataFrame:
        """One row per grid point: x, y, u_1..u_n, density_1..density_n."""
        z = grid.points()
        u = curve.u(z) if z.size else np.zeros((curve.n, 0))
        frame = pd.DataFrame({"x": z.real, "y": z.imag})
        for k in range(curve.n):
            frame[f"u_{k + 1}"] = u[k]
        for k in range(curve.n):
            frame[f"density_{k + 1}"] = np.exp(u[k])
        return frame

    @staticmethod
    def seed_payload(seed: SeedData, template: dict[str, Any]) -> dict[str, Any]:
        """Scenario JSON with the seed replaced by its normalized coefficients."""
        payload = dict(template)
        payload["g"] = [_pairs(g.coeffs) for g in seed.g]
        payload["truncation_order"] = seed.order
        return payload

    @staticmethod
    def operator_payload(op: FuchsianOperator, beta, roots) -> dict[str, Any]:
        return {
            "n": op.n,
            "beta": list(beta),
            "indicial_roots": list(roots),
            "trace_residual": op.trace_residual,
            "coefficients": [
                {"derivative": k, "pole_order": c.pole_order, "taylor": _pairs(c.taylor.coeffs)}
                for k, c in enumerate(op.Z)
            ],
        }

    def _target(self, filename: str) -> Path:
        return self.output_dir / filename

    def write_report(self, report: VerificationReport, filename: str = "report.json") -> Path:
        return self._write_text(filename, report.model_dump_json(indent=2))

    def write_json(self, payload: dict[str, Any], filename: str) -> Path:
        return self._write_text(filename, json.dumps(payload, indent=2))

    def write_grid(self, frame: pd.DataFrame, filename: str = "metric_grid.csv") -> Path:
        path = self._target(filename)
        try:
            frame.to_csv(path, index=False, float_format="%.17g")
        except OSError as exc:
            raise OutputError(f"cannot write {path}: {exc.strerror}") from None
        logger.info("Wrote %d grid rows to %s", len(frame), path)
        return path

    def _write_text(self, filename: str, text: str) -> Path:
        path = self._target(filename)
        try:
            path.write_text(text + "\n", encoding="utf-8")
        except OSError as exc:
            raise OutputError(f"cannot write {path}: {exc.strerror}") from None
        logger.info("Wrote %s", path)
        return path


def emit_outputs(report: VerificationReport, output_dir: Path, report_name: str = "report.json",
                 grid_frame: pd.DataFrame | None = None, grid_name: str = "metric_grid.csv") -> list[Path]:
    """Write the report and, when one was computed, the metric grid."""
    exporter = ResultExporter(output_dir)
    written = [exporter.write_report(report, report_name)]
    if grid_frame is not None:
        written.append(exporter.write_grid(grid_frame, grid_name))
    return written
