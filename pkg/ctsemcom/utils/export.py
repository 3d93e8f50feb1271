import json
from pathlib import Path
from typing import Literal

import pandas as pd
from filelock import FileLock, Timeout
from loguru import logger

from ctsemcom.config.settings import settings
from ctsemcom.core.exceptions import IoFailure
from ctsemcom.domains.experiment import BenchReport, SweepResult

ExportFormat = Literal["csv", "json"]

RESULT_COLUMNS = [
    "scheme",
    "axis_name",
    "axis_value",
    "alpha_mean",
    "d2_mean",
    "d2_se",
    "d1_mean",
    "d1_se",
    "noise_floor_mean",
    "zf_residual_max",
    "power_violation_max",
    "runtime_ms_mean",
    "fade_floor_hits",
    "trials",
    "seed",
]


def results_frame(result: SweepResult, include_runtime: bool = True) -> pd.DataFrame:
    rows = [
        {
            **point.model_dump(mode="json"),
            "axis_name": result.axis_name,
            "seed": result.seed,
        }
        for point in result.points
    ]
    frame = pd.DataFrame(rows, columns=RESULT_COLUMNS)
    if not include_runtime:
        # wall-clock times are the only non-deterministic column
        frame["runtime_ms_mean"] = None
    return frame


def _json_records(frame: pd.DataFrame) -> str:
    records = frame.astype(object).where(frame.notna(), None).to_dict(orient="records")
    return json.dumps(records, indent=2) + "\n"


def format_results(
    result: SweepResult, fmt: ExportFormat = "csv", include_runtime: bool = True
) -> str:
    frame = results_frame(result, include_runtime)
    if fmt == "json":
        return _json_records(frame)
    return frame.to_csv(index=False, lineterminator="\n")


def format_bench(report: BenchReport) -> str:
    frame = pd.DataFrame([record.model_dump(mode="json") for record in report.records])
    frame["speedup"] = report.speedup
    return frame.to_csv(index=False, lineterminator="\n")


def write_text(text: str, path: str | Path) -> None:
    path = Path(path)
    try:
        with FileLock(f"{path}.lock", timeout=settings.FILE_LOCK_TIMEOUT_SECONDS):
            path.write_text(text)
    except (OSError, Timeout) as ex:
        raise IoFailure(message=f"cannot write {path}", details=str(ex)) from ex
    logger.info(f"wrote {path}")


def export_results(
    result: SweepResult,
    path: str | Path,
    fmt: ExportFormat = "csv",
    include_runtime: bool = True,
) -> None:
    """Write one row per (scheme, sweep point) with columns `RESULT_COLUMNS`."""
    write_text(format_results(result, fmt, include_runtime), path)
