"""CSV Report Module - report.csv and curves.csv with a fixed header and float format"""

from pathlib import Path
from typing import Dict, List, Sequence
import logging

import pandas as pd

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ["name", "mean", "stderr", "n", "predicted", "verdict"]
CURVE_COLUMNS = ["curve", "parameter", "value", "stderr"]
FLOAT_FORMAT = "%.12g"


def report_frame(rows: Sequence[dict]) -> pd.DataFrame:
    frame = pd.DataFrame(list(rows), columns=REPORT_COLUMNS)
    return frame.astype({"n": "int64"}) if len(frame) else frame


def curve_frame(rows: Sequence[dict]) -> pd.DataFrame:
    return pd.DataFrame(list(rows), columns=CURVE_COLUMNS)


class ReportWriter:
    """
    Write the two machine-readable outputs of an experiment.

    Both files are a pure function of the rows: same rows, same bytes.
    """

    def __init__(self, output_dir: str):
        self.output_dir = Path(output_dir)

    def _write(self, frame: pd.DataFrame, filename: str) -> Path:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        path = self.output_dir / filename
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return path

    def write_report(self, rows: Sequence[dict], filename: str = "report.csv") -> Path:
        return self._write(report_frame(rows), filename)

    def write_curves(self, rows: Sequence[dict], filename: str = "curves.csv") -> Path:
        return self._write(curve_frame(rows), filename)

    def write(self, rows: Sequence[dict], curves: Sequence[dict]) -> Dict[str, Path]:
        paths = {"report": self.write_report(rows), "curves": self.write_curves(curves)}
        logger.info("wrote %d report rows and %d curve points to %s", len(rows), len(curves), self.output_dir)
        return paths


def format_rows(rows: List[dict]) -> str:
    """Rows rendered the way they appear in report.csv, header first."""
    return report_frame(rows).to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
