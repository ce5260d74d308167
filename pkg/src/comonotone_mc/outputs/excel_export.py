"""Excel Export Module - Styled Workbook of the Verification Report and Curves"""

from pathlib import Path
from typing import Dict, List, Optional, Sequence
import json
import logging

try:
    from openpyxl import Workbook
    from openpyxl.styles import Alignment, Border, Font, PatternFill, Side
    from openpyxl.utils import get_column_letter
    OPENPYXL_AVAILABLE = True
except ImportError:
    OPENPYXL_AVAILABLE = False

from ..config import DEFAULT_CONFIG_PATH
from .csv_report import CURVE_COLUMNS, REPORT_COLUMNS

logger = logging.getLogger(__name__)


class ExcelExporter:
    """
    Optional workbook twin of report.csv and curves.csv.

    Sheets:
    - Summary (experiment metadata and verdict counts)
    - Report (one row per estimate, verdict cells filled)
    - Curves
    """

    COLORS = {
        "header_bg": "366092",
        "header_text": "FFFFFF",
        "accent": "4472C4",
        "positive": "70AD47",
        "negative": "C00000",
        "neutral": "FFC000",
        "border": "D9D9D9",
    }

    def __init__(self, config_path: Optional[str] = None):
        if not OPENPYXL_AVAILABLE:
            raise ImportError("openpyxl required. Install: pip install openpyxl")

        self.config = self._load_config(config_path)
        self._setup_styles()

    def _load_config(self, path: Optional[str]) -> dict:
        path = Path(path) if path else DEFAULT_CONFIG_PATH
        if path.exists():
            with open(path, "r") as f:
                return json.load(f).get("excel_settings", {})
        return {"header_color": self.COLORS["header_bg"], "accent_color": self.COLORS["accent"]}

    def _setup_styles(self):
        header = self.config.get("header_color", self.COLORS["header_bg"])
        self.header_font = Font(bold=True, size=11, color=self.COLORS["header_text"])
        self.header_fill = PatternFill(start_color=header, end_color=header, fill_type="solid")
        self.title_font = Font(bold=True, size=14, color=header)
        self.thin_border = Border(
            left=Side(style="thin", color=self.COLORS["border"]),
            right=Side(style="thin", color=self.COLORS["border"]),
            top=Side(style="thin", color=self.COLORS["border"]),
            bottom=Side(style="thin", color=self.COLORS["border"]),
        )
        self.verdict_fills = {
            "consistent": self._fill(self.config.get("positive_color", self.COLORS["positive"])),
            "violation": self._fill(self.config.get("negative_color", self.COLORS["negative"])),
            "inconclusive": self._fill(self.COLORS["neutral"]),
        }

    @staticmethod
    def _fill(color: str) -> "PatternFill":
        return PatternFill(start_color=color, end_color=color, fill_type="solid")

    def _apply_header_row(self, ws, row: int, headers: Sequence[str]):
        for i, header in enumerate(headers, 1):
            cell = ws.cell(row=row, column=i, value=header)
            cell.font = self.header_font
            cell.fill = self.header_fill
            cell.alignment = Alignment(horizontal="center", vertical="center")
            cell.border = self.thin_border

    def _write_table(self, ws, start_row: int, columns: Sequence[str], rows: Sequence[dict]) -> None:
        self._apply_header_row(ws, start_row, columns)
        for r, row in enumerate(rows, start_row + 1):
            for c, key in enumerate(columns, 1):
                cell = ws.cell(row=r, column=c, value=row.get(key))
                cell.border = self.thin_border
                if key == "verdict" and row.get(key) in self.verdict_fills:
                    cell.fill = self.verdict_fills[row[key]]

    def generate_report(
        self,
        experiment: Dict[str, object],
        rows: List[dict],
        curves: List[dict],
        output_path: str = "output/report.xlsx",
    ) -> str:
        """
        Write the workbook.

        Args:
            experiment: name, kind, seed, n_paths (shown on the summary sheet)
            rows: report rows
            curves: curve rows
            output_path: output file path

        Returns:
            Path to generated file
        """
        wb = Workbook()
        self._create_summary(wb, experiment, rows)
        self._write_table(wb.create_sheet("Report"), 1, REPORT_COLUMNS, rows)
        self._write_table(wb.create_sheet("Curves"), 1, CURVE_COLUMNS, curves)

        for ws in wb.worksheets:
            for column in ws.columns:
                width = max(len(str(cell.value)) if cell.value is not None else 0 for cell in column)
                ws.column_dimensions[get_column_letter(column[0].column)].width = min(width + 2, 60)

        Path(output_path).parent.mkdir(parents=True, exist_ok=True)
        wb.save(output_path)
        logger.info("wrote workbook %s", output_path)
        return output_path

    def _create_summary(self, wb, experiment: Dict[str, object], rows: List[dict]):
        ws = wb.active
        ws.title = "Summary"
        ws["A1"] = f"Experiment: {experiment.get('name', '')}"
        ws["A1"].font = self.title_font

        self._apply_header_row(ws, 3, ["Field", "Value"])
        items = [(key, experiment.get(key)) for key in ("kind", "seed", "n_paths", "description")]
        counts = {verdict: 0 for verdict in self.verdict_fills}
        for row in rows:
            counts[row["verdict"]] = counts.get(row["verdict"], 0) + 1
        items.extend((verdict, count) for verdict, count in counts.items())
        for i, (key, value) in enumerate(items, 4):
            ws[f"A{i}"] = key
            ws[f"B{i}"] = value
            ws[f"A{i}"].border = self.thin_border
            ws[f"B{i}"].border = self.thin_border
            if key in self.verdict_fills and value:
                ws[f"A{i}"].fill = self.verdict_fills[key]
