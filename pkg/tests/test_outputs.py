import json

import pytest

from comonotone_mc.outputs.csv_report import CURVE_COLUMNS, REPORT_COLUMNS, ReportWriter, format_rows

ROWS = [
    {"name": "bm:terminal~terminal", "mean": 1.0 / 3.0, "stderr": 0.0125, "n": 1000, "predicted": ">=0",
     "verdict": "consistent"},
    {"name": "control:gaussian_vector(rho=-0.5):coordinate(0)~coordinate(1)", "mean": -0.5, "stderr": 0.01,
     "n": 1000, "predicted": ">=0", "verdict": "violation"},
]
CURVES = [{"curve": "carr[linear]", "parameter": 0.5, "value": 1.0, "stderr": 0.002}]


def test_report_files_have_fixed_headers(tmp_path):
    paths = ReportWriter(str(tmp_path / "out")).write(ROWS, CURVES)
    report = paths["report"].read_text().splitlines()
    curves = paths["curves"].read_text().splitlines()
    assert report[0] == ",".join(REPORT_COLUMNS)
    assert curves[0] == ",".join(CURVE_COLUMNS)
    assert report[1] == "bm:terminal~terminal,0.333333333333,0.0125,1000,>=0,consistent"
    assert len(report) == 3
    assert curves[1] == "carr[linear],0.5,1,0.002"


def test_report_is_a_pure_function_of_rows(tmp_path):
    a = ReportWriter(str(tmp_path / "a")).write(ROWS, CURVES)
    b = ReportWriter(str(tmp_path / "b")).write(ROWS, CURVES)
    assert a["report"].read_bytes() == b["report"].read_bytes()
    assert b"\r\n" not in a["report"].read_bytes()


def test_empty_report_keeps_header(tmp_path):
    path = ReportWriter(str(tmp_path)).write_report([])
    assert path.read_text() == ",".join(REPORT_COLUMNS) + "\n"


def test_format_rows():
    text = format_rows(ROWS[1:])
    assert text.splitlines()[1].startswith("control:gaussian_vector")


def test_excel_workbook(tmp_path):
    openpyxl = pytest.importorskip("openpyxl")
    from comonotone_mc.outputs.excel_export import ExcelExporter
    path = ExcelExporter().generate_report({"name": "demo", "kind": "comonotony", "seed": 1, "n_paths": 1000},
                                           ROWS, CURVES, str(tmp_path / "report.xlsx"))
    wb = openpyxl.load_workbook(path)
    assert wb.sheetnames == ["Summary", "Report", "Curves"]
    assert wb["Report"]["A1"].value == "name"
    assert wb["Report"]["F3"].value == "violation"
    assert wb["Summary"]["A1"].value == "Experiment: demo"


def test_excel_styles_default_to_the_settings_file(tmp_path, monkeypatch):
    pytest.importorskip("openpyxl")
    from comonotone_mc.outputs import excel_export
    settings = tmp_path / "config.json"
    settings.write_text(json.dumps({"excel_settings": {"header_color": "112233"}}))
    monkeypatch.setattr(excel_export, "DEFAULT_CONFIG_PATH", settings)
    assert excel_export.ExcelExporter().header_fill.start_color.rgb.endswith("112233")
    other = tmp_path / "other.json"
    other.write_text(json.dumps({"excel_settings": {"header_color": "445566"}}))
    assert excel_export.ExcelExporter(str(other)).header_fill.start_color.rgb.endswith("445566")
