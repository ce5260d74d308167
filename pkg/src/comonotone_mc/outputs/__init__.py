"""Outputs package"""
from .csv_report import ReportWriter, REPORT_COLUMNS, CURVE_COLUMNS
