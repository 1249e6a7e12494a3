"""Optional Excel workbook summarizing an experiment or an acceptance run.

The workbook holds a table of contents tab followed by one tab per table. It is a
convenience view; the CSV files remain the authoritative output.
"""

from __future__ import annotations
import math
from typing import NamedTuple, Optional

import pandas as pd
import xlsxwriter  # type: ignore


TOC_TITLE = "Table of content"
HEADER_FORMAT = {
    "bold": True,
    "align": "left",
    "valign": "vcenter",
    "text_wrap": True,
    "bottom": 2,
    "top": 2,
}
NUMBER_FORMAT = {"num_format": "0.000000"}
FAILED_FORMAT = {"font_color": "#C00000", "bold": True}
TOC_HEADER_FORMAT = {"font_size": 14, "bold": True, "bg_color": "#d9d9d9", "border": 2}
TOC_LINK_FORMAT = {"font_color": "#007F96", "underline": 1, "valign": "vcenter"}
COLUMN_WIDTH = 18
FORBIDDEN_TAB_CHARACTERS = "[]:*?/\\"


class _Tab(NamedTuple):
    description: str
    table: Optional[pd.DataFrame]

    @property
    def is_toc(self) -> bool:
        return self.table is None


class ReportBuilder:
    """Builds a multi-tab Excel report.

    Tabs are registered with `add_toc` and `add_table` and written in registration
    order when `build` is called; `close` writes the file. Used as a context manager,
    the report is built and closed on exit.
    """

    def __init__(self, filepath: str):
        self.filepath = filepath
        self.workbook: Optional[xlsxwriter.Workbook] = None
        self._tabs: dict[str, _Tab] = {}

    def __enter__(self) -> ReportBuilder:
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        if exc_type is None:
            self.build()
            self.close()

    @property
    def tab_names(self) -> list[str]:
        return list(self._tabs)

    def add_toc(self, tab_name: str = "TOC") -> None:
        """Add a tab linking to all table tabs."""
        self._register(tab_name, _Tab("", None))

    def add_table(
        self, table: pd.DataFrame, tab_name: str, description: str = ""
    ) -> None:
        """Add a tab with one row per record below a header row.

        False entries of a boolean column named "passed" are highlighted.
        """
        self._register(tab_name, _Tab(description, table))

    def build(self) -> None:
        """Open the workbook and write all registered tabs.

        Raises:
            ValueError: If the report has already been built.
        """
        if self.workbook is not None:
            raise ValueError("Report has already been built")
        self.workbook = xlsxwriter.Workbook(self.filepath, {"nan_inf_to_errors": True})
        contents = {name: tab.description for name, tab in self._tabs.items()}
        for name, tab in self._tabs.items():
            worksheet = self.workbook.add_worksheet(name)
            if tab.is_toc:
                contents.pop(name)
                _write_toc(self.workbook, worksheet, contents)
            else:
                _write_table(self.workbook, worksheet, tab.table)

    def close(self) -> None:
        """Write the Excel file and close the workbook."""
        if self.workbook is None:
            raise ValueError("Workbook has not been created, call build method first")
        self.workbook.close()
        self.workbook = None

    def _register(self, tab_name: str, tab: _Tab) -> None:
        if tab_name in self._tabs:
            raise ValueError(f"Tab name '{tab_name}' is already used")
        _check_tab_name(tab_name)
        self._tabs[tab_name] = tab


def write_workbook(filepath: str, tables: dict[str, tuple[pd.DataFrame, str]]) -> None:
    """Write tables to an Excel file with a leading table of contents.

    Args:
        filepath: Path of the Excel file.
        tables: Maps tab names to (table, tab description) pairs.
    """
    with ReportBuilder(filepath) as builder:
        builder.add_toc()
        for tab_name, (table, description) in tables.items():
            builder.add_table(table, tab_name, description)


def _write_table(workbook: xlsxwriter.Workbook, worksheet, table: pd.DataFrame) -> None:
    header_format = workbook.add_format(HEADER_FORMAT)
    number_format = workbook.add_format(NUMBER_FORMAT)
    failed_format = workbook.add_format(FAILED_FORMAT)

    worksheet.set_column(0, max(len(table.columns) - 1, 0), COLUMN_WIDTH)
    worksheet.freeze_panes(1, 0)
    for col, name in enumerate(table.columns):
        worksheet.write_string(0, col, str(name), header_format)
        for row, value in enumerate(table[name].tolist(), start=1):
            if value is None or (isinstance(value, float) and math.isnan(value)):
                worksheet.write_blank(row, col, None)
            elif isinstance(value, bool):
                failed = name == "passed" and not value
                cell_format = failed_format if failed else None
                worksheet.write_boolean(row, col, value, cell_format)
            elif isinstance(value, (int, float)):
                worksheet.write_number(row, col, value, number_format)
            else:
                worksheet.write_string(row, col, str(value))


def _write_toc(
    workbook: xlsxwriter.Workbook, worksheet, contents: dict[str, str]
) -> None:
    worksheet.set_column_pixels(0, 0, 250)
    worksheet.set_column_pixels(1, 1, 650)
    title_format = workbook.add_format(TOC_HEADER_FORMAT)
    link_format = workbook.add_format(TOC_LINK_FORMAT)
    text_format = workbook.add_format({"text_wrap": True})

    worksheet.merge_range(0, 0, 0, 1, TOC_TITLE, title_format)
    for row, (tab_name, description) in enumerate(contents.items(), start=1):
        url = f"internal:'{tab_name}'!A1"
        worksheet.write_url(row, 0, url, link_format, string=tab_name)
        worksheet.write(row, 1, description, text_format)


def _check_tab_name(tab_name: str) -> None:
    """Apply the Excel tab naming rules.

    Tab names have at most 31 characters, none of [ ] : * ? / \\, do not begin or end
    with an apostrophe and are not the reserved name "History".
    """
    if len(tab_name) > 31:
        raise ValueError(f"Tab name '{tab_name}' is longer than 31 characters")
    if any(char in FORBIDDEN_TAB_CHARACTERS for char in tab_name):
        raise ValueError(f"Tab name '{tab_name}' contains one of [ ] : * ? / \\")
    if tab_name.startswith("'") or tab_name.endswith("'"):
        raise ValueError(f"Tab name '{tab_name}' starts or ends with an apostrophe")
    if tab_name.lower() == "history":
        raise ValueError("Tab name 'History' is reserved by Excel")
