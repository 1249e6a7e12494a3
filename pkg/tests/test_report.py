import math

import openpyxl
import pandas as pd
import pytest

import mirrorflow.report as report


@pytest.fixture
def table():
    return pd.DataFrame(
        {
            "check": ["ou-variance", "ou-mean"],
            "measured": [0.51, math.nan],
            "passed": [True, False],
        }
    )


class TestReportBuilder:
    def test_duplicate_tab_names_raise(self, table, tmp_path):
        builder = report.ReportBuilder(str(tmp_path / "report.xlsx"))
        builder.add_table(table, "checks")
        with pytest.raises(ValueError):
            builder.add_table(table, "checks")

    @pytest.mark.parametrize(
        "tab_name", ["a" * 32, "with/slash", "'quoted", "History", "what?"]
    )
    def test_invalid_tab_names_raise(self, table, tmp_path, tab_name):
        builder = report.ReportBuilder(str(tmp_path / "report.xlsx"))
        with pytest.raises(ValueError):
            builder.add_table(table, tab_name)

    def test_close_before_build_raises(self, tmp_path):
        builder = report.ReportBuilder(str(tmp_path / "report.xlsx"))
        with pytest.raises(ValueError):
            builder.close()

    def test_build_twice_raises(self, table, tmp_path):
        builder = report.ReportBuilder(str(tmp_path / "report.xlsx"))
        builder.add_table(table, "checks")
        builder.build()
        with pytest.raises(ValueError):
            builder.build()
        builder.close()

    def test_tab_names_keep_their_order(self, table, tmp_path):
        builder = report.ReportBuilder(str(tmp_path / "report.xlsx"))
        builder.add_toc()
        builder.add_table(table, "second")
        builder.add_table(table, "first")
        assert builder.tab_names == ["TOC", "second", "first"]


class TestWriteWorkbook:
    @pytest.fixture
    def workbook(self, table, tmp_path):
        filepath = tmp_path / "report.xlsx"
        report.write_workbook(
            str(filepath),
            {
                "checks": (table, "Acceptance checks"),
                "more": (table.head(1), "A shorter table"),
            },
        )
        return openpyxl.load_workbook(filepath)

    def test_tabs_follow_the_table_of_contents(self, workbook):
        assert workbook.sheetnames == ["TOC", "checks", "more"]

    def test_table_of_contents_lists_the_tabs(self, workbook):
        toc = workbook["TOC"]
        assert toc["A1"].value == "Table of content"
        assert [toc["A2"].value, toc["A3"].value] == ["checks", "more"]
        assert toc["B2"].value == "Acceptance checks"
        assert toc["A2"].hyperlink is not None

    def test_table_values(self, workbook):
        sheet = workbook["checks"]
        rows = list(sheet.iter_rows(values_only=True))
        assert rows[0] == ("check", "measured", "passed")
        assert rows[1] == ("ou-variance", 0.51, True)
        assert rows[2] == ("ou-mean", None, False)

    def test_failed_checks_are_highlighted(self, workbook):
        sheet = workbook["checks"]
        assert sheet["C3"].font.bold
        assert not sheet["C2"].font.bold
