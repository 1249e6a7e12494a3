from unittest.mock import patch

import numpy as np
import pandas as pd
import pytest

import mirrorflow.acceptance as acceptance


def _fake_suite(seed, threads, directory):
    return [
        acceptance.at_most("fake-upper", 1.0, 2.0),
        acceptance.at_least("fake-lower", seed, 10**9),
    ]


class TestCheckRows:
    def test_at_most(self):
        assert acceptance.at_most("c", 1.0, 1.0).passed
        assert not acceptance.at_most("c", 1.5, 1.0).passed

    def test_at_least(self):
        check = acceptance.at_least("c", 0.96, 0.95)
        assert check.passed
        assert check.condition == ">="

    def test_within(self):
        check = acceptance.within("c", 0.53, 0.5, 0.05)
        assert check.passed
        assert check.condition == "within 0.05"
        assert not acceptance.within("c", 0.56, 0.5, 0.05).passed

    def test_nan_never_passes(self):
        assert not acceptance.at_most("c", float("nan"), 1.0).passed


class TestRunAcceptance:
    def test_unknown_suite_raises(self, tmp_path):
        with pytest.raises(ValueError):
            acceptance.run_acceptance("no-such-suite", str(tmp_path))

    def test_report_file(self, tmp_path):
        with patch.dict(acceptance.SUITES, {"fake": _fake_suite}, clear=True):
            report = acceptance.run_acceptance("fake", str(tmp_path), seed=7)
        table = pd.read_csv(tmp_path / acceptance.REPORT_FILE)
        assert list(table.columns) == [
            "suite",
            "check",
            "measured",
            "target",
            "condition",
            "passed",
        ]
        assert table["check"].tolist() == ["fake-upper", "fake-lower"]
        assert table["measured"].tolist() == [1.0, 7.0]
        assert acceptance.failed_checks(report) == ["fake-lower"]

    def test_suites_get_their_own_seed_offset(self, tmp_path):
        suites = {"first": _fake_suite, "second": _fake_suite}
        with patch.dict(acceptance.SUITES, suites, clear=True):
            alone = acceptance.run_acceptance("second", str(tmp_path), seed=7)
            together = acceptance.run_acceptance("all", str(tmp_path), seed=7)
        assert alone["measured"].tolist() == [1.0, 8.0]
        second = together[together["suite"] == "second"]
        assert second["measured"].tolist() == alone["measured"].tolist()

    def test_workbook(self, tmp_path):
        with patch.dict(acceptance.SUITES, {"fake": _fake_suite}, clear=True):
            acceptance.run_acceptance("fake", str(tmp_path), xlsx=True)
        assert (tmp_path / acceptance.WORKBOOK_FILE).is_file()


class TestRectifiedRates:
    @staticmethod
    def _power_law_gaps(exponent):
        def gap_series(schedule, seed, threads):
            times = np.linspace(1.0, 1e4, 1000)
            return times, 0.1 * times ** exponent(schedule.beta)

        return gap_series

    def test_matching_slopes_pass(self, tmp_path):
        series = self._power_law_gaps(lambda beta: -min(beta, 1 - beta))
        with patch("mirrorflow.acceptance._simplex_gap_series", series):
            checks = acceptance.rectified_rates(0, 1, str(tmp_path))
        assert [check.passed for check in checks] == [True, True, True]
        assert [check.target for check in checks] == [-0.25, -0.5, -0.25]

    def test_faster_decay_than_the_rate_fails(self, tmp_path):
        series = self._power_law_gaps(lambda beta: -1.0)
        with patch("mirrorflow.acceptance._simplex_gap_series", series):
            checks = acceptance.rectified_rates(0, 1, str(tmp_path))
        assert not any(check.passed for check in checks)

    def test_slopes_are_checked_within_a_band(self, tmp_path):
        series = self._power_law_gaps(lambda beta: -0.6)
        with patch("mirrorflow.acceptance._simplex_gap_series", series):
            checks = acceptance.rectified_rates(0, 1, str(tmp_path))
        assert [check.passed for check in checks] == [False, True, False]
        assert checks[1].condition == "within 0.12"


@pytest.mark.slow
@pytest.mark.parametrize("suite", list(acceptance.SUITES))
def test_acceptance_suite_passes(suite, tmp_path):
    report = acceptance.run_acceptance(suite, str(tmp_path))
    assert acceptance.failed_checks(report) == []
