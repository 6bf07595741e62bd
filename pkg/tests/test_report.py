"""
Tests for Report Module
"""

import json
import math

import pytest

from runner.report import (
    COLUMNS,
    TIMING_COLUMN,
    ReportRow,
    aggregate_metrics,
    format_real,
    write_rows_csv,
    write_summary_json,
)


def make_row(metric="op_norm_error", value=0.01, bound=0.05, **kwargs):
    fields = dict(experiment_id="nu=0.05/M=100/t=0", kind="ensemble_convergence", seed=7,
                  degree=4, nu=0.05, c_d=0.9, m=100)
    fields.update(kwargs)
    return ReportRow(metric=metric, value=value, bound=bound, **fields)


class TestReportRow:
    """Tests for ReportRow."""

    def test_pass_flag(self):
        """Test pass is value ≤ bound."""
        assert make_row(value=0.05, bound=0.05).passed
        assert not make_row(value=0.06, bound=0.05).passed

    def test_nan_fails(self):
        """Test a NaN value never passes."""
        assert not make_row(value=math.nan).passed

    def test_info_metric_passes(self):
        """Test metrics checked against inf always pass."""
        assert make_row(value=1e9, bound=math.inf).passed

    def test_c_d_range(self):
        """Test c_d outside (0, 1] is rejected."""
        with pytest.raises(ValueError, match="c_d must lie in"):
            make_row(c_d=0.0)
        with pytest.raises(ValueError, match="c_d must lie in"):
            make_row(c_d=1.5)

    def test_failed_row(self):
        """Test a failed trial row."""
        row = ReportRow.failed("t0", "hsim", 1, 0.1, 16, "PostSelectionError: budget exhausted")
        assert row.metric == "trial_failed"
        assert math.isnan(row.value)
        assert not row.passed
        assert row.c_d == 1.0
        assert row.note.startswith("PostSelectionError")


class TestFormatReal:
    """Tests for format_real."""

    def test_lossless(self):
        """Test 17 significant digits reproduce the float."""
        assert float(format_real(0.1)) == 0.1
        assert format_real(0.1) == "0.10000000000000001"

    def test_non_finite(self):
        """Test NaN and infinities."""
        assert format_real(math.nan) == "nan"
        assert format_real(math.inf) == "inf"
        assert format_real(-math.inf) == "-inf"


class TestWriters:
    """Tests for the CSV and JSON writers."""

    def test_csv_layout(self, tmp_path):
        """Test the header and one row."""
        path = tmp_path / "rows.csv"
        write_rows_csv([make_row(value=0.25, bound=0.5)], path)
        lines = path.read_text(encoding="utf-8").split("\n")
        assert lines[0] == ",".join(COLUMNS)
        assert lines[1] == "nu=0.05/M=100/t=0,ensemble_convergence,7,4,0.050000000000000003,0.90000000000000002,100,op_norm_error,0.25,0.5,true,"
        assert lines[2] == ""

    def test_csv_timing_column(self, tmp_path):
        """Test wall time is written only on request."""
        path = tmp_path / "rows.csv"
        write_rows_csv([make_row(wall_time=1.5)], path, record_timing=True)
        header, row = path.read_text(encoding="utf-8").splitlines()
        assert header.endswith(TIMING_COLUMN)
        assert row.endswith(",1.5")

    def test_csv_note_quoted(self, tmp_path):
        """Test notes containing commas are quoted."""
        path = tmp_path / "rows.csv"
        write_rows_csv([ReportRow.failed("t0", "qlsp", 1, 0.0, 1, "ValueError: a, b")], path)
        assert path.read_text(encoding="utf-8").splitlines()[1].endswith('"ValueError: a, b"')

    def test_summary_null_for_non_finite(self, tmp_path):
        """Test NaN and inf become null and keys are sorted."""
        path = tmp_path / "summary.json"
        write_summary_json({"b": math.nan, "a": [1.0, math.inf], "c": {"z": 2}}, path)
        text = path.read_text(encoding="utf-8")
        assert json.loads(text) == {"a": [1.0, None], "b": None, "c": {"z": 2}}
        assert text.index('"a"') < text.index('"b"')
        assert text.endswith("\n")


class TestAggregateMetrics:
    """Tests for aggregate_metrics."""

    def test_rates_and_statistics(self):
        """Test counts, pass rate and value statistics per metric."""
        rows = [
            make_row(value=0.01),
            make_row(value=0.02),
            make_row(value=0.10),
            make_row(metric="success_probability", value=0.3, bound=math.inf),
        ]
        metrics = aggregate_metrics(rows, {"op_norm_error": 0.5})
        error = metrics["op_norm_error"]
        assert error["count"] == 3
        assert error["passed"] == 2
        assert error["pass_rate"] == pytest.approx(2 / 3)
        assert error["ok"]
        assert error["median"] == pytest.approx(0.02)
        assert error["max"] == pytest.approx(0.10)
        assert metrics["success_probability"]["required_pass_rate"] == 1.0

    def test_default_requires_every_row(self):
        """Test metrics without a required rate must always pass."""
        metrics = aggregate_metrics([make_row(value=0.01), make_row(value=0.2)], {})
        assert not metrics["op_norm_error"]["ok"]

    def test_all_nan_statistics(self):
        """Test statistics of failed rows are NaN."""
        metrics = aggregate_metrics([ReportRow.failed("t0", "qlsp", 1, 0.0, 1, "boom")], {})
        assert math.isnan(metrics["trial_failed"]["median"])
