#!/usr/bin/env python3
"""
Tests for dataset parsing and report writing
Run with pytest, or directly as a script
"""

import json
import logging
import sys

import pytest

from config import ReportFormat
from dataset_loader import (Dataset, DatasetLayout, load_dataset, read_counts_csv, read_ratings_csv,
                            read_report_json, write_counts_csv, write_report)
from errors import DatasetParseError, DomainError, ReportWriteError
from gof import GofRecord
from models import ModelKind
from pmf_core import RatingCounts

# Configure logging
logging.basicConfig(
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    level=logging.INFO
)
logger = logging.getLogger(__name__)

WIDE = "stimulus_id,c1,c2,c3,c4,c5\nsrc01_hrc02,0,3,10,9,2\nsrc01_hrc03,4,8,7,3,2\n"


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestWideLayout:
    """stimulus_id,c1..cK files"""

    def test_read(self, tmp_path):
        dataset = read_counts_csv(write(tmp_path, WIDE))
        assert dataset.K == 5
        assert dataset.ids == ["src01_hrc02", "src01_hrc03"]
        assert dataset.counts[0] == RatingCounts([0, 3, 10, 9, 2])
        assert dataset.min_total == 24
        assert dataset.name == "data"

    def test_explicit_scale(self, tmp_path):
        dataset = read_counts_csv(write(tmp_path, "stimulus_id,c1,c2,c3\nx,1,2,3\n"), K=3)
        assert dataset.K == 3
        with pytest.raises(DatasetParseError):
            read_counts_csv(write(tmp_path, "stimulus_id,c1,c2,c3\nx,1,2,3\n", "short.csv"), K=5)

    def test_negative_count_reports_its_row(self, tmp_path):
        text = "stimulus_id,c1,c2,c3,c4,c5\na,1,2,3,4,5\nb,1,-2,3,4,5\n"
        with pytest.raises(DatasetParseError) as excinfo:
            read_counts_csv(write(tmp_path, text))
        assert excinfo.value.row == 3
        assert "row 3" in str(excinfo.value)

    def test_blank_lines_keep_file_line_numbers(self, tmp_path):
        text = "stimulus_id,c1,c2,c3,c4,c5\na,1,2,3,4,5\n\n\nb,1,-2,3,4,5\n"
        with pytest.raises(DatasetParseError) as excinfo:
            read_counts_csv(write(tmp_path, text))
        assert excinfo.value.row == 5
        dataset = read_counts_csv(write(tmp_path, "stimulus_id,c1,c2,c3,c4,c5\n\na,1,2,3,4,5\n\n", "ok.csv"))
        assert dataset.ids == ["a"]

    def test_non_integer_count(self, tmp_path):
        with pytest.raises(DatasetParseError) as excinfo:
            read_counts_csv(write(tmp_path, "stimulus_id,c1,c2,c3,c4,c5\na,1,2.5,3,4,5\n"))
        assert excinfo.value.row == 2

    def test_duplicate_stimulus(self, tmp_path):
        text = "stimulus_id,c1,c2,c3,c4,c5\na,1,2,3,4,5\na,0,0,1,0,0\n"
        with pytest.raises(DatasetParseError) as excinfo:
            read_counts_csv(write(tmp_path, text))
        assert excinfo.value.row == 3

    def test_missing_columns_and_empty_files(self, tmp_path):
        with pytest.raises(DatasetParseError) as excinfo:
            read_counts_csv(write(tmp_path, "id,c1,c2\na,1,2\n"))
        assert excinfo.value.row == 1
        with pytest.raises(DatasetParseError):
            read_counts_csv(write(tmp_path, "stimulus_id,c1,c2,c3,c4,c5\n", "header.csv"))
        with pytest.raises(DatasetParseError):
            read_counts_csv(write(tmp_path, "", "empty.csv"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            read_counts_csv(tmp_path / "absent.csv")

    def test_counts_round_trip(self, tmp_path):
        dataset = read_counts_csv(write(tmp_path, WIDE))
        out = tmp_path / "copy.csv"
        write_counts_csv(dataset, out)
        assert out.read_text(encoding="utf-8") == WIDE
        assert read_counts_csv(out).stimuli == dataset.stimuli


class TestLongLayout:
    """stimulus_id,rating files"""

    def test_aggregation_keeps_first_appearance_order(self, tmp_path):
        text = "stimulus_id,rating\nb,5\na,1\nb,4\nb,5\na,3\n"
        dataset = read_ratings_csv(write(tmp_path, text), K=5)
        assert dataset.ids == ["b", "a"]
        assert dataset.counts[0] == RatingCounts([0, 0, 0, 1, 2])
        assert dataset.counts[1] == RatingCounts([1, 0, 1, 0, 0])

    def test_rating_outside_scale(self, tmp_path):
        with pytest.raises(DatasetParseError) as excinfo:
            read_ratings_csv(write(tmp_path, "stimulus_id,rating\na,3\na,6\n"), K=5)
        assert excinfo.value.row == 3

    def test_blank_lines_keep_file_line_numbers(self, tmp_path):
        with pytest.raises(DatasetParseError) as excinfo:
            read_ratings_csv(write(tmp_path, "stimulus_id,rating\na,3\n\n\na,6\n"), K=5)
        assert excinfo.value.row == 5

    def test_agrees_with_wide_layout(self, tmp_path):
        wide = read_counts_csv(write(tmp_path, WIDE, "wide.csv"))
        lines = ["stimulus_id,rating"]
        for sid, counts in zip(wide.ids, wide.counts):
            lines += [f"{sid},{k}" for k, n in enumerate(counts.counts, start=1) for _ in range(n)]
        long = read_ratings_csv(write(tmp_path, "\n".join(lines) + "\n", "long.csv"), K=5)
        assert long.ids == wide.ids
        assert list(long.counts) == list(wide.counts)

    def test_load_dataset_dispatch(self, tmp_path):
        path = write(tmp_path, "stimulus_id,rating\na,3\na,4\n")
        assert load_dataset(path, DatasetLayout.LONG).counts[0].total == 2
        assert len(load_dataset(write(tmp_path, WIDE, "wide.csv"))) == 2


class TestDataset:
    def test_duplicate_ids(self):
        with pytest.raises(DomainError):
            Dataset("d", (("a", RatingCounts([1, 1])), ("a", RatingCounts([2, 0]))), 2)

    def test_scale_mismatch(self):
        with pytest.raises(DomainError):
            Dataset("d", (("a", RatingCounts([1, 1, 1])),), 2)


class TestReports:
    """CSV and JSON report output"""

    RECORDS = [
        GofRecord("a", ModelKind.GSD, 1.23456789, 0.5394, 40.0, 24),
        GofRecord("b", ModelKind.GSD, 0.0, 1.0, 35.5, 24),
    ]

    def test_csv(self, tmp_path):
        path = tmp_path / "gof.csv"
        write_report(self.RECORDS, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == ",".join(GofRecord.REPORT_COLUMNS)
        assert lines[1] == "a,GSD,1.23457,0.5394,40,24"

    def test_json_keeps_full_precision(self, tmp_path):
        path = tmp_path / "gof.json"
        write_report(self.RECORDS, path, ReportFormat.JSON)
        payload = json.loads(path.read_text(encoding="utf-8"))
        assert payload["columns"] == list(GofRecord.REPORT_COLUMNS)
        assert read_report_json(path)[0]["g_stat"] == 1.23456789

    def test_empty_report_has_header_only(self, tmp_path):
        path = tmp_path / "empty.csv"
        write_report([], path, columns=GofRecord.REPORT_COLUMNS)
        assert path.read_text(encoding="utf-8") == ",".join(GofRecord.REPORT_COLUMNS) + "\n"

    def test_unwritable_path(self, tmp_path):
        with pytest.raises(ReportWriteError):
            write_report(self.RECORDS, tmp_path / "missing" / "gof.csv")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
