import csv

import numpy as np
import pytest

from blocksdp.experiment import COLUMNS
from blocksdp.report import ReportError, read_results, report, summarize


def write(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        w.writerows(rows)


ROWS = [
    ["community", 100, 2, "5.0", 0, "sdp_map", "misclassification", "0.1", ""],
    ["community", 100, 2, "5.0", 1, "sdp_map", "misclassification", "0.2", ""],
    ["community", 100, 2, "5.0", 2, "sdp_map", "misclassification", "0.6", ""],
    ["community", 200, 2, "5.0", 0, "sdp_map", "misclassification", "0.05", ""],
    ["community", 100, 2, "5.0", 0, "spectral_A", "misclassification", "0.3", ""],
    ["community", 200, 2, "5.0", 0, "spectral_A", "misclassification", "0.25", ""],
]


def test_summary_by_hand(tmp_path):
    write(tmp_path / "r.csv", ROWS)
    s = summarize(read_results(tmp_path / "r.csv"))
    first = [x for x in s if x["method"] == "sdp_map" and x["n"] == 100][0]
    # values 0.1, 0.2, 0.6: mean 0.3, sample variance 0.07, se sqrt(0.07 / 3)
    assert first["mean"] == pytest.approx(0.3)
    assert first["se"] == pytest.approx(np.sqrt(0.07 / 3))
    assert first["count"] == 3
    single = [x for x in s if x["method"] == "sdp_map" and x["n"] == 200][0]
    assert single["se"] == 0 and single["count"] == 1
    assert len(s) == 4


def test_report_writes_files(tmp_path):
    write(tmp_path / "r.csv", ROWS)
    paths = report(tmp_path / "r.csv", tmp_path / "out")
    names = [p.name for p in paths]
    assert names == ["summary.csv", "community_deg5_misclassification.svg"]
    svg = (tmp_path / "out" / names[1]).read_text()
    assert "sdp_map" in svg and "spectral_A" in svg
    lines = (tmp_path / "out" / "summary.csv").read_text().splitlines()
    assert lines[0] == "model,avg_degree,metric_name,method,n,mean,se,count"
    assert len(lines) == 5
    again = report(tmp_path / "r.csv", tmp_path / "out2")
    assert again[1].read_bytes() == paths[1].read_bytes()


def test_single_row(tmp_path):
    write(tmp_path / "r.csv", ROWS[:1])
    paths = report(tmp_path / "r.csv", tmp_path / "o")
    assert len(paths) == 2


def test_bad_inputs(tmp_path):
    (tmp_path / "h.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ReportError):
        read_results(tmp_path / "h.csv")
    bad = [list(ROWS[0])]
    bad[0][7] = "x"
    write(tmp_path / "v.csv", bad)
    with pytest.raises(ReportError):
        read_results(tmp_path / "v.csv")
