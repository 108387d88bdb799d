from __future__ import annotations

import csv
import io
import json

from budgettree.reporting import SUMMARY_COLUMNS, RunReport, aggregate, read_reports, write_reports


def rep(qid, em, method="bavt", tier="low", tools=3, dataset="toy"):
    return RunReport(qid, method, "ans", em, float(em), tools, 100, 0.01, {"node_count": 3}, 0, dataset, tier)


def test_roundtrip(tmp_path):
    reports = [rep("a", 1), rep("b", 0)]
    path = tmp_path / "r.jsonl"
    write_reports(reports, path)
    assert read_reports(path) == reports
    line = path.read_text().splitlines()[0]
    assert line == json.dumps(json.loads(line), sort_keys=True, ensure_ascii=False)


def test_mean_em():
    s = aggregate([rep("a", 1), rep("b", 0)])
    assert len(s.rows) == 1 and s.rows[0]["em"] == 0.5 and s.rows[0]["n"] == 2


def test_empty_table_has_headers():
    s = aggregate([])
    assert s.rows == []
    assert s.to_csv().strip() == ",".join(SUMMARY_COLUMNS)


def test_grouping_and_series(tmp_path):
    reports = [
        rep("a", 1, tier="high", tools=12),
        rep("a", 0, tier="low", tools=4),
        rep("b", 1, tier="low", tools=5),
        rep("a", 1, method="baseline", tier="middle", tools=8),
    ]
    s = aggregate(reports)
    keys = [(r["method"], r["tier"]) for r in s.rows]
    assert keys == [("baseline", "middle"), ("bavt", "low"), ("bavt", "high")]
    assert s.series["toy/bavt"] == [{"tier": "low", "tools": 4.5, "em": 0.5}, {"tier": "high", "tools": 12, "em": 1}]
    csv_path, json_path = s.write(tmp_path / "summary")
    rows = list(csv.DictReader(io.StringIO(csv_path.read_text())))
    assert len(rows) == 3 and rows[1]["em"] == "0.5"
    assert json.loads(json_path.read_text())["rows"] == s.rows
