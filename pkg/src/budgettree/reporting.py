"""Per-question run reports and their aggregation into summary tables."""

from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from statistics import fmean

from .budget import BUDGET_TIERS

SUMMARY_COLUMNS = ("dataset", "method", "tier", "n", "em", "f1", "tools", "tokens", "cost_usd")


@dataclass
class RunReport:
    question_id: str
    method: str
    answer: str
    em: int | None
    f1: float | None
    tools_used: int
    tokens_used: int
    estimated_cost_usd: float
    tree_stats: dict = field(default_factory=dict)
    seed: int = 0
    dataset: str = ""
    tier: str = ""
    failed: bool = False
    error: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_dict(cls, d: dict) -> RunReport:
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


def write_reports(reports, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in reports:
            fh.write(r.to_json() + "\n")


def read_reports(path: str | Path) -> list[RunReport]:
    with open(path, encoding="utf-8") as fh:
        return [RunReport.from_dict(json.loads(line)) for line in fh if line.strip()]


def _mean(xs):
    xs = [x for x in xs if x is not None]
    return round(fmean(xs), 10) if xs else None


def _tier_order(tier: str) -> tuple:
    names = list(BUDGET_TIERS)
    return (names.index(tier), "") if tier in names else (len(names), tier)


@dataclass
class Summary:
    rows: list[dict]
    series: dict[str, list[dict]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow(row)
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"rows": self.rows, "series": self.series}, indent=2, sort_keys=True)

    def write(self, stem: str | Path) -> tuple[Path, Path]:
        stem = Path(stem)
        csv_path = stem.with_name(stem.name + ".csv")
        json_path = stem.with_name(stem.name + ".json")
        csv_path.write_text(self.to_csv(), encoding="utf-8")
        json_path.write_text(self.to_json(), encoding="utf-8")
        return csv_path, json_path


def aggregate(reports) -> Summary:
    """Group by (dataset, method, tier) and average the metrics.

    ``series`` maps ``"dataset/method"`` to per-tier points (mean tool calls
    against mean EM), ordered low to high, for budget-vs-accuracy curves.
    """
    groups: dict[tuple, list[RunReport]] = defaultdict(list)
    for r in reports:
        groups[(r.dataset, r.method, r.tier)].append(r)
    rows = []
    for key in sorted(groups, key=lambda k: (k[0], k[1], _tier_order(k[2]))):
        rs = groups[key]
        rows.append(
            {
                "dataset": key[0],
                "method": key[1],
                "tier": key[2],
                "n": len(rs),
                "em": _mean(r.em for r in rs),
                "f1": _mean(r.f1 for r in rs),
                "tools": _mean(r.tools_used for r in rs),
                "tokens": _mean(r.tokens_used for r in rs),
                "cost_usd": _mean(r.estimated_cost_usd for r in rs),
            }
        )
    series: dict[str, list[dict]] = defaultdict(list)
    for row in rows:
        series[f"{row['dataset']}/{row['method']}"].append({"tier": row["tier"], "tools": row["tools"], "em": row["em"]})
    return Summary(rows, dict(series))
