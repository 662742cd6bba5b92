"""Render load-simulation reports: a delimited CSV plus a bar-chart PNG."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .simulate import BUCKET_CUTOFFS, LoadReport

CSV_NAME = "load_report.csv"
FIGURE_NAME = "load_report.png"

_HEADER_COMMENTS = [
    "# revbib load simulation report",
    "# buckets over per-role actions per effective record: "
    f"< {BUCKET_CUTOFFS[0]} low, < {BUCKET_CUTOFFS[1]} medium, otherwise high",
    "# moderator_decision_actions counts approvals/rejections; opening a record "
    "for evaluation is reported separately",
    "# public scenarios submit public_traffic_factor times the nominal record count",
]

_COLUMNS = [
    "scenario",
    "environment",
    "role",
    "actions",
    "actions_per_record",
    "bucket",
    "n_records",
    "effective_records",
    "n_users",
    "threshold",
    "seed",
    "agreement",
    "public_traffic_factor",
    "opens",
    "auto_decisions",
    "complete",
]


def write_csv(reports: list[LoadReport], out_dir: Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / CSV_NAME
    with path.open("w", encoding="utf-8", newline="") as fh:
        for line in _HEADER_COMMENTS:
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(_COLUMNS)
        for report in reports:
            for role, actions, bucket_name in (
                ("user", report.user_evaluation_actions, report.user_bucket),
                ("moderator", report.moderator_decision_actions, report.moderator_bucket),
            ):
                per_record = (
                    actions / report.effective_records if report.effective_records else 0.0
                )
                writer.writerow(
                    [
                        report.scenario,
                        report.environment,
                        role,
                        actions,
                        f"{per_record:.4f}",
                        bucket_name,
                        report.n_records,
                        report.effective_records,
                        report.n_users,
                        report.threshold,
                        report.seed,
                        report.agreement,
                        report.public_traffic_factor,
                        report.moderator_open_actions if role == "moderator" else "",
                        report.auto_decisions if role == "user" else "",
                        report.complete,
                    ]
                )
    return path


def write_figure(reports: list[LoadReport], out_dir: Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / FIGURE_NAME
    scenarios = [r.scenario for r in reports]
    user_actions = [r.user_evaluation_actions for r in reports]
    moderator_actions = [r.moderator_decision_actions for r in reports]

    fig, ax = plt.subplots(figsize=(8, 4.5))
    width = 0.38
    xs = range(len(scenarios))
    ax.bar([x - width / 2 for x in xs], user_actions, width, label="user evaluation actions")
    ax.bar(
        [x + width / 2 for x in xs],
        moderator_actions,
        width,
        label="moderator decision actions",
    )
    ax.set_xticks(list(xs))
    ax.set_xticklabels([f"scenario {s}" for s in scenarios])
    ax.set_ylabel("actions")
    first = reports[0]
    ax.set_title(
        f"Per-role load ({first.n_records} records, {first.n_users} users, "
        f"threshold {first.threshold}, seed {first.seed})"
    )
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def write_reports(reports: list[LoadReport], out_dir: Path) -> list[Path]:
    return [write_csv(reports, out_dir), write_figure(reports, out_dir)]
