"""Comparison tables and frequency figures over run artifacts.

Rows follow the canonical order none -> random/whole -> random/summary ->
keyword/whole -> keyword/summary; the best and second-best test metrics are
flagged and recomputable from the numeric columns. Percentages render with
two decimals.
"""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .corpus import TEXT_ENCODING
from .errors import IntegrityError

ROW_ORDER = ("none", "random_whole", "random_summary", "keyword_whole", "keyword_summary")

REPORT_COLUMNS = (
    "model", "pretraining_data", "pretraining_method",
    "valid_acc", "valid_f1", "test_acc", "test_f1",
    "pretraining_minutes", "time_ratio", "data_size_ratio",
)


@dataclass(frozen=True)
class RunReport:
    """One row of the comparison matrix."""

    row_id: str
    model_id: str
    pretraining_data: str
    pretraining_method: str
    valid_acc: float
    valid_f1: float
    test_acc: float
    test_f1: float
    pretraining_minutes: float
    time_ratio: float | None = None
    data_size_ratio: float | None = None

    def __post_init__(self):
        if self.pretraining_data not in ("none", "whole", "summary"):
            raise ValueError(f"bad pretraining_data {self.pretraining_data!r}")
        if self.pretraining_method not in ("none", "random", "keyword"):
            raise ValueError(f"bad pretraining_method {self.pretraining_method!r}")
        if self.pretraining_method == "none":
            if self.pretraining_minutes != 0:
                raise ValueError("no-pretraining rows must report zero minutes")
            if self.time_ratio is not None or self.data_size_ratio is not None:
                raise ValueError("no-pretraining rows must leave ratio columns empty")
        for name in ("valid_acc", "valid_f1", "test_acc", "test_f1"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be a fraction in [0, 1], got {value}")
        if self.pretraining_minutes < 0:
            raise ValueError("pretraining_minutes must be non-negative")


def _pct(value: float | None) -> str:
    return "-" if value is None else f"{100.0 * value:.2f}%"


def _row_sort_key(report: RunReport) -> tuple[int, str]:
    try:
        return (ROW_ORDER.index(report.row_id), report.row_id)
    except ValueError:
        return (len(ROW_ORDER), report.row_id)


@dataclass(frozen=True)
class ReportTable:
    rows: tuple[RunReport, ...]
    # (column name, rank) -> row_id; rank 0 is best, 1 second-best
    flags: dict[tuple[str, int], str]

    def to_tsv(self) -> str:
        lines = ["\t".join(REPORT_COLUMNS)]
        for row in self.rows:
            lines.append("\t".join([
                row.model_id, row.pretraining_data, row.pretraining_method,
                _pct(row.valid_acc), _pct(row.valid_f1),
                _pct(row.test_acc), _pct(row.test_f1),
                f"{row.pretraining_minutes:.2f}",
                _pct(row.time_ratio), _pct(row.data_size_ratio),
            ]))
        return "\n".join(lines) + "\n"

    def to_markdown(self) -> str:
        header = ("| Model | Pretraining Data | Pretraining Method | Valid. Acc. "
                  "| Valid. F1 | Test Acc. | Test F1 | Pretraining Time (min) "
                  "| Time Ratio | Data Size Ratio |")
        rule = "|" + "---|" * 10
        lines = [header, rule]
        for row in self.rows:
            test_acc = _pct(row.test_acc)
            test_f1 = _pct(row.test_f1)
            if self.flags.get(("test_acc", 0)) == row.row_id:
                test_acc = f"**{test_acc}**"
            elif self.flags.get(("test_acc", 1)) == row.row_id:
                test_acc = f"*{test_acc}*"
            if self.flags.get(("test_f1", 0)) == row.row_id:
                test_f1 = f"**{test_f1}**"
            elif self.flags.get(("test_f1", 1)) == row.row_id:
                test_f1 = f"*{test_f1}*"
            lines.append("| " + " | ".join([
                row.model_id, row.pretraining_data, row.pretraining_method,
                _pct(row.valid_acc), _pct(row.valid_f1), test_acc, test_f1,
                f"{row.pretraining_minutes:.2f}",
                _pct(row.time_ratio), _pct(row.data_size_ratio),
            ]) + " |")
        return "\n".join(lines) + "\n"


def build_table(reports: Sequence[RunReport]) -> ReportTable:
    """Order rows canonically and flag best/second-best test metrics."""
    if not reports:
        raise ValueError("build_table needs at least one report")
    ids = [r.row_id for r in reports]
    if len(set(ids)) != len(ids):
        raise IntegrityError("duplicate row_id in report set")
    rows = tuple(sorted(reports, key=_row_sort_key))
    flags: dict[tuple[str, int], str] = {}
    for column in ("test_acc", "test_f1"):
        ranked = sorted(rows, key=lambda r: (-getattr(r, column), _row_sort_key(r)))
        for rank, row in enumerate(ranked[:2]):
            flags[(column, rank)] = row.row_id
    return ReportTable(rows=rows, flags=flags)


def verify_report_consistency(reports: Sequence[RunReport], tol: float = 1e-9) -> None:
    """Check that the ratio columns are recomputable from the raw fields."""
    with_time = [r for r in reports if r.pretraining_method != "none"]
    if not with_time:
        return
    slowest = max(r.pretraining_minutes for r in with_time)
    for report in with_time:
        expected = report.pretraining_minutes / slowest if slowest > 0 else None
        if report.time_ratio is None or expected is None:
            raise IntegrityError(f"row {report.row_id!r} is missing its time ratio")
        if abs(report.time_ratio - expected) > tol:
            raise IntegrityError(
                f"row {report.row_id!r} time_ratio {report.time_ratio} != {expected}"
            )
        if report.pretraining_data == "whole" and report.data_size_ratio != 1.0:
            raise IntegrityError(f"row {report.row_id!r} should have data_size_ratio 1.0")
        if report.data_size_ratio is None or not 0 < report.data_size_ratio <= 1.0:
            raise IntegrityError(f"row {report.row_id!r} has a bad data size ratio")


def write_reports(reports: Sequence[RunReport], path: Path | str) -> None:
    """Raw machine-readable report rows (fractions, not percentages)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding=TEXT_ENCODING, newline="") as handle:
        writer = csv.writer(handle, delimiter="\t")
        writer.writerow(("row_id",) + REPORT_COLUMNS)
        for r in sorted(reports, key=_row_sort_key):
            writer.writerow([
                r.row_id, r.model_id, r.pretraining_data, r.pretraining_method,
                repr(r.valid_acc), repr(r.valid_f1), repr(r.test_acc), repr(r.test_f1),
                repr(r.pretraining_minutes),
                "" if r.time_ratio is None else repr(r.time_ratio),
                "" if r.data_size_ratio is None else repr(r.data_size_ratio),
            ])


def read_reports(path: Path | str) -> list[RunReport]:
    reports = []
    with Path(path).open(encoding=TEXT_ENCODING, newline="") as handle:
        reader = csv.DictReader(handle, delimiter="\t")
        for row in reader:
            reports.append(RunReport(
                row_id=row["row_id"],
                model_id=row["model"],
                pretraining_data=row["pretraining_data"],
                pretraining_method=row["pretraining_method"],
                valid_acc=float(row["valid_acc"]),
                valid_f1=float(row["valid_f1"]),
                test_acc=float(row["test_acc"]),
                test_f1=float(row["test_f1"]),
                pretraining_minutes=float(row["pretraining_minutes"]),
                time_ratio=float(row["time_ratio"]) if row["time_ratio"] else None,
                data_size_ratio=(float(row["data_size_ratio"])
                                 if row["data_size_ratio"] else None),
            ))
    return reports


def emit_frequency_figure(curve: Sequence[tuple[int, int]], cutoff: int,
                          image_path: Path | str, csv_path: Path | str) -> None:
    """Render the keyword-frequency curve with a vertical cut-off marker.

    The CSV mirrors the plotted data exactly (same in-memory sequence). A
    cut-off below the minimum plotted level draws the marker at the boundary
    with a warning.
    """
    if not curve:
        raise ValueError("cannot plot an empty frequency curve")
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    from .filtering import save_frequency_curve

    levels = [level for level, _ in curve]
    counts = [count for _, count in curve]
    marker = cutoff
    if cutoff < min(levels):
        import logging
        logging.getLogger(__name__).warning(
            "cut-off %d is below the minimum plotted level %d; drawing at the boundary",
            cutoff, min(levels))
        marker = min(levels)

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(levels, counts, width=0.8, color="#4878a8")
    ax.axvline(marker - 0.5, color="#c03030", linestyle="--",
               label=f"cut-off = {cutoff}")
    ax.set_xlabel("times detected as a keyword")
    ax.set_ylabel("number of distinct words")
    ax.set_title("Keyword frequency and masking cut-off")
    ax.legend()
    fig.tight_layout()
    image_path = Path(image_path)
    image_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(image_path, dpi=150)
    plt.close(fig)

    save_frequency_curve(curve, csv_path)


def load_reference_rows() -> dict[str, list[RunReport]]:
    """Published full-scale reference results shipped as a fixture.

    These document the table format and flagging conventions; they are not
    reproduction targets for desk-scale runs.
    """
    from importlib import resources

    text = resources.files("keymask.data").joinpath("reference_runs.tsv").read_text(
        encoding="utf-8")
    tables: dict[str, list[RunReport]] = {}
    reader = csv.DictReader(text.splitlines(), delimiter="\t")
    for row in reader:
        report = RunReport(
            row_id=row["row_id"],
            model_id=row["model"],
            pretraining_data=row["pretraining_data"],
            pretraining_method=row["pretraining_method"],
            valid_acc=float(row["valid_acc"]),
            valid_f1=float(row["valid_f1"]),
            test_acc=float(row["test_acc"]),
            test_f1=float(row["test_f1"]),
            pretraining_minutes=float(row["pretraining_minutes"]),
            time_ratio=float(row["time_ratio"]) if row["time_ratio"] else None,
            data_size_ratio=(float(row["data_size_ratio"])
                             if row["data_size_ratio"] else None),
        )
        tables.setdefault(row["table"], []).append(report)
    return tables
