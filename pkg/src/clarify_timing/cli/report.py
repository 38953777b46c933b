"""Plain-text report rendered from an analysis directory.

The renderer only lays out what the CSVs contain; it computes nothing.
"""

import csv
import io
from pathlib import Path

from rich.console import Console
from rich.table import Table
from rich.text import Text

from ..exceptions import ReportInputMissingError

REPORT_FILE = "report.txt"
REPORT_WIDTH = 220
ABSENT = "--"

SECTIONS: tuple[tuple[str, str], ...] = (
    ("voi_curves.csv", "Mean pass@3 by benchmark, dimension and condition"),
    ("wasted_compute.csv", "Wasted compute by benchmark and injection timing"),
    ("kendall_matrix.csv", "Cross-model Kendall tau-b"),
    ("ponr.csv", "Point of no return by dimension and ambiguity class"),
)
ASK_SECTION = ("ask_summary.csv", "Natural ask behavior")
FINDINGS_FILE = "findings.csv"
NO_ASK_NOTE = "No natural-ask sessions in this run; the ask section is omitted."


def read_table(path: Path) -> tuple[list[str], list[list[str]]]:
    """Header and rows of a CSV, as the exact strings written."""
    if not path.is_file():
        raise ReportInputMissingError(path)
    with path.open(encoding="utf-8", newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows:
        return [], []
    return rows[0], rows[1:]


def _print_section(
    console: Console, title: str, header: list[str], rows: list[list[str]]
) -> None:
    console.print(Text(title, no_wrap=True))
    table = Table(show_lines=False)
    for position, column in enumerate(header):
        table.add_column(column, justify="left" if position == 0 else "right", no_wrap=True)
    for row in rows:
        table.add_row(*(cell if cell != "" else ABSENT for cell in row))
    console.print(table)


def render_report(analysis_dir: Path) -> str:
    """Every analysis table plus the findings block, as aligned text.

    Raises:
        ReportInputMissingError: A required CSV is missing.
    """
    analysis_dir = Path(analysis_dir)
    tables = [(title, *read_table(analysis_dir / name)) for name, title in SECTIONS]
    findings = read_table(analysis_dir / FINDINGS_FILE)
    ask_path = analysis_dir / ASK_SECTION[0]
    ask = read_table(ask_path) if ask_path.is_file() else None

    console = Console(record=True, width=REPORT_WIDTH, file=io.StringIO(), color_system=None)
    console.print(f"Clarification timing report: {analysis_dir}")
    console.print()
    for title, header, rows in tables:
        _print_section(console, title, header, rows)
        console.print()
    if ask is None:
        console.print(NO_ASK_NOTE)
    else:
        _print_section(console, ASK_SECTION[1], *ask)
    console.print()
    _print_section(console, "Findings", *findings)
    return console.export_text()


def write_report(analysis_dir: Path, out: Path | None = None) -> Path:
    text = render_report(analysis_dir)
    path = Path(out) if out is not None else Path(analysis_dir) / REPORT_FILE
    path.write_text(text, encoding="utf-8")
    return path
