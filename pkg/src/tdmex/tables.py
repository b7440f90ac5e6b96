"""Table extraction from TEI sources: grid geometry, numeric cell detection,
bold typeface flags, header/row-label association, and the extraction
quality harness.
"""

from __future__ import annotations

import json
import logging
import re
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Mapping, Sequence

from .documents import TEI_NS
from .errors import DocumentParseError, EvaluationError
from .textutil import canonical, squash_ws

logger = logging.getLogger(__name__)

_NS = {"tei": TEI_NS}


@dataclass(frozen=True)
class Cell:
    text: str
    is_bold: bool
    row: int
    col: int


@dataclass
class NumericCell:
    cell: Cell
    value: Decimal
    percent_flag: bool
    column_headers: list[str] = field(default_factory=list)
    row_label: str = ""


@dataclass
class TableStruct:
    table_id: str
    caption: str
    grid: list[list[Cell]] = field(default_factory=list)
    numeric_cells: list[NumericCell] = field(default_factory=list)
    no_bold_info: bool = False


# Accepted numeric cell shapes: integers, decimals, trailing %, and a
# trailing ±deviation (the leading number is the value).
_NUMERIC_RE = re.compile(
    r"^\s*(?P<num>[+-]?(?:\d+(?:\.\d+)?|\.\d+))"
    r"(?:\s*±\s*(?:\d+(?:\.\d+)?|\.\d+))?"
    r"\s*(?P<pct>%)?\s*$"
)


def detect_numeric(cell_text: str) -> tuple[Decimal, bool] | None:
    """Return (value, percent_flag) when the cell holds a numeric score."""
    m = _NUMERIC_RE.match(cell_text)
    if not m:
        return None
    return Decimal(m.group("num")), m.group("pct") is not None


def _cell_is_bold(cell_el: ET.Element) -> bool:
    if "bold" in cell_el.get("rend", ""):
        return True
    return any(
        "bold" in hi.get("rend", "") for hi in cell_el.iter(f"{{{TEI_NS}}}hi")
    )


def _cell_has_typeface_info(cell_el: ET.Element) -> bool:
    if cell_el.get("rend") is not None:
        return True
    return any(hi.get("rend") is not None for hi in cell_el.iter(f"{{{TEI_NS}}}hi"))


def _build_grid(table_el: ET.Element) -> tuple[list[list[Cell]], bool, set[tuple[int, int]]]:
    """Expand row/cell markup (including column spans) into a rectangular
    grid. Returns (grid, has_typeface_info, origins) where origins holds
    the (row, col) anchor of every source cell."""
    raw_rows = []
    has_typeface = False
    for row_el in table_el.findall("tei:row", _NS):
        row_cells = []
        for cell_el in row_el.findall("tei:cell", _NS):
            span_attr = cell_el.get("cols", "1")
            try:
                span = int(span_attr)
            except ValueError:
                raise DocumentParseError(f"bad cols attribute {span_attr!r}")
            if span < 1:
                raise DocumentParseError(f"bad cols attribute {span_attr!r}")
            text = canonical(squash_ws(" ".join(cell_el.itertext())))
            bold = _cell_is_bold(cell_el)
            has_typeface = has_typeface or _cell_has_typeface_info(cell_el)
            row_cells.append((text, bold, span))
        raw_rows.append(row_cells)
    if not raw_rows:
        raise DocumentParseError("table has no rows")

    width = max(sum(span for _, _, span in row) for row in raw_rows)
    grid: list[list[Cell]] = []
    origins: set[tuple[int, int]] = set()
    for r, row_cells in enumerate(raw_rows):
        row: list[Cell] = []
        for text, bold, span in row_cells:
            origins.add((r, len(row)))
            for _ in range(span):
                row.append(Cell(text, bold, r, len(row)))
        while len(row) < width:
            row.append(Cell("", False, r, len(row)))
        grid.append(row)
    return grid, has_typeface, origins


def _collect_numeric_cells(
    grid: list[list[Cell]], origins: set[tuple[int, int]]
) -> list[NumericCell]:
    """One NumericCell per source cell (a spanned numeric cell is counted
    once, anchored at its first column)."""
    numeric = []
    for row in grid:
        for cell in row:
            if (cell.row, cell.col) not in origins:
                continue
            parsed = detect_numeric(cell.text)
            if parsed is None:
                continue
            value, pct = parsed
            numeric.append(NumericCell(cell=cell, value=value, percent_flag=pct))
    return numeric


def _table_caption(figure_el: ET.Element) -> str:
    desc = figure_el.find("tei:figDesc", _NS)
    if desc is not None:
        text = canonical(squash_ws(" ".join(desc.itertext())))
        if text:
            return text
    return ""


def extract_tables(xml_bytes: bytes) -> list[TableStruct]:
    """Extract all tables containing at least one numeric cell from TEI.

    Tables with unparseable geometry are skipped with a warning.
    """
    root = ET.fromstring(xml_bytes)
    tables: list[TableStruct] = []
    index = 0
    for figure_el in root.iter(f"{{{TEI_NS}}}figure"):
        if figure_el.get("type") != "table":
            continue
        index += 1
        table_id = figure_el.get(f"{{http://www.w3.org/XML/1998/namespace}}id") or f"t{index}"
        table_el = figure_el.find("tei:table", _NS)
        if table_el is None:
            logger.warning("table %s: no table element, skipped", table_id)
            continue
        caption = _table_caption(figure_el)
        if not caption:
            logger.warning("table %s: missing caption", table_id)
        try:
            grid, has_typeface, origins = _build_grid(table_el)
        except DocumentParseError as exc:
            logger.warning("table %s: unparseable geometry (%s), skipped", table_id, exc)
            continue
        numeric = _collect_numeric_cells(grid, origins)
        if not numeric:
            continue
        table = TableStruct(
            table_id=table_id,
            caption=caption,
            grid=grid,
            numeric_cells=numeric,
            no_bold_info=not has_typeface,
        )
        tables.append(associate_headers(table))
    return tables


def _body_start(grid: list[list[Cell]]) -> int:
    """First row where at least half of the non-empty cells are numeric;
    rows above it are header rows."""
    for r, row in enumerate(grid):
        nonempty = [c for c in row if c.text.strip()]
        if not nonempty:
            continue
        numeric = sum(1 for c in nonempty if detect_numeric(c.text) is not None)
        if numeric * 2 >= len(nonempty):
            return r
    return len(grid)


def associate_headers(table: TableStruct) -> TableStruct:
    """Fill column_headers and row_label for every numeric cell in place.

    Headers come from non-numeric cells in the same column within the
    header rows strictly above the cell; the row label is the nearest
    non-numeric, non-empty cell to the left.
    """
    if not table.grid:
        return table
    body = _body_start(table.grid)
    for nc in table.numeric_cells:
        r, c = nc.cell.row, nc.cell.col
        headers = []
        for i in range(min(body, r)):
            cell = table.grid[i][c]
            if cell.text.strip() and detect_numeric(cell.text) is None:
                headers.append(cell.text)
        nc.column_headers = headers
        label = ""
        for j in range(c - 1, -1, -1):
            cell = table.grid[r][j]
            if cell.text.strip() and detect_numeric(cell.text) is None:
                label = cell.text
                break
        nc.row_label = label
    return table


def table_to_json(table: TableStruct) -> dict:
    return {
        "table_id": table.table_id,
        "caption": table.caption,
        "no_bold_info": table.no_bold_info,
        "cells": [
            {
                "text": nc.cell.text,
                "value": str(nc.value),
                "percent": nc.percent_flag,
                "bold": nc.cell.is_bold,
                "row": nc.cell.row,
                "col": nc.cell.col,
                "row_label": nc.row_label,
                "column_labels": list(nc.column_headers),
            }
            for nc in table.numeric_cells
        ],
    }


def table_from_json(data: dict) -> TableStruct:
    cells = []
    for c in data.get("cells", []):
        cell = Cell(
            text=c.get("text", str(c["value"])),
            is_bold=bool(c.get("bold", False)),
            row=int(c.get("row", 0)),
            col=int(c.get("col", 0)),
        )
        cells.append(
            NumericCell(
                cell=cell,
                value=Decimal(str(c["value"])),
                percent_flag=bool(c.get("percent", False)),
                column_headers=list(c.get("column_labels", [])),
                row_label=c.get("row_label", ""),
            )
        )
    return TableStruct(
        table_id=data.get("table_id", ""),
        caption=data.get("caption", ""),
        grid=[],
        numeric_cells=cells,
        no_bold_info=bool(data.get("no_bold_info", False)),
    )


# ---------------------------------------------------------------------------
# Extraction quality harness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GoldCell:
    value: Decimal
    bold: bool
    row_label: str
    column_labels: tuple[str, ...]


@dataclass(frozen=True)
class GoldTable:
    caption: str
    cells: tuple[GoldCell, ...]


@dataclass(frozen=True)
class GoldPaperTables:
    doc_id: str
    tables: tuple[GoldTable, ...]


def load_gold_tables(data: dict) -> GoldPaperTables:
    """Parse one paper's gold table annotation object:
    {doc_id, tables:[{caption, cells:[{value, bold, row_label, column_labels}]}]}"""
    tables = []
    for t in data.get("tables", []):
        cells = tuple(
            GoldCell(
                value=Decimal(str(c["value"])),
                bold=bool(c.get("bold", False)),
                row_label=c.get("row_label", ""),
                column_labels=tuple(c.get("column_labels", [])),
            )
            for c in t.get("cells", [])
        )
        tables.append(GoldTable(caption=t.get("caption", ""), cells=cells))
    return GoldPaperTables(doc_id=data["doc_id"], tables=tuple(tables))


def load_gold_tables_file(path) -> GoldPaperTables:
    with open(path, encoding="utf-8") as fh:
        return load_gold_tables(json.load(fh))


def _norm(text: str) -> str:
    return squash_ws(text).casefold()


# (key, display label, needs caption only)
EVAL_DIMENSIONS = (
    ("caption", "Table caption"),
    ("value_bold_caption", "Numeric value + IsBolded + Table caption"),
    ("value_row_caption", "Numeric value + Row label + Table caption"),
    ("value_col_caption", "Numeric value + Column label + Table caption"),
    ("value_bold_row_col_caption",
     "Numeric value + IsBolded + Row label + Column label + Table caption"),
)


def _dimension_tuples(tables: Iterable, dim: str) -> Counter:
    """Comparable tuple multiset for one dimension over a paper's tables.

    Accepts TableStruct or GoldTable items.
    """
    out: Counter = Counter()
    for table in tables:
        caption = _norm(table.caption)
        if dim == "caption":
            out[(caption,)] += 1
            continue
        if isinstance(table, TableStruct):
            cells = [
                (nc.value, nc.cell.is_bold, _norm(nc.row_label),
                 tuple(_norm(h) for h in nc.column_headers))
                for nc in table.numeric_cells
            ]
        else:
            cells = [
                (gc.value, gc.bold, _norm(gc.row_label),
                 tuple(_norm(h) for h in gc.column_labels))
                for gc in table.cells
            ]
        for value, bold, row_label, col_labels in cells:
            if dim == "value_bold_caption":
                out[(value, bold, caption)] += 1
            elif dim == "value_row_caption":
                out[(value, row_label, caption)] += 1
            elif dim == "value_col_caption":
                out[(value, col_labels, caption)] += 1
            else:
                out[(value, bold, row_label, col_labels, caption)] += 1
    return out


def _prf(tp: int, n_extracted: int, n_gold: int) -> tuple[float, float, float]:
    if n_extracted == 0 and n_gold == 0:
        return 100.0, 100.0, 100.0
    p = 100.0 * tp / n_extracted if n_extracted else 0.0
    r = 100.0 * tp / n_gold if n_gold else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


@dataclass(frozen=True)
class TableEvalReport:
    """Macro P/R/F1 per evaluation dimension, averaged over papers."""

    rows: dict[str, tuple[float, float, float]]

    def __getitem__(self, dim: str) -> tuple[float, float, float]:
        return self.rows[dim]


def evaluate_table_parser(
    extracted: Mapping[str, Sequence[TableStruct]],
    gold: Sequence[GoldPaperTables],
) -> TableEvalReport:
    """Score extracted tables against gold annotations per paper.

    A tuple is correct only when every compared element matches exactly
    after whitespace trimming and case folding.
    """
    gold_by_id = {g.doc_id: g for g in gold}
    if set(extracted) != set(gold_by_id):
        missing = set(gold_by_id) ^ set(extracted)
        raise EvaluationError(f"gold/extracted doc_id mismatch: {sorted(missing)}")

    rows = {}
    for dim, _label in EVAL_DIMENSIONS:
        per_paper = []
        for doc_id in sorted(extracted):
            ext = _dimension_tuples(extracted[doc_id], dim)
            gld = _dimension_tuples(gold_by_id[doc_id].tables, dim)
            tp = sum((ext & gld).values())
            per_paper.append(_prf(tp, sum(ext.values()), sum(gld.values())))
        n = len(per_paper)
        rows[dim] = tuple(sum(vals[i] for vals in per_paper) / n for i in range(3))
    return TableEvalReport(rows=rows)


def render_table_eval(report: TableEvalReport) -> str:
    labels = dict(EVAL_DIMENSIONS)
    width = max(len(v) for v in labels.values())
    lines = [f"{'':{width}}  Macro P  Macro R  Macro F1"]
    for dim, label in EVAL_DIMENSIONS:
        p, r, f1 = report.rows[dim]
        lines.append(f"{label:{width}}  {p:7.1f}  {r:7.1f}  {f1:8.1f}")
    return "\n".join(lines)
