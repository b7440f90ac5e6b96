"""Document and score-context representations fed to the entailment
scorers, plus label hypothesis serialization.

The document representation concatenates Title, Abstract, ExpSetup
(cue-word-filtered sentences from experiment-like sections) and TableInfo
(captions plus column headers). A score context is one numeric cell's
column headers plus its table caption.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Sequence

from .documents import RawDocument
from .errors import DataFormatError
from .tables import TableStruct
from .taxonomy import DmPair, TdmTriple
from .textutil import squash_ws, token_count, truncate_tokens

PART_MARKER = "[SEP]"

# A sentence belongs to ExpSetup when it contains one of these cues and its
# section heading looks experimental.
DEFAULT_CUE_WORDS = (
    "experiment on", "experiment in", "evaluation", "evaluate", "evaluated",
    "dataset", "corpus", "corpora",
)
DEFAULT_SETUP_HEADING_WORDS = ("experiment", "evaluation", "dataset")

_SC_SOURCES = ("bold_only", "all_numeric")


@dataclass(frozen=True)
class ReprConfig:
    include_exp_setup: bool = True
    include_table_info: bool = True
    max_tokens: int = 512
    part_truncate: int = 150
    sc_max_tokens: int = 128
    sc_source: str = "bold_only"

    def __post_init__(self):
        if self.part_truncate > self.max_tokens:
            raise ValueError("part_truncate must not exceed max_tokens")
        if self.sc_source not in _SC_SOURCES:
            raise ValueError(f"sc_source must be one of {_SC_SOURCES}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def load_repr_config(path=None, env=None, env_prefix: str = "TDMEX_") -> ReprConfig:
    """Build a ReprConfig from a JSON file plus environment overrides
    (`<prefix><FIELD>`, e.g. TDMEX_MAX_TOKENS=256)."""
    values: dict = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise DataFormatError(f"{path}: config must be a JSON object")
        values.update(data)
    env = os.environ if env is None else env
    for f in dataclasses.fields(ReprConfig):
        raw = env.get(env_prefix + f.name.upper())
        if raw is None:
            continue
        if f.type == "bool":
            values[f.name] = raw.strip().lower() in ("1", "true", "yes", "on")
        elif f.type == "int":
            values[f.name] = int(raw)
        else:
            values[f.name] = raw
    unknown = set(values) - {f.name for f in dataclasses.fields(ReprConfig)}
    if unknown:
        raise DataFormatError(f"unknown config fields: {sorted(unknown)}")
    return ReprConfig(**values)


@dataclass(frozen=True)
class DocTAET:
    doc_id: str
    title: str
    abstract: str
    exp_setup: str
    table_info: str
    config: ReprConfig
    rendered: str


@dataclass(frozen=True)
class ScoreContext:
    doc_id: str
    table_id: str
    value: Decimal
    percent_flag: bool
    headers: tuple[str, ...]
    caption: str
    rendered: str
    row: int
    col: int


def extract_exp_setup(
    doc: RawDocument,
    cue_words: Sequence[str] = DEFAULT_CUE_WORDS,
    heading_words: Sequence[str] = DEFAULT_SETUP_HEADING_WORDS,
) -> list[str]:
    """Sentences that plausibly describe the experimental setup, in
    document order."""
    cues = tuple(c.casefold() for c in cue_words)
    heads = tuple(h.casefold() for h in heading_words)
    selected = []
    for section in doc.sections:
        heading = section.heading.casefold()
        if not any(h in heading for h in heads):
            continue
        for sentence in section.sentences:
            lowered = sentence.casefold()
            if any(c in lowered for c in cues):
                selected.append(sentence)
    return selected


def table_headers(table: TableStruct) -> list[str]:
    """Unique column header texts of a table's numeric cells, in first
    appearance order."""
    seen = set()
    headers = []
    for nc in table.numeric_cells:
        for h in nc.column_headers:
            if h not in seen:
                seen.add(h)
                headers.append(h)
    return headers


def build_table_info(tables: Iterable[TableStruct]) -> str:
    parts = []
    for table in tables:
        if table.caption:
            parts.append(table.caption)
        parts.extend(table_headers(table))
    return squash_ws(" ".join(parts))


def build_doctaet(doc: RawDocument, config: ReprConfig = ReprConfig()) -> DocTAET:
    """Assemble the enabled parts in fixed order; when the whole rendering
    exceeds max_tokens, ExpSetup and TableInfo are each cut to their first
    part_truncate tokens, then the rendering is hard-capped at max_tokens."""
    title = squash_ws(doc.title)
    abstract = squash_ws(doc.abstract)
    exp_setup = squash_ws(" ".join(extract_exp_setup(doc))) if config.include_exp_setup else ""
    table_info = build_table_info(doc.tables) if config.include_table_info else ""

    def render(exp: str, tinfo: str) -> str:
        parts = [title, abstract]
        if config.include_exp_setup:
            parts.append(exp)
        if config.include_table_info:
            parts.append(tinfo)
        return f" {PART_MARKER} ".join(parts)

    rendered = render(exp_setup, table_info)
    if token_count(rendered) > config.max_tokens:
        rendered = render(
            truncate_tokens(exp_setup, config.part_truncate),
            truncate_tokens(table_info, config.part_truncate),
        )
        if token_count(rendered) > config.max_tokens:
            rendered = truncate_tokens(rendered, config.max_tokens)
    return DocTAET(
        doc_id=doc.doc_id,
        title=title,
        abstract=abstract,
        exp_setup=exp_setup,
        table_info=table_info,
        config=config,
        rendered=rendered,
    )


def build_score_contexts(
    doc: RawDocument, config: ReprConfig = ReprConfig(), allow_fallback: bool = True
) -> list[ScoreContext]:
    """One context per qualifying numeric cell, in document order.

    With sc_source=bold_only, tables lacking typeface data fall back to
    all numeric cells (per table) unless allow_fallback is off.
    """
    contexts = []
    for table in doc.tables:
        cells = table.numeric_cells
        if config.sc_source == "bold_only":
            if table.no_bold_info:
                if not allow_fallback:
                    continue
            else:
                cells = [nc for nc in cells if nc.cell.is_bold]
        for nc in cells:
            rendered = truncate_tokens(
                squash_ws(" ".join([*nc.column_headers, table.caption])),
                config.sc_max_tokens,
            )
            contexts.append(
                ScoreContext(
                    doc_id=doc.doc_id,
                    table_id=table.table_id,
                    value=nc.value,
                    percent_flag=nc.percent_flag,
                    headers=tuple(nc.column_headers),
                    caption=table.caption,
                    rendered=rendered,
                    row=nc.cell.row,
                    col=nc.cell.col,
                )
            )
    return contexts


def serialize_hypothesis(label: TdmTriple | DmPair) -> str:
    """Render a label as hypothesis text; injective over canonical labels."""
    if isinstance(label, TdmTriple):
        return f"{label.task} ; {label.dataset} ; {label.metric}"
    return f"{label.dataset} ; {label.metric}"


# ---------------------------------------------------------------------------
# Persistence (JSONL records consumed by the CLI pipeline)
# ---------------------------------------------------------------------------

def doctaet_to_json(d: DocTAET) -> dict:
    return {
        "doc_id": d.doc_id,
        "title": d.title,
        "abstract": d.abstract,
        "exp_setup": d.exp_setup,
        "table_info": d.table_info,
        "config": d.config.to_dict(),
        "rendered": d.rendered,
    }


def doctaet_from_json(data: dict) -> DocTAET:
    return DocTAET(
        doc_id=data["doc_id"],
        title=data.get("title", ""),
        abstract=data.get("abstract", ""),
        exp_setup=data.get("exp_setup", ""),
        table_info=data.get("table_info", ""),
        config=ReprConfig(**data.get("config", {})),
        rendered=data["rendered"],
    )


def sc_to_json(sc: ScoreContext) -> dict:
    return {
        "doc_id": sc.doc_id,
        "table_id": sc.table_id,
        "value": str(sc.value),
        "percent_flag": sc.percent_flag,
        "headers": list(sc.headers),
        "caption": sc.caption,
        "rendered": sc.rendered,
        "row": sc.row,
        "col": sc.col,
    }


def sc_from_json(data: dict) -> ScoreContext:
    return ScoreContext(
        doc_id=data["doc_id"],
        table_id=data.get("table_id", ""),
        value=Decimal(str(data["value"])),
        percent_flag=bool(data.get("percent_flag", False)),
        headers=tuple(data.get("headers", [])),
        caption=data.get("caption", ""),
        rendered=data["rendered"],
        row=int(data.get("row", 0)),
        col=int(data.get("col", 0)),
    )
