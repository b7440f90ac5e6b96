"""Parse structured paper sources (GROBID-style TEI XML or a plain tagged
block format) into RawDocument objects, and serialize them canonically.

PDF conversion is out of scope: ingestion starts at TEI produced by an
external converter.
"""

from __future__ import annotations

import hashlib
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .errors import DocumentParseError, EmptyDocumentError
from .textutil import canonical, squash_ws

if TYPE_CHECKING:
    from .tables import TableStruct

TEI_NS = "http://www.tei-c.org/ns/1.0"
_NS = {"tei": TEI_NS}


@dataclass(frozen=True)
class Section:
    heading: str
    body: str
    sentences: tuple[str, ...]


@dataclass
class RawDocument:
    doc_id: str
    title: str
    abstract: str
    sections: list[Section] = field(default_factory=list)
    tables: list["TableStruct"] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


# Dotted abbreviations that must not terminate a sentence. Stored without
# the trailing dot, lowercase.
_ABBREVIATIONS = {
    "e.g", "i.e", "etc", "cf", "vs", "al", "resp", "approx",
    "fig", "figs", "eq", "eqs", "sec", "secs", "tab", "no",
    "dr", "mr", "mrs", "ms", "prof", "st",
}

# A boundary is terminal punctuation (plus optional closing quote/bracket)
# followed by whitespace and a plausible sentence opener.
_BOUNDARY_RE = re.compile(r"([.!?]+)([\"')\]]*)(\s+)(?=[A-Z0-9\"'(\[])")


def split_sentences(body: str) -> list[str]:
    """Rule-based sentence splitter: terminal punctuation with an
    abbreviation blocklist. Deterministic; never emits empty sentences."""
    text = squash_ws(body)
    if not text:
        return []
    cuts = []
    for m in _BOUNDARY_RE.finditer(text):
        if m.group(1).startswith("."):
            word = re.search(r"(\S*?)\.?$", text[: m.start(1)])
            token = word.group(1).lower().rstrip(".") if word else ""
            if token in _ABBREVIATIONS:
                continue
        cuts.append(m.end())
    sentences = []
    start = 0
    for cut in cuts:
        piece = text[start:cut].strip()
        if piece:
            sentences.append(piece)
        start = cut
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def _element_text(elem: ET.Element) -> str:
    return squash_ws(" ".join(elem.itertext()))


def _byte_offset(xml_bytes: bytes, position: tuple[int, int]) -> int:
    """Approximate byte offset of an (1-based line, 0-based column) pair."""
    line, col = position
    lines = xml_bytes.split(b"\n")
    return sum(len(ln) + 1 for ln in lines[: line - 1]) + col


def _default_doc_id(xml_bytes: bytes) -> str:
    return "doc-" + hashlib.sha1(xml_bytes).hexdigest()[:12]


def parse_tei(xml_bytes: bytes, doc_id: str | None = None) -> RawDocument:
    """Parse TEI XML into a RawDocument (tables are populated separately).

    Raises DocumentParseError (with byte offset) on malformed XML and
    EmptyDocumentError when the file carries no content at all; missing
    individual elements degrade to empty strings plus a recorded warning.
    """
    if not xml_bytes or not xml_bytes.strip():
        raise EmptyDocumentError("document is empty (no bytes)")
    try:
        root = ET.fromstring(xml_bytes)
    except ET.ParseError as exc:
        offset = _byte_offset(xml_bytes, exc.position)
        raise DocumentParseError(
            f"malformed XML at byte {offset}: {exc}", byte_offset=offset
        ) from exc

    warnings: list[str] = []

    title_el = root.find(".//tei:titleStmt/tei:title", _NS)
    title = canonical(_element_text(title_el)) if title_el is not None else ""
    if not title:
        warnings.append("missing title")

    abstract_el = root.find(".//tei:profileDesc/tei:abstract", _NS)
    abstract = canonical(_element_text(abstract_el)) if abstract_el is not None else ""
    if not abstract:
        warnings.append("missing abstract")

    sections: list[Section] = []
    body_el = root.find(".//tei:text/tei:body", _NS)
    if body_el is not None:
        for div in body_el.findall("tei:div", _NS):
            head_el = div.find("tei:head", _NS)
            heading = canonical(_element_text(head_el)) if head_el is not None else ""
            parts = []
            for child in div:
                if child.tag == f"{{{TEI_NS}}}head":
                    continue
                if child.tag == f"{{{TEI_NS}}}figure":
                    continue  # tables/figures are handled by table extraction
                text = _element_text(child)
                if text:
                    parts.append(text)
            body = canonical(squash_ws(" ".join(parts)))
            sections.append(Section(heading, body, tuple(split_sentences(body))))
    if not sections:
        warnings.append("no body sections")

    if not title and not abstract and not sections:
        raise EmptyDocumentError("document is valid XML but contains no content")

    return RawDocument(
        doc_id=doc_id or _default_doc_id(xml_bytes),
        title=title,
        abstract=abstract,
        sections=sections,
        warnings=warnings,
    )


_PLAIN_TAG_RE = re.compile(r"^#(TITLE|ABSTRACT|SECTION)(?:\s+(.*))?$")


def parse_plain(text: str, doc_id: str) -> RawDocument:
    """Parse the line-oriented tagged block format:
    `#TITLE`, `#ABSTRACT`, `#SECTION <heading>` each followed by raw lines."""
    if not text.strip():
        raise EmptyDocumentError("document is empty (no content lines)")
    title_lines: list[str] = []
    abstract_lines: list[str] = []
    section_blocks: list[tuple[str, list[str]]] = []
    current: list[str] | None = None
    saw_tag = False
    for raw in text.splitlines():
        m = _PLAIN_TAG_RE.match(raw.strip())
        if m:
            saw_tag = True
            tag, arg = m.group(1), m.group(2) or ""
            if tag == "TITLE":
                current = title_lines
            elif tag == "ABSTRACT":
                current = abstract_lines
            else:
                section_blocks.append((squash_ws(arg), []))
                current = section_blocks[-1][1]
            continue
        if current is None:
            if raw.strip():
                raise DocumentParseError(f"content before any block tag: {raw!r}")
            continue
        current.append(raw)
    if not saw_tag:
        raise DocumentParseError("no #TITLE/#ABSTRACT/#SECTION tags found")

    warnings = []
    title = canonical(squash_ws(" ".join(title_lines)))
    abstract = canonical(squash_ws(" ".join(abstract_lines)))
    if not title:
        warnings.append("missing title")
    if not abstract:
        warnings.append("missing abstract")
    sections = []
    for heading, lines in section_blocks:
        body = canonical(squash_ws(" ".join(lines)))
        sections.append(Section(canonical(heading), body, tuple(split_sentences(body))))
    if not sections:
        warnings.append("no body sections")
    return RawDocument(doc_id=doc_id, title=title, abstract=abstract,
                       sections=sections, warnings=warnings)


def document_to_json(doc: RawDocument, include_tables: bool = False) -> dict:
    """Canonical serialization. Field names are part of the interface."""
    data = {
        "doc_id": doc.doc_id,
        "title": doc.title,
        "abstract": doc.abstract,
        "sections": [{"heading": s.heading, "body": s.body} for s in doc.sections],
    }
    if include_tables:
        from .tables import table_to_json

        data["tables"] = [table_to_json(t) for t in doc.tables]
    return data


def document_from_json(data: dict) -> RawDocument:
    from .tables import table_from_json

    sections = [
        Section(s.get("heading", ""), s.get("body", ""),
                tuple(split_sentences(s.get("body", ""))))
        for s in data.get("sections", [])
    ]
    tables = [table_from_json(t) for t in data.get("tables", [])]
    return RawDocument(
        doc_id=data["doc_id"],
        title=data.get("title", ""),
        abstract=data.get("abstract", ""),
        sections=sections,
        tables=tables,
    )
