"""Label taxonomy, alias normalization, gold annotations, and corpus splits.

Annotations live in a TSV with one (doc_id, task, dataset, metric, score)
line per labeled leaderboard; a literal `Unknown` task marks papers with
no label from the space, and `-` marks an absent score.
"""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DataFormatError, SplitError
from .textutil import canonical, squash_ws

FIELDS = ("task", "dataset", "metric")


@dataclass(frozen=True, order=True)
class TdmTriple:
    task: str
    dataset: str
    metric: str

    def dm(self) -> "DmPair":
        return DmPair(self.dataset, self.metric)


@dataclass(frozen=True, order=True)
class DmPair:
    dataset: str
    metric: str


@dataclass(frozen=True)
class GoldAnnotation:
    """One paper's gold labels: (triple, score-or-None) entries.

    An empty entry tuple means the paper is tagged Unknown.
    """

    doc_id: str
    entries: tuple[tuple[TdmTriple, Decimal | None], ...] = ()

    @property
    def unknown_flag(self) -> bool:
        return not self.entries

    @property
    def triples(self) -> frozenset[TdmTriple]:
        return frozenset(t for t, _ in self.entries)


@dataclass(frozen=True)
class CorpusSplit:
    train: frozenset[str]
    test: frozenset[str]
    label_space: frozenset[TdmTriple]


class AliasTable:
    """Surface label -> canonical label, per field. Canonical labels are
    fixpoints of normalization."""

    def __init__(self, entries: Mapping[str, Mapping[str, str]] | None = None):
        self._maps: dict[str, dict[str, str]] = {f: {} for f in FIELDS}
        if entries:
            for fld, mapping in entries.items():
                for surface, canon in mapping.items():
                    self.add(fld, surface, canon)

    def add(self, fld: str, surface: str, canon: str) -> None:
        if fld not in self._maps:
            raise DataFormatError(f"unknown alias field {fld!r}")
        canon = squash_ws(canonical(canon))
        self._maps[fld][squash_ws(canonical(surface)).casefold()] = canon
        # canonical labels normalize to themselves
        self._maps[fld].setdefault(canon.casefold(), canon)

    def normalize(self, surface: str, fld: str) -> str:
        cleaned = squash_ws(canonical(surface))
        return self._maps[fld].get(cleaned.casefold(), cleaned)

    def normalize_token(self, token: str) -> str:
        """Best-effort single-token canonicalization across all fields
        (used by the lexical scorer's featurizer)."""
        key = token.casefold()
        for fld in FIELDS:
            hit = self._maps[fld].get(key)
            if hit is not None:
                return hit
        return token

    def entries(self) -> dict[str, dict[str, str]]:
        return {f: dict(m) for f, m in self._maps.items()}

    @classmethod
    def load(cls, path) -> "AliasTable":
        """Load a (field, surface, canonical) TSV."""
        table = cls()
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataFormatError(f"{path}:{lineno}: expected 3 tab-separated fields")
            table.add(parts[0].strip(), parts[1], parts[2])
        return table

    @classmethod
    def bundled(cls) -> "AliasTable":
        """The alias table shipped with the package."""
        ref = resources.files("tdmex").joinpath("data/aliases.tsv")
        with resources.as_file(ref) as path:
            return cls.load(path)


def normalize_label(surface: str, fld: str, aliases: AliasTable) -> str:
    """Case-fold/trim lookup through the alias map; idempotent."""
    return aliases.normalize(surface, fld)


def triple_from_fields(task: str, dataset: str, metric: str,
                       aliases: AliasTable | None = None) -> TdmTriple:
    if aliases is None:
        return TdmTriple(squash_ws(canonical(task)), squash_ws(canonical(dataset)),
                         squash_ws(canonical(metric)))
    return TdmTriple(
        aliases.normalize(task, "task"),
        aliases.normalize(dataset, "dataset"),
        aliases.normalize(metric, "metric"),
    )


# ---------------------------------------------------------------------------
# Annotation TSV
# ---------------------------------------------------------------------------

UNKNOWN_TASK = "Unknown"
ABSENT = "-"


def load_annotations(path, aliases: AliasTable | None = None) -> list[GoldAnnotation]:
    grouped: dict[str, list[tuple[TdmTriple, Decimal | None]]] = defaultdict(list)
    order: list[str] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 5:
            raise DataFormatError(f"{path}:{lineno}: expected 5 tab-separated fields")
        doc_id, task, dataset, metric, score_text = (p.strip() for p in parts)
        if doc_id not in grouped:
            order.append(doc_id)
        if task == UNKNOWN_TASK:
            grouped[doc_id]  # materialize with no entries
            continue
        score: Decimal | None = None
        if score_text and score_text != ABSENT:
            try:
                score = Decimal(score_text)
            except InvalidOperation as exc:
                raise DataFormatError(f"{path}:{lineno}: bad score {score_text!r}") from exc
        triple = triple_from_fields(task, dataset, metric, aliases)
        grouped[doc_id].append((triple, score))
    return [GoldAnnotation(doc_id, tuple(grouped[doc_id])) for doc_id in order]


def save_annotations(path, annotations: Iterable[GoldAnnotation]) -> None:
    lines = []
    for ann in annotations:
        if ann.unknown_flag:
            lines.append(f"{ann.doc_id}\t{UNKNOWN_TASK}\t{ABSENT}\t{ABSENT}\t{ABSENT}")
            continue
        for triple, score in ann.entries:
            score_text = str(score) if score is not None else ABSENT
            lines.append(
                f"{ann.doc_id}\t{triple.task}\t{triple.dataset}\t{triple.metric}\t{score_text}"
            )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_label_space(path, aliases: AliasTable | None = None) -> set[TdmTriple]:
    """Load a taxonomy file: one (task, dataset, metric) TSV line per triple."""
    space = set()
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise DataFormatError(f"{path}:{lineno}: expected 3 tab-separated fields")
        space.add(triple_from_fields(*parts, aliases=aliases))
    return space


def save_label_space(path, space: Iterable[TdmTriple]) -> None:
    lines = [f"{t.task}\t{t.dataset}\t{t.metric}" for t in sorted(space)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def annotated_label_space(annotations: Iterable[GoldAnnotation]) -> set[TdmTriple]:
    return {t for ann in annotations for t in ann.triples}


# ---------------------------------------------------------------------------
# Filtering and splits
# ---------------------------------------------------------------------------

def filter_low_support(
    annotations: Sequence[GoldAnnotation], min_papers: int
) -> tuple[list[GoldAnnotation], set[TdmTriple]]:
    """Drop triples annotated on fewer than `min_papers` papers; papers left
    with no triples become Unknown."""
    if min_papers < 1:
        raise ValueError("min_papers must be >= 1")
    support: dict[TdmTriple, set[str]] = defaultdict(set)
    for ann in annotations:
        for triple in ann.triples:
            support[triple].add(ann.doc_id)
    keep = {t for t, docs in support.items() if len(docs) >= min_papers}
    filtered = [
        GoldAnnotation(ann.doc_id,
                       tuple((t, s) for t, s in ann.entries if t in keep))
        for ann in annotations
    ]
    return filtered, keep


def _papers_by_triple(annotations: Sequence[GoldAnnotation]) -> dict[TdmTriple, list[str]]:
    by_triple: dict[TdmTriple, list[str]] = defaultdict(list)
    for ann in sorted(annotations, key=lambda a: a.doc_id):
        for triple in sorted(ann.triples):
            by_triple[triple].append(ann.doc_id)
    return by_triple


def _standard_split(annotations: Sequence[GoldAnnotation], rng: random.Random) -> CorpusSplit:
    by_triple = _papers_by_triple(annotations)
    blocking = sorted(t for t, docs in by_triple.items() if len(docs) < 2)
    if blocking:
        raise SplitError(
            "triples with fewer than 2 papers cannot appear on both sides: "
            + "; ".join(f"{t.task}/{t.dataset}/{t.metric}" for t in blocking),
            blocking=blocking,
        )
    assignment: dict[str, str] = {}
    # rarest triples first so their few papers are still free to place
    for triple in sorted(by_triple, key=lambda t: (len(by_triple[t]), t)):
        docs = by_triple[triple]
        for side in ("train", "test"):
            if any(assignment.get(d) == side for d in docs):
                continue
            free = [d for d in docs if d not in assignment]
            if not free:
                raise SplitError(
                    f"cannot cover both sides for {triple.task}/{triple.dataset}/{triple.metric}",
                    blocking=[triple],
                )
            assignment[rng.choice(free)] = side
    unassigned = sorted(a.doc_id for a in annotations if a.doc_id not in assignment)
    rng.shuffle(unassigned)
    half = len(unassigned) // 2
    for d in unassigned[:half]:
        assignment[d] = "train"
    for d in unassigned[half:]:
        assignment[d] = "test"
    train = frozenset(d for d, s in assignment.items() if s == "train")
    test = frozenset(d for d, s in assignment.items() if s == "test")
    label_space = frozenset(by_triple)
    return CorpusSplit(train=train, test=test, label_space=label_space)


def _zero_shot_split(
    annotations: Sequence[GoldAnnotation], rng: random.Random, test_fraction: float
) -> CorpusSplit:
    # Triples co-annotated on one paper must land on the same side, so the
    # unit of assignment is a connected component of the co-occurrence graph.
    parent: dict[TdmTriple, TdmTriple] = {}

    def find(t: TdmTriple) -> TdmTriple:
        parent.setdefault(t, t)
        while parent[t] != t:
            parent[t] = parent[parent[t]]
            t = parent[t]
        return t

    def union(a: TdmTriple, b: TdmTriple) -> None:
        parent[find(a)] = find(b)

    labeled = [a for a in annotations if not a.unknown_flag]
    for ann in labeled:
        triples = sorted(ann.triples)
        for other in triples[1:]:
            union(triples[0], other)
    components: dict[TdmTriple, set[TdmTriple]] = defaultdict(set)
    for ann in labeled:
        for t in ann.triples:
            components[find(t)].add(t)
    comps = sorted(components.values(), key=lambda c: sorted(c)[0])
    if len(comps) < 2:
        blocking = sorted(comps[0]) if comps else []
        raise SplitError(
            "zero-shot split needs at least two disjoint triple groups",
            blocking=blocking,
        )
    rng.shuffle(comps)
    paper_count = {id(c): 0 for c in comps}
    comp_of_triple = {t: c for c in comps for t in c}
    for ann in labeled:
        comp = comp_of_triple[next(iter(ann.triples))]
        paper_count[id(comp)] += 1
    target = max(1, round(test_fraction * len(labeled)))
    test_triples: set[TdmTriple] = set()
    taken = 0
    for comp in comps:
        if taken >= target and test_triples:
            break
        test_triples |= comp
        taken += paper_count[id(comp)]
    train_triples = {t for c in comps for t in c} - test_triples
    if not train_triples:
        # keep at least one component on the training side
        spill = comp_of_triple[sorted(test_triples)[0]]
        test_triples -= spill
        train_triples |= spill
    train, test = set(), set()
    for ann in annotations:
        if ann.unknown_flag or ann.triples <= train_triples:
            train.add(ann.doc_id)
        elif ann.triples <= test_triples:
            test.add(ann.doc_id)
    return CorpusSplit(
        train=frozenset(train), test=frozenset(test),
        label_space=frozenset(train_triples),
    )


def make_split(
    annotations: Sequence[GoldAnnotation],
    mode: str,
    seed: int,
    test_fraction: float = 0.33,
) -> CorpusSplit:
    """Deterministically split a corpus.

    standard: every label-space triple occurs on both sides.
    zero_shot: no test paper carries any triple seen in training.
    """
    rng = random.Random(seed)
    if mode == "standard":
        return _standard_split(annotations, rng)
    if mode == "zero_shot":
        return _zero_shot_split(annotations, rng, test_fraction)
    raise ValueError(f"unknown split mode {mode!r}")


def load_split_lists(train_path, test_path,
                     annotations: Sequence[GoldAnnotation]) -> CorpusSplit:
    """Load a published split: one doc_id per line on each side. The label
    space is the set of triples annotated on training papers."""
    train = frozenset(_read_id_list(train_path))
    test = frozenset(_read_id_list(test_path))
    overlap = train & test
    if overlap:
        raise DataFormatError(f"doc_ids on both sides of the split: {sorted(overlap)[:5]}")
    by_id = {a.doc_id: a for a in annotations}
    label_space = frozenset(
        t for d in train if d in by_id for t in by_id[d].triples
    )
    return CorpusSplit(train=train, test=test, label_space=label_space)


def _read_id_list(path) -> list[str]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        token = line.split("\t")[0].strip()
        if token and not token.startswith("#"):
            out.append(token)
    return out
