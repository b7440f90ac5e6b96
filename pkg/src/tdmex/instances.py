"""Generate positive/negative entailment training instances.

Document-level instances pair a document representation with every triple
in the label space; score-level instances pair each score context with
dataset/metric hypotheses, positive when the context's value equals the
annotated score.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DataFormatError, LabelSpaceError
from .representation import DocTAET, ScoreContext, serialize_hypothesis
from .taxonomy import DmPair, GoldAnnotation, TdmTriple
from .textutil import sanitize_field

ORIGIN_TDM = "tdm"
ORIGIN_DM = "dm"


@dataclass(frozen=True)
class EntailmentInstance:
    context: str
    hypothesis: str
    label: bool
    doc_id: str
    origin: str


def _context_text(value) -> str:
    return value.rendered if isinstance(value, (DocTAET, ScoreContext)) else str(value)


def gen_tdm_instances(
    doctaets: Mapping[str, DocTAET | str],
    annotations: Sequence[GoldAnnotation],
    label_space: Iterable[TdmTriple],
    include_unknown: bool = True,
) -> list[EntailmentInstance]:
    """Per paper: one instance per label-space triple, positive iff
    annotated. Unknown papers contribute all-negative instances (skippable
    via include_unknown)."""
    space = sorted(set(label_space), key=serialize_hypothesis)
    if not space:
        raise LabelSpaceError("label space is empty")
    out: list[EntailmentInstance] = []
    for ann in sorted(annotations, key=lambda a: a.doc_id):
        if ann.unknown_flag and not include_unknown:
            continue
        extra = ann.triples - set(space)
        if extra:
            t = sorted(extra)[0]
            raise LabelSpaceError(
                f"{ann.doc_id}: annotated triple outside label space: "
                f"{t.task}/{t.dataset}/{t.metric}"
            )
        if ann.doc_id not in doctaets:
            raise DataFormatError(f"no document representation for {ann.doc_id}")
        context = _context_text(doctaets[ann.doc_id])
        positives = ann.triples
        for triple in space:
            out.append(
                EntailmentInstance(
                    context=context,
                    hypothesis=serialize_hypothesis(triple),
                    label=triple in positives,
                    doc_id=ann.doc_id,
                    origin=ORIGIN_TDM,
                )
            )
    return out


def match_score(annotated, cell_value, percent_flag: bool = False) -> bool:
    """Numeric equality with trailing zeros ignored; a percent-flagged cell
    also matches an annotated fraction scaled by 100."""
    a = annotated if isinstance(annotated, Decimal) else Decimal(str(annotated))
    c = cell_value if isinstance(cell_value, Decimal) else Decimal(str(cell_value))
    if a == c:
        return True
    if percent_flag and a <= 1:
        return a * 100 == c
    return False


def gen_dm_instances(
    score_contexts: Mapping[str, Sequence[ScoreContext]],
    annotations: Sequence[GoldAnnotation],
    dm_space: Iterable[DmPair],
    neg_policy: str = "all",
    sample_k: int | None = None,
    seed: int = 0,
) -> list[EntailmentInstance]:
    """Per scored annotation: a score context matching the annotated value
    yields one positive against the annotation's dataset/metric pair plus
    negatives against every other pair; non-matching contexts yield
    negatives per neg_policy ("all" pairs, or "sampled" draws of sample_k).
    """
    space = sorted(set(dm_space), key=serialize_hypothesis)
    if not space:
        raise LabelSpaceError("dataset/metric space is empty")
    if neg_policy not in ("all", "sampled"):
        raise ValueError(f"unknown neg_policy {neg_policy!r}")
    if neg_policy == "sampled":
        if not sample_k or sample_k < 1:
            raise ValueError("sampled neg_policy requires sample_k >= 1")
        sample_k = min(sample_k, len(space))
    rng = random.Random(seed)
    out: list[EntailmentInstance] = []
    for ann in sorted(annotations, key=lambda a: a.doc_id):
        contexts = score_contexts.get(ann.doc_id, ())
        for triple, score in sorted(ann.entries, key=lambda e: serialize_hypothesis(e[0])):
            if score is None:
                continue
            pair = triple.dm()
            if pair not in space:
                raise LabelSpaceError(
                    f"{ann.doc_id}: pair outside space: {pair.dataset}/{pair.metric}"
                )
            for sc in contexts:
                if match_score(score, sc.value, sc.percent_flag):
                    for candidate in space:
                        out.append(
                            EntailmentInstance(
                                context=sc.rendered,
                                hypothesis=serialize_hypothesis(candidate),
                                label=candidate == pair,
                                doc_id=ann.doc_id,
                                origin=ORIGIN_DM,
                            )
                        )
                else:
                    negatives = space if neg_policy == "all" else rng.sample(space, sample_k)
                    for candidate in negatives:
                        out.append(
                            EntailmentInstance(
                                context=sc.rendered,
                                hypothesis=serialize_hypothesis(candidate),
                                label=False,
                                doc_id=ann.doc_id,
                                origin=ORIGIN_DM,
                            )
                        )
    return out


# ---------------------------------------------------------------------------
# Instance TSV: label, origin, doc_id, hypothesis, context
# ---------------------------------------------------------------------------

def write_instances(path, instances: Iterable[EntailmentInstance]) -> None:
    lines = []
    for inst in instances:
        lines.append(
            "\t".join(
                (
                    "1" if inst.label else "0",
                    inst.origin,
                    sanitize_field(inst.doc_id),
                    sanitize_field(inst.hypothesis),
                    sanitize_field(inst.context),
                )
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_instances(path) -> list[EntailmentInstance]:
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 5 or parts[0] not in ("0", "1"):
            raise DataFormatError(f"{path}:{lineno}: bad instance line")
        label, origin, doc_id, hypothesis, context = parts
        out.append(
            EntailmentInstance(
                context=context,
                hypothesis=hypothesis,
                label=label == "1",
                doc_id=doc_id,
                origin=origin,
            )
        )
    return out
