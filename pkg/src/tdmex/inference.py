"""Two-stage inference: predict triples for a paper from its document
representation, then attach the best-scoring numeric value per predicted
triple; assemble ranked leaderboards across a corpus.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DataFormatError
from .representation import DocTAET, ScoreContext, serialize_hypothesis
from .scorer import ScoreRequest, score as run_scorer
from .taxonomy import ABSENT, TdmTriple

DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class TdmPrediction:
    doc_id: str
    triple: TdmTriple
    confidence: float


@dataclass(frozen=True)
class TdmsTuple:
    doc_id: str
    triple: TdmTriple
    tdm_confidence: float
    score: Decimal | None = None
    score_confidence: float | None = None
    provenance: tuple[str, int, int] | None = None
    percent_flag: bool = False


@dataclass(frozen=True)
class Leaderboard:
    triple: TdmTriple
    rows: tuple[tuple[str, float, Decimal | None], ...]


def predict_tdm(
    doctaet: DocTAET,
    candidates: Iterable[TdmTriple],
    scorer,
    threshold: float = DEFAULT_THRESHOLD,
) -> list[TdmPrediction]:
    """Score every candidate triple against the document representation and
    keep those above the decision threshold. An empty result means the
    caller should tag the paper Unknown."""
    cands = sorted(set(candidates), key=serialize_hypothesis)
    if not cands:
        raise ValueError("candidate set must be non-empty")
    request = ScoreRequest.of(
        (doctaet.rendered, serialize_hypothesis(t)) for t in cands
    )
    probs = run_scorer(scorer, request).probabilities
    predictions = [
        TdmPrediction(doctaet.doc_id, triple, prob)
        for triple, prob in zip(cands, probs)
        if prob > threshold
    ]
    predictions.sort(key=lambda p: (-p.confidence, serialize_hypothesis(p.triple)))
    return predictions


def attach_scores(
    doc_id: str,
    predictions: Sequence[TdmPrediction],
    score_contexts: Sequence[ScoreContext],
    scorer,
) -> list[TdmsTuple]:
    """For each predicted triple, pick the value whose score context links
    most confidently to the triple's dataset/metric pair. Ties go to the
    context earliest in document order; no contexts means no score."""
    out = []
    for pred in predictions:
        if not score_contexts:
            out.append(TdmsTuple(doc_id, pred.triple, pred.confidence))
            continue
        hypothesis = serialize_hypothesis(pred.triple.dm())
        request = ScoreRequest.of((sc.rendered, hypothesis) for sc in score_contexts)
        probs = run_scorer(scorer, request).probabilities
        best = max(range(len(probs)), key=lambda i: (probs[i], -i))
        sc = score_contexts[best]
        out.append(
            TdmsTuple(
                doc_id=doc_id,
                triple=pred.triple,
                tdm_confidence=pred.confidence,
                score=sc.value,
                score_confidence=probs[best],
                provenance=(sc.table_id, sc.row, sc.col),
                percent_flag=sc.percent_flag,
            )
        )
    return out


def build_leaderboard(
    all_predictions: Iterable[TdmsTuple], triple: TdmTriple, k: int
) -> Leaderboard:
    """Top-k papers for one triple, ranked by triple confidence (ties by
    doc_id ascending)."""
    matching = [t for t in all_predictions if t.triple == triple]
    matching.sort(key=lambda t: (-t.tdm_confidence, t.doc_id))
    rows = tuple((t.doc_id, t.tdm_confidence, t.score) for t in matching[:k])
    return Leaderboard(triple=triple, rows=rows)


# ---------------------------------------------------------------------------
# Prediction TSV: doc_id, task, dataset, metric, score, tdm_conf, score_conf
# (Unknown papers carry a literal `Unknown` task and `-` elsewhere.)
# ---------------------------------------------------------------------------

def write_predictions(path, tuples_by_doc: dict[str, list[TdmsTuple]]) -> None:
    lines = []
    for doc_id in sorted(tuples_by_doc):
        rows = tuples_by_doc[doc_id]
        if not rows:
            lines.append(f"{doc_id}\tUnknown\t{ABSENT}\t{ABSENT}\t{ABSENT}\t{ABSENT}\t{ABSENT}")
            continue
        for t in rows:
            score_text = str(t.score) if t.score is not None else ABSENT
            sconf = f"{t.score_confidence:.6f}" if t.score_confidence is not None else ABSENT
            lines.append(
                "\t".join(
                    (
                        doc_id,
                        t.triple.task,
                        t.triple.dataset,
                        t.triple.metric,
                        score_text,
                        f"{t.tdm_confidence:.6f}",
                        sconf,
                    )
                )
            )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_predictions(path) -> dict[str, list[TdmsTuple]]:
    out: dict[str, list[TdmsTuple]] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 7:
            raise DataFormatError(f"{path}:{lineno}: expected 7 tab-separated fields")
        doc_id, task, dataset, metric, score_text, conf_text, sconf_text = parts
        bucket = out.setdefault(doc_id, [])
        if task == "Unknown":
            continue
        bucket.append(
            TdmsTuple(
                doc_id=doc_id,
                triple=TdmTriple(task, dataset, metric),
                tdm_confidence=float(conf_text) if conf_text != ABSENT else 0.0,
                score=Decimal(score_text) if score_text != ABSENT else None,
                score_confidence=float(sconf_text) if sconf_text != ABSENT else None,
            )
        )
    return out


def write_leaderboard(path, leaderboard: Leaderboard) -> None:
    t = leaderboard.triple
    lines = [f"# {t.task}\t{t.dataset}\t{t.metric}"]
    for doc_id, confidence, value in leaderboard.rows:
        score_text = str(value) if value is not None else ABSENT
        lines.append(f"{doc_id}\t{confidence:.6f}\t{score_text}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
