"""Comparison baselines: a deterministic string-matching tagger and a
tf-idf multi-label classifier with a separate binary score picker.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import joblib
import numpy as np
from sklearn.feature_extraction.text import TfidfVectorizer
from sklearn.linear_model import LogisticRegression
from sklearn.multiclass import OneVsRestClassifier

from .documents import RawDocument
from .errors import DataFormatError, TrainingError
from .inference import TdmsTuple
from .instances import match_score
from .representation import DocTAET, ScoreContext
from .taxonomy import AliasTable, GoldAnnotation, TdmTriple

HIGHER_BETTER = "higher_better"
LOWER_BETTER = "lower_better"

_DEFAULT_LOWER = ("perplexity", "error rate", "wer")


class MetricPolarity:
    """Whether a metric's best value is its max or its min. Total over any
    metric name: unlisted metrics are higher-is-better."""

    def __init__(self, lower_better: Iterable[str] = _DEFAULT_LOWER):
        self._lower = {m.casefold() for m in lower_better}

    def is_lower_better(self, metric: str) -> bool:
        return metric.casefold() in self._lower

    def direction(self, metric: str) -> str:
        return LOWER_BETTER if self.is_lower_better(metric) else HIGHER_BETTER

    @classmethod
    def load(cls, path) -> "MetricPolarity":
        lower = set(_DEFAULT_LOWER)
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or parts[1] not in (HIGHER_BETTER, LOWER_BETTER):
                raise DataFormatError(f"{path}:{lineno}: expected 'metric<TAB>polarity'")
            if parts[1] == LOWER_BETTER:
                lower.add(parts[0].casefold())
            else:
                lower.discard(parts[0].casefold())
        return cls(lower)

    @classmethod
    def bundled(cls) -> "MetricPolarity":
        ref = resources.files("tdmex").joinpath("data/polarity.tsv")
        with resources.as_file(ref) as path:
            return cls.load(path)


def _norm_phrase(text: str, aliases: AliasTable | None) -> str:
    toks = text.split()
    if aliases is not None:
        toks = " ".join(aliases.normalize_token(t) for t in toks).split()
    return " ".join(t.casefold() for t in toks)


def _contains(haystack_norm: str, needle_norm: str) -> bool:
    return bool(needle_norm) and f" {needle_norm} " in f" {haystack_norm} "


def _intro_section(doc: RawDocument):
    for section in doc.sections:
        if "introduction" in section.heading.casefold():
            return section
    return doc.sections[0] if doc.sections else None


def string_match_predict(
    doc: RawDocument,
    taxonomy: Iterable[TdmTriple],
    polarity: MetricPolarity,
    aliases: AliasTable | None = None,
) -> list[TdmsTuple]:
    """Tag a paper by exact string evidence: the task name must appear in
    title/abstract/introduction, and a bolded score qualifies when its
    caption and column headers carry the dataset and metric names (either
    way around). Among qualifying scores the metric's polarity picks the
    winner. An empty result means Unknown."""
    intro = _intro_section(doc)
    head_text = _norm_phrase(
        " ".join((doc.title, doc.abstract, intro.body if intro else "")), aliases
    )

    bold_cells = []
    for table in doc.tables:
        if table.no_bold_info:
            continue
        for nc in table.numeric_cells:
            if nc.cell.is_bold:
                bold_cells.append((table, nc))

    results = []
    for triple in sorted(set(taxonomy)):
        task_n = _norm_phrase(triple.task, aliases)
        dataset_n = _norm_phrase(triple.dataset, aliases)
        metric_n = _norm_phrase(triple.metric, aliases)
        if not _contains(head_text, task_n):
            continue
        matches = []
        for table, nc in bold_cells:
            caption_n = _norm_phrase(table.caption, aliases)
            headers_n = [_norm_phrase(h, aliases) for h in nc.column_headers]
            ds_in_cap = _contains(caption_n, dataset_n)
            met_in_cap = _contains(caption_n, metric_n)
            met_in_hdr = any(_contains(h, metric_n) for h in headers_n)
            ds_in_hdr = any(_contains(h, dataset_n) for h in headers_n)
            if (ds_in_cap and met_in_hdr) or (met_in_cap and ds_in_hdr):
                matches.append((table, nc))
        if not matches:
            continue
        lower = polarity.is_lower_better(triple.metric)
        best_table, best_cell = matches[0]
        for table, nc in matches[1:]:
            if (nc.value < best_cell.value) if lower else (nc.value > best_cell.value):
                best_table, best_cell = table, nc
        results.append(
            TdmsTuple(
                doc_id=doc.doc_id,
                triple=triple,
                tdm_confidence=1.0,
                score=best_cell.value,
                score_confidence=None,
                provenance=(best_table.table_id, best_cell.cell.row, best_cell.cell.col),
                percent_flag=best_cell.percent_flag,
            )
        )
    return results


# ---------------------------------------------------------------------------
# Multi-label classifier baseline
# ---------------------------------------------------------------------------

@dataclass
class MlcModel:
    vectorizer: TfidfVectorizer
    classifier: OneVsRestClassifier
    classes: list[TdmTriple]
    picker_vectorizer: TfidfVectorizer | None = None
    picker: LogisticRegression | None = None
    threshold: float = 0.5

    def save(self, path) -> None:
        joblib.dump(self, path)

    @classmethod
    def load(cls, path) -> "MlcModel":
        model = joblib.load(path)
        if not isinstance(model, cls):
            raise DataFormatError(f"{path} does not hold an MlcModel")
        return model


def _context_text(value) -> str:
    return value.rendered if isinstance(value, DocTAET) else str(value)


def mlc_train(
    doctaets: Mapping[str, DocTAET | str],
    annotations: Sequence[GoldAnnotation],
    score_contexts: Mapping[str, Sequence[ScoreContext]] | None = None,
    threshold: float = 0.5,
    seed: int = 0,
    max_iter: int = 3000,
) -> MlcModel:
    """Fit the one-vs-rest tf-idf classifier over triples (Unknown papers
    are excluded) and the binary picker that ranks a paper's score contexts
    by how likely each holds the annotated score."""
    labeled = [a for a in sorted(annotations, key=lambda a: a.doc_id) if not a.unknown_flag]
    classes = sorted({t for a in labeled for t in a.triples})
    if len(classes) < 2:
        raise TrainingError("need at least 2 distinct triples with a labeled paper each")
    for cls_triple in classes:
        if all(cls_triple in a.triples for a in labeled):
            raise TrainingError(
                f"triple {cls_triple.task}/{cls_triple.dataset}/{cls_triple.metric} "
                "is positive on every paper; one-vs-rest training is degenerate"
            )

    texts = []
    Y = np.zeros((len(labeled), len(classes)))
    index = {c: i for i, c in enumerate(classes)}
    for row, ann in enumerate(labeled):
        if ann.doc_id not in doctaets:
            raise DataFormatError(f"no document representation for {ann.doc_id}")
        texts.append(_context_text(doctaets[ann.doc_id]))
        for t in ann.triples:
            Y[row, index[t]] = 1.0

    vectorizer = TfidfVectorizer()
    X = vectorizer.fit_transform(texts)
    classifier = OneVsRestClassifier(
        LogisticRegression(solver="saga", max_iter=max_iter, random_state=seed)
    )
    classifier.fit(X, Y)

    picker_vectorizer = None
    picker = None
    if score_contexts:
        sc_texts, sc_labels = [], []
        for ann in labeled:
            scored = [s for _, s in ann.entries if s is not None]
            if not scored:
                continue
            for sc in score_contexts.get(ann.doc_id, ()):
                sc_texts.append(sc.rendered)
                sc_labels.append(
                    1 if any(match_score(s, sc.value, sc.percent_flag) for s in scored) else 0
                )
        if sc_texts and 0 < sum(sc_labels) < len(sc_labels):
            picker_vectorizer = TfidfVectorizer()
            Xp = picker_vectorizer.fit_transform(sc_texts)
            picker = LogisticRegression(solver="saga", max_iter=max_iter, random_state=seed)
            picker.fit(Xp, np.array(sc_labels))

    return MlcModel(
        vectorizer=vectorizer,
        classifier=classifier,
        classes=classes,
        picker_vectorizer=picker_vectorizer,
        picker=picker,
        threshold=threshold,
    )


def mlc_predict(
    doc_id: str,
    doctaet: DocTAET | str,
    scs: Sequence[ScoreContext],
    model: MlcModel,
) -> list[TdmsTuple]:
    """Predict triples with per-class probability above the threshold (the
    single most likely triple when none clears it) and attach the picker's
    top score context to each."""
    X = model.vectorizer.transform([_context_text(doctaet)])
    probs = model.classifier.predict_proba(X)[0]
    chosen = [i for i, p in enumerate(probs) if p > model.threshold]
    if not chosen:
        chosen = [int(np.argmax(probs))]

    score = None
    score_conf = None
    provenance = None
    percent = False
    if scs:
        if model.picker is not None and model.picker_vectorizer is not None:
            Xp = model.picker_vectorizer.transform([sc.rendered for sc in scs])
            pick_probs = model.picker.predict_proba(Xp)[:, 1]
            best = int(np.argmax(pick_probs))
            score_conf = float(pick_probs[best])
        else:
            best = 0
        sc = scs[best]
        score = sc.value
        provenance = (sc.table_id, sc.row, sc.col)
        percent = sc.percent_flag
    return [
        TdmsTuple(
            doc_id=doc_id,
            triple=model.classes[i],
            tdm_confidence=float(probs[i]),
            score=score,
            score_confidence=score_conf,
            provenance=provenance,
            percent_flag=percent,
        )
        for i in chosen
    ]
