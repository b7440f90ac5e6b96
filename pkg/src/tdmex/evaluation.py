"""Evaluation harness: macro/micro P/R/F1 for triple and triple+score
extraction, per-leaderboard precision@k, and the representation ablation
runner, with aligned-table and TSV rendering.

Macro averages per-paper metrics; micro pools TP/FP/FN across papers
before computing metrics. In the all-papers setting, Unknown acts as a
singleton pseudo-label on both sides.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Collection, Iterable, Mapping, Sequence

from .documents import RawDocument
from .errors import EvaluationError
from .inference import Leaderboard, predict_tdm
from .instances import match_score
from .representation import ReprConfig, build_doctaet
from .taxonomy import GoldAnnotation, TdmTriple

# pseudo-label standing in for "no triple predicted/annotated"
_UNKNOWN = ("<Unknown>",)

SETTINGS = ("a", "b", "c")


@dataclass(frozen=True)
class EvalReport:
    setting: str
    macro_p: float
    macro_r: float
    macro_f1: float
    micro_p: float
    micro_r: float
    micro_f1: float

    def as_row(self) -> tuple[float, ...]:
        return (self.macro_p, self.macro_r, self.macro_f1,
                self.micro_p, self.micro_r, self.micro_f1)


def _prf(tp: int, n_pred: int, n_gold: int) -> tuple[float, float, float]:
    if n_pred == 0 and n_gold == 0:
        return 100.0, 100.0, 100.0
    p = 100.0 * tp / n_pred if n_pred else 0.0
    r = 100.0 * tp / n_gold if n_gold else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


def _aggregate(setting: str, per_paper: list[tuple[int, int, int]]) -> EvalReport:
    if not per_paper:
        raise EvaluationError("no papers to evaluate")
    rows = [_prf(tp, np_, ng) for tp, np_, ng in per_paper]
    macro = tuple(sum(r[i] for r in rows) / len(rows) for i in range(3))
    tp = sum(c[0] for c in per_paper)
    n_pred = sum(c[1] for c in per_paper)
    n_gold = sum(c[2] for c in per_paper)
    micro_p, micro_r, micro_f1 = _prf(tp, n_pred, n_gold)
    return EvalReport(setting, *macro, micro_p, micro_r, micro_f1)


def _check_coverage(predictions: Mapping, gold_ids: set[str]) -> None:
    if set(predictions) != gold_ids:
        diff = sorted(set(predictions) ^ gold_ids)
        raise EvaluationError(f"predictions and gold cover different doc_ids: {diff[:5]}")


def evaluate_tdm(
    predictions: Mapping[str, Collection[TdmTriple]],
    gold: Sequence[GoldAnnotation],
    setting: str = "a",
) -> EvalReport:
    """Set comparison of predicted vs gold triples per paper.

    Setting "a" covers all papers with Unknown as a pseudo-label; setting
    "b" drops papers whose gold annotation is Unknown.
    """
    if setting not in ("a", "b"):
        raise EvaluationError(f"setting must be 'a' or 'b', got {setting!r}")
    gold_sets = {ann.doc_id: set(ann.triples) for ann in gold}
    _check_coverage(predictions, set(gold_sets))
    if setting == "b":
        gold_sets = {d: s for d, s in gold_sets.items() if s}
    per_paper = []
    for doc_id in sorted(gold_sets):
        pred: set = set(predictions[doc_id])
        gld: set = gold_sets[doc_id]
        if setting == "a":
            pred = pred or {_UNKNOWN}
            gld = gld or {_UNKNOWN}
        tp = len(pred & gld)
        per_paper.append((tp, len(pred), len(gld)))
    return _aggregate(setting, per_paper)


def evaluate_tdms(
    predictions: Mapping[str, Sequence],
    gold: Sequence[GoldAnnotation],
) -> EvalReport:
    """Triple-and-score comparison (papers with Unknown gold excluded): a
    prediction counts only when its triple matches and its score equals the
    annotated one. Gold entries without a score match on the triple alone.
    """
    gold_items = {
        ann.doc_id: list(ann.entries) for ann in gold if not ann.unknown_flag
    }
    all_ids = {ann.doc_id for ann in gold}
    # predictions may cover the full corpus or just the filtered papers
    if not (set(gold_items) <= set(predictions) <= all_ids):
        diff = sorted(set(predictions) ^ set(gold_items))
        raise EvaluationError(f"predictions and gold cover different doc_ids: {diff[:5]}")
    per_paper = []
    for doc_id in sorted(gold_items):
        preds = list(predictions[doc_id])
        pred_by_triple = {}
        for p in preds:
            pred_by_triple.setdefault(p.triple, p)
        tp = 0
        for triple, gold_score in gold_items[doc_id]:
            p = pred_by_triple.get(triple)
            if p is None:
                continue
            if gold_score is None:
                tp += 1
            elif p.score is not None and match_score(
                gold_score, p.score, getattr(p, "percent_flag", False)
            ):
                tp += 1
        per_paper.append((tp, len(preds), len(gold_items[doc_id])))
    return _aggregate("c", per_paper)


# ---------------------------------------------------------------------------
# Precision at k
# ---------------------------------------------------------------------------

DEFAULT_KS = (1, 3, 5, 10)


def precision_at_k(
    leaderboard: Leaderboard, relevant: set[str], ks: Sequence[int] = DEFAULT_KS
) -> dict[int, float]:
    """P@k over the ranked rows; rankings shorter than k keep k as the
    denominator (missing rows count as wrong)."""
    ranked = [doc_id for doc_id, _, _ in leaderboard.rows]
    return {k: sum(1 for d in ranked[:k] if d in relevant) / k for k in ks}


@dataclass(frozen=True)
class PkReport:
    ks: tuple[int, ...]
    rows: tuple[tuple[TdmTriple, tuple[float, ...]], ...]
    macro: tuple[float, ...]


def pk_report(
    entries: Sequence[tuple[Leaderboard, set[str]]], ks: Sequence[int] = DEFAULT_KS
) -> PkReport:
    """Per-leaderboard P@k rows plus their unweighted macro average."""
    ks = tuple(ks)
    rows = []
    for leaderboard, relevant in entries:
        pk = precision_at_k(leaderboard, relevant, ks)
        rows.append((leaderboard.triple, tuple(pk[k] for k in ks)))
    if not rows:
        raise EvaluationError("no leaderboards to evaluate")
    macro = tuple(sum(r[1][i] for r in rows) / len(rows) for i in range(len(ks)))
    return PkReport(ks=ks, rows=tuple(rows), macro=macro)


# ---------------------------------------------------------------------------
# Ablation over document representation configurations
# ---------------------------------------------------------------------------

_ABLATION_ORDER = {
    (False, False): 0,  # Title+Abstract
    (True, False): 1,   # + ExpSetup
    (False, True): 2,   # + TableInfo
    (True, True): 3,    # + ExpSetup + TableInfo
}


def ablation_label(config: ReprConfig) -> str:
    label = "Title+Abstract"
    if config.include_exp_setup:
        label += " + ExpSetup"
    if config.include_table_info:
        label += " + TableInfo"
    return label


def run_ablation(
    docs: Mapping[str, RawDocument],
    gold: Sequence[GoldAnnotation],
    configs: Sequence[ReprConfig],
    scorers: Sequence,
    candidates: Iterable[TdmTriple],
    threshold: float = 0.5,
) -> list[tuple[str, EvalReport]]:
    """Evaluate one (config, matching trained scorer) pair per row, rows in
    the fixed Title+Abstract / +ExpSetup / +TableInfo / +both order."""
    if len(configs) != len(scorers):
        raise EvaluationError(
            f"{len(configs)} configs but {len(scorers)} scorers; need one scorer per config"
        )
    candidates = set(candidates)
    paired = sorted(
        zip(configs, scorers),
        key=lambda cs: _ABLATION_ORDER[(cs[0].include_exp_setup, cs[0].include_table_info)],
    )
    results = []
    for config, scorer in paired:
        predictions = {}
        for ann in gold:
            doc = docs[ann.doc_id]
            doctaet = build_doctaet(doc, config)
            preds = predict_tdm(doctaet, candidates, scorer, threshold)
            predictions[ann.doc_id] = {p.triple for p in preds}
        results.append((ablation_label(config), evaluate_tdm(predictions, gold, "a")))
    return results


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

_COLUMNS = ("Macro P", "Macro R", "Macro F1", "Micro P", "Micro R", "Micro F1")


def fmt1(value: float) -> str:
    """Half-up rounding to one decimal, applied only at rendering."""
    return str(Decimal(str(value)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def render_eval_reports(rows: Sequence[tuple[str, EvalReport]]) -> str:
    width = max([len(name) for name, _ in rows] + [4])
    lines = [f"{'':{width}}  " + "  ".join(f"{c:>8}" for c in _COLUMNS)]
    for name, report in rows:
        cells = "  ".join(f"{fmt1(v):>8}" for v in report.as_row())
        lines.append(f"{name:{width}}  {cells}")
    return "\n".join(lines)


def eval_reports_to_tsv(rows: Sequence[tuple[str, EvalReport]]) -> str:
    lines = ["name\tsetting\t" + "\t".join(c.lower().replace(" ", "_") for c in _COLUMNS)]
    for name, report in rows:
        lines.append(
            name + "\t" + report.setting + "\t"
            + "\t".join(fmt1(v) for v in report.as_row())
        )
    return "\n".join(lines) + "\n"


def render_pk_report(report: PkReport) -> str:
    names = [f"{t.task}:{t.dataset}:{t.metric}" for t, _ in report.rows]
    width = max(len(n) for n in names + ["Macro-average"])
    header = f"{'':{width}}  " + "  ".join(f"P@{k:<4}" for k in report.ks)
    lines = [header]
    for name, (_, values) in zip(names, report.rows):
        lines.append(f"{name:{width}}  " + "  ".join(f"{v:<6.2f}" for v in values))
    lines.append(f"{'Macro-average':{width}}  " + "  ".join(f"{v:<6.2f}" for v in report.macro))
    return "\n".join(lines)


def pk_report_to_tsv(report: PkReport) -> str:
    lines = ["task\tdataset\tmetric\t" + "\t".join(f"p@{k}" for k in report.ks)]
    for triple, values in report.rows:
        lines.append(
            f"{triple.task}\t{triple.dataset}\t{triple.metric}\t"
            + "\t".join(f"{v:.4f}" for v in values)
        )
    lines.append("macro\t-\t-\t" + "\t".join(f"{v:.4f}" for v in report.macro))
    return "\n".join(lines) + "\n"
