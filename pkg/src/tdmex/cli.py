"""Command-line pipeline: ingest -> build-repr -> gen-instances -> train ->
predict -> evaluate / leaderboard / split.

Every run writes a run_manifest.json next to its outputs; all randomness
flows through the --seed flag, so reruns with an identical manifest produce
byte-identical outputs on the native path.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .baselines import MetricPolarity, MlcModel, mlc_predict, mlc_train, string_match_predict
from .documents import document_from_json, document_to_json, parse_plain, parse_tei
from .errors import DataFormatError, TdmexError
from .evaluation import (
    eval_reports_to_tsv,
    evaluate_tdm,
    evaluate_tdms,
    pk_report,
    pk_report_to_tsv,
    render_eval_reports,
    render_pk_report,
)
from .inference import (
    attach_scores,
    build_leaderboard,
    predict_tdm,
    read_predictions,
    write_leaderboard,
    write_predictions,
)
from .instances import gen_dm_instances, gen_tdm_instances, read_instances, write_instances
from .representation import (
    build_doctaet,
    build_score_contexts,
    doctaet_from_json,
    doctaet_to_json,
    load_repr_config,
    sc_from_json,
    sc_to_json,
)
from .scorer import LexicalModel, LexicalTrainParams, RemoteScorer, lexical_train
from .tables import extract_tables
from .taxonomy import (
    AliasTable,
    TdmTriple,
    annotated_label_space,
    load_annotations,
    load_label_space,
    make_split,
    save_label_space,
)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_manifest(out_dir: Path, command: str, args: argparse.Namespace,
                    started: str) -> None:
    skip = {"func"}
    manifest = {
        "command": command,
        "args": {k: str(v) if isinstance(v, Path) else v
                 for k, v in vars(args).items() if k not in skip},
        "seed": getattr(args, "seed", None),
        "scorer": getattr(args, "scorer", None),
        "started_at": started,
        "finished_at": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "version": __version__,
    }
    _atomic_write(out_dir / "run_manifest.json", json.dumps(manifest, indent=1, sort_keys=True) + "\n")


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def _load_aliases(args) -> AliasTable:
    return AliasTable.load(args.aliases) if getattr(args, "aliases", None) else AliasTable.bundled()


# ---------------------------------------------------------------------------
# ingest
# ---------------------------------------------------------------------------

def _ingest_one(path: Path, out_dir: Path) -> str:
    name = path.name
    if name.endswith(".tei.xml"):
        doc_id = name[: -len(".tei.xml")]
    else:
        doc_id = path.stem
    if path.suffix == ".txt":
        doc = parse_plain(path.read_text(encoding="utf-8"), doc_id)
    else:
        data = path.read_bytes()
        doc = parse_tei(data, doc_id)
        doc.tables = extract_tables(data)
    payload = json.dumps(document_to_json(doc, include_tables=True),
                         indent=1, sort_keys=True) + "\n"
    _atomic_write(out_dir / f"{doc.doc_id}.json", payload)
    return doc.doc_id


def cmd_ingest(args) -> int:
    started = _now()
    in_dir, out_dir = Path(args.in_dir), Path(args.out_dir)
    files = sorted(
        p for p in in_dir.iterdir()
        if p.suffix in (".xml", ".tei", ".txt") or p.name.endswith(".tei.xml")
    )
    if not files:
        raise DataFormatError(f"no ingestible files (*.xml, *.tei, *.txt) in {in_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            ids = list(pool.map(lambda p: _ingest_one(p, out_dir), files))
    else:
        ids = [_ingest_one(p, out_dir) for p in files]
    _write_manifest(out_dir, "ingest", args, started)
    print(f"ingested {len(ids)} documents into {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# build-repr
# ---------------------------------------------------------------------------

def _load_docs(docs_dir: Path) -> dict:
    docs = {}
    for path in sorted(Path(docs_dir).glob("*.json")):
        if path.name == "run_manifest.json":
            continue
        doc = document_from_json(json.loads(path.read_text(encoding="utf-8")))
        docs[doc.doc_id] = doc
    if not docs:
        raise DataFormatError(f"no document JSON files in {docs_dir}")
    return docs


def cmd_build_repr(args) -> int:
    started = _now()
    config = load_repr_config(args.config)
    docs = _load_docs(Path(args.docs))
    out_dir = Path(args.out)
    doctaet_lines, sc_lines = [], []
    for doc_id in sorted(docs):
        doc = docs[doc_id]
        doctaet_lines.append(json.dumps(doctaet_to_json(build_doctaet(doc, config)), sort_keys=True))
        for sc in build_score_contexts(doc, config):
            sc_lines.append(json.dumps(sc_to_json(sc), sort_keys=True))
    _atomic_write(out_dir / "doctaets.jsonl", "\n".join(doctaet_lines) + "\n")
    _atomic_write(out_dir / "score_contexts.jsonl",
                  ("\n".join(sc_lines) + "\n") if sc_lines else "")
    _write_manifest(out_dir, "build-repr", args, started)
    print(f"built {len(doctaet_lines)} document representations, {len(sc_lines)} score contexts")
    return 0


def _load_repr(repr_dir: Path):
    doctaets = {}
    for line in (repr_dir / "doctaets.jsonl").read_text(encoding="utf-8").splitlines():
        if line.strip():
            d = doctaet_from_json(json.loads(line))
            doctaets[d.doc_id] = d
    scs: dict[str, list] = {}
    sc_path = repr_dir / "score_contexts.jsonl"
    if sc_path.exists():
        for line in sc_path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                sc = sc_from_json(json.loads(line))
                scs.setdefault(sc.doc_id, []).append(sc)
    return doctaets, scs


# ---------------------------------------------------------------------------
# gen-instances
# ---------------------------------------------------------------------------

def cmd_gen_instances(args) -> int:
    started = _now()
    doctaets, scs = _load_repr(Path(args.repr))
    aliases = _load_aliases(args)
    annotations = load_annotations(args.gold, aliases)
    if args.labels:
        space = load_label_space(args.labels, aliases)
    else:
        space = annotated_label_space(annotations)
    out = Path(args.out)
    if args.mode == "tdm":
        instances = gen_tdm_instances(
            doctaets, annotations, space, include_unknown=not args.skip_unknown
        )
    else:
        instances = gen_dm_instances(
            scs, annotations, {t.dm() for t in space},
            neg_policy=args.neg_policy, sample_k=args.sample_k, seed=args.seed,
        )
    write_instances(out, instances)
    _write_manifest(out.parent, "gen-instances", args, started)
    print(f"wrote {len(instances)} {args.mode} instances to {out}")
    return 0


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

def cmd_train(args) -> int:
    started = _now()
    out = Path(args.out)
    aliases = _load_aliases(args)
    if args.scorer == "lexical":
        if not args.instances:
            raise DataFormatError("--instances is required for the lexical scorer")
        instances = read_instances(args.instances)
        params = LexicalTrainParams(seed=args.seed)
        model = lexical_train(instances, params, aliases)
        model.save(out)
        print(f"lexical model saved to {out} (final loss {model.final_loss:.4f})")
    else:
        if not args.repr or not args.gold:
            raise DataFormatError("--repr and --gold are required for the mlc scorer")
        doctaets, scs = _load_repr(Path(args.repr))
        annotations = load_annotations(args.gold, aliases)
        model = mlc_train(doctaets, annotations, scs, seed=args.seed)
        model.save(out)
        print(f"mlc model saved to {out}")
    _write_manifest(out.parent, "train", args, started)
    return 0


# ---------------------------------------------------------------------------
# predict
# ---------------------------------------------------------------------------

def _candidate_space(args, aliases) -> set[TdmTriple]:
    if args.labels:
        return load_label_space(args.labels, aliases)
    if args.gold:
        return annotated_label_space(load_annotations(args.gold, aliases))
    raise DataFormatError("candidate triples needed: pass --labels or --gold")


def cmd_predict(args) -> int:
    started = _now()
    aliases = _load_aliases(args)
    out = Path(args.out)

    if args.scorer == "sm":
        docs = _load_docs(Path(args.docs))
        polarity = MetricPolarity.load(args.polarity) if args.polarity else MetricPolarity.bundled()
        space = _candidate_space(args, aliases)
        results = {
            doc_id: string_match_predict(docs[doc_id], space, polarity, aliases)
            for doc_id in sorted(docs)
        }
        write_predictions(out, results)
        _write_manifest(out.parent, "predict", args, started)
        print(f"wrote predictions for {len(results)} documents to {out}")
        return 0

    doctaets, scs = _load_repr(Path(args.repr))

    if args.scorer == "mlc":
        model = MlcModel.load(args.model)
        results = {
            doc_id: mlc_predict(doc_id, doctaets[doc_id], scs.get(doc_id, []), model)
            for doc_id in sorted(doctaets)
        }
        write_predictions(out, results)
        _write_manifest(out.parent, "predict", args, started)
        print(f"wrote predictions for {len(results)} documents to {out}")
        return 0

    space = _candidate_space(args, aliases)
    if args.scorer == "lexical":
        if not args.model:
            raise DataFormatError("--model is required for the lexical scorer")
        tdm_scorer = LexicalModel.load(args.model)
        dm_scorer = LexicalModel.load(args.dm_model) if args.dm_model else tdm_scorer
    else:
        if not args.endpoint:
            raise DataFormatError("--endpoint is required for the remote scorer")
        tdm_scorer = RemoteScorer(args.endpoint, model_kind="tdm")
        dm_scorer = RemoteScorer(args.endpoint, model_kind="dm")

    def _predict_one(doc_id: str):
        preds = predict_tdm(doctaets[doc_id], space, tdm_scorer, args.threshold)
        return doc_id, attach_scores(doc_id, preds, scs.get(doc_id, []), dm_scorer)

    doc_ids = sorted(doctaets)
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = dict(pool.map(_predict_one, doc_ids))
    else:
        results = dict(_predict_one(d) for d in doc_ids)
    write_predictions(out, results)
    _write_manifest(out.parent, "predict", args, started)
    unknown = sum(1 for rows in results.values() if not rows)
    print(f"wrote predictions for {len(results)} documents to {out} ({unknown} Unknown)")
    return 0


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

def cmd_evaluate(args) -> int:
    started = _now()
    aliases = _load_aliases(args)
    annotations = load_annotations(args.gold, aliases)
    predictions = read_predictions(args.pred)

    if args.pk:
        ks = tuple(int(k) for k in args.ks.split(","))
        flat = [t for rows in predictions.values() for t in rows]
        triples = sorted({t.triple for t in flat})
        if not triples:
            raise DataFormatError("prediction file contains no predicted triples")
        entries = []
        for triple in triples:
            lb = build_leaderboard(flat, triple, max(ks))
            relevant = {a.doc_id for a in annotations if triple in a.triples}
            entries.append((lb, relevant))
        report = pk_report(entries, ks)
        rendered = render_pk_report(report)
        print(rendered)
        if args.out:
            _atomic_write(Path(args.out), pk_report_to_tsv(report))
            _write_manifest(Path(args.out).parent, "evaluate", args, started)
        return 0

    if args.setting in ("a", "b"):
        pred_sets = {d: {t.triple for t in rows} for d, rows in predictions.items()}
        report = evaluate_tdm(pred_sets, annotations, args.setting)
    else:
        gold_ids = {a.doc_id for a in annotations}
        report = evaluate_tdms({d: r for d, r in predictions.items() if d in gold_ids}, annotations)
    name = {"a": "all papers", "b": "excluding Unknown", "c": "with scores"}[args.setting]
    rendered = render_eval_reports([(name, report)])
    print(rendered)
    if args.out:
        _atomic_write(Path(args.out), eval_reports_to_tsv([(name, report)]))
        _write_manifest(Path(args.out).parent, "evaluate", args, started)
    return 0


# ---------------------------------------------------------------------------
# leaderboard
# ---------------------------------------------------------------------------

def _parse_triple(text: str) -> TdmTriple:
    parts = [p.strip() for p in text.split(";")]
    if len(parts) != 3 or not all(parts):
        raise DataFormatError(f"triple must look like 'Task;Dataset;Metric', got {text!r}")
    return TdmTriple(*parts)


def cmd_leaderboard(args) -> int:
    started = _now()
    triple = _parse_triple(args.triple)
    predictions = read_predictions(args.pred)
    flat = [t for rows in predictions.values() for t in rows]
    board = build_leaderboard(flat, triple, args.k)
    out = Path(args.out)
    write_leaderboard(out, board)
    _write_manifest(out.parent, "leaderboard", args, started)
    for doc_id, conf, value in board.rows:
        print(f"{doc_id}\t{conf:.4f}\t{value if value is not None else '-'}")
    print(f"wrote {len(board.rows)} rows to {out}")
    return 0


# ---------------------------------------------------------------------------
# split
# ---------------------------------------------------------------------------

def cmd_split(args) -> int:
    started = _now()
    aliases = _load_aliases(args)
    annotations = load_annotations(args.gold, aliases)
    split = make_split(annotations, args.mode, args.seed)
    out_dir = Path(args.out)
    _atomic_write(out_dir / "train.txt", "\n".join(sorted(split.train)) + "\n")
    _atomic_write(out_dir / "test.txt", "\n".join(sorted(split.test)) + "\n")
    save_label_space(out_dir / "label_space.tsv", split.label_space)
    _write_manifest(out_dir, "split", args, started)
    print(
        f"{args.mode} split: {len(split.train)} train / {len(split.test)} test papers, "
        f"{len(split.label_space)} triples in the training label space"
    )
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tdmex",
        description="Tag papers with task/dataset/metric triples and extract best scores.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse TEI/plain documents into canonical JSON")
    p.add_argument("in_dir")
    p.add_argument("out_dir")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build-repr", help="build document and score-context representations")
    p.add_argument("--config", default=None)
    p.add_argument("--docs", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_repr)

    p = sub.add_parser("gen-instances", help="generate entailment training instances")
    p.add_argument("--mode", choices=("tdm", "dm"), required=True)
    p.add_argument("--repr", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--labels", default=None)
    p.add_argument("--aliases", default=None)
    p.add_argument("--neg-policy", choices=("all", "sampled"), default="all")
    p.add_argument("--sample-k", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--skip-unknown", action="store_true")
    p.set_defaults(func=cmd_gen_instances)

    p = sub.add_parser("train", help="train a native scorer")
    p.add_argument("--scorer", choices=("lexical", "mlc"), required=True)
    p.add_argument("--instances", default=None)
    p.add_argument("--repr", default=None)
    p.add_argument("--gold", default=None)
    p.add_argument("--aliases", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict triples and attach scores")
    p.add_argument("--scorer", choices=("lexical", "remote", "mlc", "sm"), required=True)
    p.add_argument("--repr", default=None)
    p.add_argument("--docs", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--dm-model", default=None)
    p.add_argument("--endpoint", default=None)
    p.add_argument("--labels", default=None)
    p.add_argument("--gold", default=None)
    p.add_argument("--aliases", default=None)
    p.add_argument("--polarity", default=None)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against gold annotations")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--setting", choices=("a", "b", "c"), default="a")
    p.add_argument("--pk", action="store_true")
    p.add_argument("--ks", default="1,3,5,10")
    p.add_argument("--aliases", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("leaderboard", help="rank papers for one triple")
    p.add_argument("--pred", required=True)
    p.add_argument("--triple", required=True, help='formatted "Task;Dataset;Metric"')
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_leaderboard)

    p = sub.add_parser("split", help="produce train/test doc_id lists")
    p.add_argument("--gold", required=True)
    p.add_argument("--mode", choices=("standard", "zero_shot"), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--aliases", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TdmexError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
