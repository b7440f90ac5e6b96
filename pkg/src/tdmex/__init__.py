"""Extract task/dataset/metric labels and best reported scores from
scientific papers to reconstruct leaderboards.

Pipeline: ingest TEI -> extract tables -> build representations ->
generate entailment instances -> train/score -> two-stage inference ->
evaluation.
"""

__version__ = "0.1.0"

from .documents import RawDocument, Section, parse_plain, parse_tei, split_sentences
from .errors import TdmexError
from .inference import (
    Leaderboard,
    TdmPrediction,
    TdmsTuple,
    attach_scores,
    build_leaderboard,
    predict_tdm,
)
from .instances import EntailmentInstance, gen_dm_instances, gen_tdm_instances, match_score
from .representation import (
    DocTAET,
    ReprConfig,
    ScoreContext,
    build_doctaet,
    build_score_contexts,
    extract_exp_setup,
    serialize_hypothesis,
)
from .scorer import (
    LexicalModel,
    LexicalScorer,
    RemoteScorer,
    ScoreRequest,
    ScoreResponse,
    lexical_train,
    score,
)
from .tables import (
    Cell,
    NumericCell,
    TableStruct,
    associate_headers,
    detect_numeric,
    evaluate_table_parser,
    extract_tables,
)
from .taxonomy import (
    AliasTable,
    CorpusSplit,
    DmPair,
    GoldAnnotation,
    TdmTriple,
    filter_low_support,
    make_split,
    normalize_label,
)

__all__ = [
    "AliasTable",
    "Cell",
    "CorpusSplit",
    "DmPair",
    "DocTAET",
    "EntailmentInstance",
    "GoldAnnotation",
    "Leaderboard",
    "LexicalModel",
    "LexicalScorer",
    "NumericCell",
    "RawDocument",
    "RemoteScorer",
    "ReprConfig",
    "ScoreContext",
    "ScoreRequest",
    "ScoreResponse",
    "Section",
    "TableStruct",
    "TdmPrediction",
    "TdmTriple",
    "TdmsTuple",
    "TdmexError",
    "associate_headers",
    "attach_scores",
    "build_doctaet",
    "build_leaderboard",
    "build_score_contexts",
    "detect_numeric",
    "evaluate_table_parser",
    "extract_exp_setup",
    "extract_tables",
    "filter_low_support",
    "gen_dm_instances",
    "gen_tdm_instances",
    "lexical_train",
    "make_split",
    "match_score",
    "normalize_label",
    "parse_plain",
    "parse_tei",
    "predict_tdm",
    "score",
    "serialize_hypothesis",
    "split_sentences",
]
