"""Uniform hypothesis-scoring interface with two implementations: a native
lexical logistic model and a client for the remote neural service.

Wire protocol (shared with the service): HTTP POST /score with body
{"pairs":[{"context":"...","hypothesis":"..."}]} and reply
{"probabilities":[...]}; 400 for malformed bodies, 503 when no model is
loaded.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import requests

from .errors import ProtocolError, TrainingError, TransportError
from .instances import EntailmentInstance
from .taxonomy import AliasTable

FEATURE_NAMES = (
    "tfidf_cosine",
    "token_jaccard",
    "field1_in_context",
    "field2_in_context",
    "field3_in_context",
)


@dataclass(frozen=True)
class ScoreRequest:
    pairs: tuple[tuple[str, str], ...]

    def __post_init__(self):
        if not self.pairs:
            raise ValueError("request must contain at least one pair")
        for context, hypothesis in self.pairs:
            if not context or not hypothesis:
                raise ValueError("contexts and hypotheses must be non-empty")

    @classmethod
    def of(cls, pairs: Iterable[tuple[str, str]]) -> "ScoreRequest":
        return cls(tuple((c, h) for c, h in pairs))


@dataclass(frozen=True)
class ScoreResponse:
    probabilities: tuple[float, ...]


class Featurizer:
    """Lexical features over an alias-normalized, case-folded token space."""

    def __init__(self, idf: dict[str, float], default_idf: float,
                 aliases: AliasTable | None = None):
        self.idf = idf
        self.default_idf = default_idf
        self.aliases = aliases

    def tokens(self, text: str) -> list[str]:
        toks = text.split()
        if self.aliases is not None:
            toks = " ".join(self.aliases.normalize_token(t) for t in toks).split()
        return [t.casefold() for t in toks]

    def _weight(self, token: str) -> float:
        return self.idf.get(token, self.default_idf)

    def cosine(self, context_tokens: list[str], hyp_tokens: list[str]) -> float:
        if not context_tokens or not hyp_tokens:
            return 0.0
        ctx = Counter(context_tokens)
        hyp = Counter(hyp_tokens)
        dot = sum(ctx[t] * hyp[t] * self._weight(t) ** 2 for t in hyp if t in ctx)
        if dot == 0.0:
            return 0.0
        norm_c = math.sqrt(sum((n * self._weight(t)) ** 2 for t, n in ctx.items()))
        norm_h = math.sqrt(sum((n * self._weight(t)) ** 2 for t, n in hyp.items()))
        return dot / (norm_c * norm_h)

    def features(self, context: str, hypothesis: str) -> np.ndarray:
        ctx_tokens = self.tokens(context)
        hyp_tokens = self.tokens(hypothesis)
        cosine = self.cosine(ctx_tokens, hyp_tokens)
        ctx_set, hyp_set = set(ctx_tokens), set(hyp_tokens)
        union = ctx_set | hyp_set
        jaccard = len(ctx_set & hyp_set) / len(union) if union else 0.0
        padded_ctx = " " + " ".join(ctx_tokens) + " "
        indicators = [0.0, 0.0, 0.0]
        for i, part in enumerate(hypothesis.split(";")[:3]):
            phrase = " ".join(self.tokens(part))
            if phrase and f" {phrase} " in padded_ctx:
                indicators[i] = 1.0
        return np.array([cosine, jaccard, *indicators])


@dataclass
class LexicalModel:
    idf: dict[str, float]
    default_idf: float
    weights: np.ndarray
    bias: float
    alias_entries: dict[str, dict[str, str]] = field(default_factory=dict)
    final_loss: float = float("nan")

    def featurizer(self) -> Featurizer:
        aliases = AliasTable(self.alias_entries) if self.alias_entries else None
        return Featurizer(self.idf, self.default_idf, aliases)

    def save(self, path) -> None:
        data = {
            "feature_names": list(FEATURE_NAMES),
            "idf": self.idf,
            "default_idf": self.default_idf,
            "weights": [float(w) for w in self.weights],
            "bias": float(self.bias),
            "aliases": self.alias_entries,
            "final_loss": self.final_loss,
        }
        Path(path).write_text(json.dumps(data, indent=1, sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "LexicalModel":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            idf={k: float(v) for k, v in data["idf"].items()},
            default_idf=float(data["default_idf"]),
            weights=np.array(data["weights"], dtype=float),
            bias=float(data["bias"]),
            alias_entries=data.get("aliases", {}),
            final_loss=float(data.get("final_loss", "nan")),
        )


@dataclass(frozen=True)
class LexicalTrainParams:
    learning_rate: float = 2.0
    max_epochs: int = 4000
    loss_threshold: float = 0.05
    l2: float = 0.0
    seed: int = 0


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


def lexical_train(
    instances: Sequence[EntailmentInstance],
    params: LexicalTrainParams = LexicalTrainParams(),
    aliases: AliasTable | None = None,
) -> LexicalModel:
    """Fit logistic weights over the lexical features by full-batch gradient
    descent, stopping once mean log-loss drops below the configured
    threshold. Deterministic for fixed inputs."""
    labels = np.array([1.0 if inst.label else 0.0 for inst in instances])
    if len(instances) == 0 or labels.min() == labels.max():
        raise TrainingError("training needs at least one positive and one negative instance")

    alias_entries = aliases.entries() if aliases is not None else {}
    probe = Featurizer({}, 0.0, aliases)
    unique_contexts = list(dict.fromkeys(inst.context for inst in instances))
    df: Counter = Counter()
    for ctx in unique_contexts:
        df.update(set(probe.tokens(ctx)))
    n_docs = len(unique_contexts)
    idf = {t: math.log((1 + n_docs) / (1 + d)) + 1.0 for t, d in df.items()}
    default_idf = math.log(1 + n_docs) + 1.0

    featurizer = Featurizer(idf, default_idf, aliases)
    X = np.stack([featurizer.features(i.context, i.hypothesis) for i in instances])
    y = labels
    n = len(y)

    w = np.zeros(X.shape[1])
    b = 0.0
    loss = float("inf")
    eps = 1e-12
    for _ in range(params.max_epochs):
        p = _sigmoid(X @ w + b)
        grad_w = X.T @ (p - y) / n + params.l2 * w
        grad_b = float(np.mean(p - y))
        w -= params.learning_rate * grad_w
        b -= params.learning_rate * grad_b
        p = np.clip(_sigmoid(X @ w + b), eps, 1 - eps)
        loss = float(
            -np.mean(y * np.log(p) + (1 - y) * np.log(1 - p))
            + params.l2 / 2 * float(w @ w)
        )
        if loss < params.loss_threshold:
            break
    return LexicalModel(
        idf=idf,
        default_idf=default_idf,
        weights=w,
        bias=b,
        alias_entries=alias_entries,
        final_loss=loss,
    )


class LexicalScorer:
    """Scores hypothesis/context pairs with a trained lexical model."""

    def __init__(self, model: LexicalModel):
        self.model = model
        self._featurizer = model.featurizer()

    def features(self, context: str, hypothesis: str) -> np.ndarray:
        return self._featurizer.features(context, hypothesis)

    def score(self, request: ScoreRequest) -> ScoreResponse:
        X = np.stack([self._featurizer.features(c, h) for c, h in request.pairs])
        probs = _sigmoid(X @ self.model.weights + self.model.bias)
        return ScoreResponse(tuple(float(p) for p in probs))


class RemoteScorer:
    """Client for the remote scoring service."""

    def __init__(self, base_url: str, model_kind: str | None = None,
                 timeout: float = 60.0, session: requests.Session | None = None):
        self.base_url = base_url.rstrip("/")
        self.model_kind = model_kind
        self.timeout = timeout
        self._session = session or requests.Session()

    def score(self, request: ScoreRequest) -> ScoreResponse:
        payload = {
            "pairs": [{"context": c, "hypothesis": h} for c, h in request.pairs]
        }
        headers = {}
        if self.model_kind:
            headers["X-Model"] = self.model_kind
        try:
            resp = self._session.post(
                self.base_url + "/score", json=payload,
                headers=headers, timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise TransportError(f"scoring endpoint unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise ProtocolError(
                f"scoring endpoint returned status {resp.status_code}: {resp.text[:200]}"
            )
        try:
            data = resp.json()
        except ValueError as exc:
            raise ProtocolError("scoring endpoint returned non-JSON body") from exc
        probs = data.get("probabilities") if isinstance(data, dict) else None
        if not isinstance(probs, list) or len(probs) != len(request.pairs):
            raise ProtocolError("malformed reply: probabilities missing or wrong length")
        values = []
        for p in probs:
            if not isinstance(p, (int, float)) or not 0.0 <= float(p) <= 1.0:
                raise ProtocolError(f"malformed reply: probability out of range: {p!r}")
            values.append(float(p))
        return ScoreResponse(tuple(values))


def score(model_or_endpoint, request: ScoreRequest) -> ScoreResponse:
    """Score a batch of (context, hypothesis) pairs with whatever backend
    is given: a LexicalModel, an endpoint URL, or any object with .score()."""
    if isinstance(model_or_endpoint, LexicalModel):
        return LexicalScorer(model_or_endpoint).score(request)
    if isinstance(model_or_endpoint, str):
        return RemoteScorer(model_or_endpoint).score(request)
    if hasattr(model_or_endpoint, "score"):
        return model_or_endpoint.score(request)
    raise TypeError(f"cannot score with {type(model_or_endpoint).__name__}")
