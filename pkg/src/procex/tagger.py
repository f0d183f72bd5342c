"""Mention extraction as BIO sequence labelling with a linear-chain CRF.

Tokens are labelled ``O`` or ``B-<tag>`` / ``I-<tag>`` for each of the
seven process-element tags (15 labels total).  Decoding repairs stray
``I`` labels by opening a new span, so any label sequence maps to a valid
non-overlapping mention set.

The feature templates are deliberately self-contained (no part-of-speech
tagger, no embeddings): lowercased token, word shape, short prefixes and
suffixes, digit/punctuation flags, all of these in a window of two tokens
each side, plus sentence-boundary markers.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import crf
from .corpus import Document, Mention, TAG_SET
from .errors import NumericalError

OUTSIDE = "O"
BIO_LABELS: tuple[str, ...] = (OUTSIDE,) + tuple(
    f"{prefix}-{tag}" for tag in TAG_SET for prefix in ("B", "I")
)
_LABEL_INDEX = {label: i for i, label in enumerate(BIO_LABELS)}


def encode_bio(doc: Document, mentions: list[Mention]) -> list[str]:
    """Label every token of *doc*: B on mention starts, I inside, O elsewhere."""
    labels = [OUTSIDE] * doc.n_tokens
    occupied = [False] * doc.n_tokens
    for m in sorted(mentions):
        for i in range(m.start, m.end + 1):
            if occupied[i]:
                raise ValueError(f"overlapping mentions at token {i}")
            occupied[i] = True
        labels[m.start] = f"B-{m.tag}"
        for i in range(m.start + 1, m.end + 1):
            labels[i] = f"I-{m.tag}"
    return labels


def decode_bio(labels: list[str]) -> list[Mention]:
    """Rebuild mentions from labels, repairing invalid transitions.

    An ``I`` label that does not continue a same-tag span opens a new
    mention, so decoding is total over arbitrary label sequences.
    """
    mentions: list[Mention] = []
    start = None
    tag = None
    for i, label in enumerate(labels):
        if label == OUTSIDE:
            if start is not None:
                mentions.append(Mention(start, i - 1, tag))
                start = None
            continue
        prefix, _, label_tag = label.partition("-")
        if prefix == "B" or start is None or label_tag != tag:
            if start is not None:
                mentions.append(Mention(start, i - 1, tag))
            start, tag = i, label_tag
    if start is not None:
        mentions.append(Mention(start, len(labels) - 1, tag))
    return mentions


def _shape(token: str) -> str:
    shape = []
    for ch in token:
        if ch.isupper():
            shape.append("X")
        elif ch.islower():
            shape.append("x")
        elif ch.isdigit():
            shape.append("9")
        else:
            shape.append(ch)
    return "".join(shape)


def _token_attributes(token: str) -> list[str]:
    lower = token.lower()
    attrs = [f"w={lower}", f"shape={_shape(token)}"]
    for k in (2, 3):
        if len(lower) >= k:
            attrs.append(f"pre{k}={lower[:k]}")
            attrs.append(f"suf{k}={lower[-k:]}")
    if token.isdigit():
        attrs.append("isdigit")
    if not any(ch.isalnum() for ch in token):
        attrs.append("ispunct")
    return attrs


def extract_token_features(doc: Document, position: int) -> list[str]:
    """Deterministic feature strings for one token, window offsets -2..+2."""
    if not (0 <= position < doc.n_tokens):
        raise IndexError(f"position {position} out of range")
    features = ["bias"]
    for offset in range(-2, 3):
        p = position + offset
        if p < 0:
            features.append(f"[{offset}]BOS")
        elif p >= doc.n_tokens:
            features.append(f"[{offset}]EOS")
        else:
            features.extend(f"[{offset}]{a}" for a in _token_attributes(doc.tokens[p]))
    sid = doc.sentence_ids[position]
    if position == 0 or doc.sentence_ids[position - 1] != sid:
        features.append("sent-start")
    if position == doc.n_tokens - 1 or doc.sentence_ids[position + 1] != sid:
        features.append("sent-end")
    return features


class CrfTagger(BaseEstimator):
    """Linear-chain CRF mention tagger.

    Trained by mini-batch gradient ascent on the L2-penalised conditional
    log-likelihood with a ``1/sqrt(epoch)`` step-size decay.  Training is
    single-threaded and deterministic for a fixed seed; a fitted model is
    immutable and safe to decode with concurrently.

    Parameters
    ----------
    l2 : L2 regularisation strength on all weights.
    epochs : number of passes over the training documents.
    learning_rate : initial gradient-ascent step size.
    batch_size : documents per gradient step.
    seed : controls shuffling; identical seeds give bit-identical weights.
    """

    def __init__(
        self,
        l2: float = 0.1,
        epochs: int = 50,
        learning_rate: float = 0.1,
        batch_size: int = 8,
        seed: int = 0,
    ):
        self.l2 = l2
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.seed = seed

    # -- vocabulary and featurisation -------------------------------------

    def _featurize(self, doc: Document, expand: bool) -> list[list[int]]:
        vocab = self.feature_index_
        rows: list[list[int]] = []
        for pos in range(doc.n_tokens):
            active = []
            for feat in extract_token_features(doc, pos):
                idx = vocab.get(feat)
                if idx is None and expand:
                    idx = vocab[feat] = len(vocab)
                if idx is not None:
                    active.append(idx)
            rows.append(active)
        return rows

    # -- estimator API -----------------------------------------------------

    def fit(self, documents: list[Document], y: list[list[Mention]] | None = None):
        """Train on *documents*; gold mentions default to ``doc.mentions``."""
        if not documents:
            raise ValueError("cannot train on an empty document set")
        if y is None:
            y = [list(doc.mentions) for doc in documents]

        self.labels_ = BIO_LABELS
        self.feature_index_: dict[str, int] = {}
        sequences: list[crf.Sequence] = []
        for doc, mentions in zip(documents, y):
            features = self._featurize(doc, expand=True)
            labels = [_LABEL_INDEX[l] for l in encode_bio(doc, mentions)]
            sequences.append((features, labels))

        n_labels = len(self.labels_)
        state = np.zeros((len(self.feature_index_), n_labels))
        trans = np.zeros((n_labels, n_labels))
        rng = np.random.default_rng(self.seed)
        order = np.arange(len(sequences))
        n_train = len(sequences)
        self.loss_history_: list[float] = []

        for epoch in range(self.epochs):
            rng.shuffle(order)
            step = self.learning_rate / np.sqrt(epoch + 1)
            epoch_loglik = 0.0
            for lo in range(0, n_train, self.batch_size):
                batch = [sequences[i] for i in order[lo : lo + self.batch_size]]
                loglik, g_state, g_trans = crf.log_likelihood_and_gradient(
                    state, trans, batch, l2=self.l2, l2_scale=len(batch) / n_train
                )
                state += step * g_state
                trans += step * g_trans
                epoch_loglik += loglik
            loss = -epoch_loglik
            if not np.isfinite(loss):
                raise NumericalError(f"training loss diverged at epoch {epoch}")
            self.loss_history_.append(loss)

        self.state_weights_ = state
        self.transition_weights_ = trans
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "state_weights_"):
            raise NotFittedError("CrfTagger is not fitted yet")

    @property
    def weights_(self) -> np.ndarray:
        """All weights as one vector: state features then transitions."""
        self._check_fitted()
        return np.concatenate(
            [self.state_weights_.ravel(), self.transition_weights_.ravel()]
        )

    def log_likelihood_and_gradient(
        self, documents: list[Document], y: list[list[Mention]] | None = None
    ) -> tuple[float, np.ndarray]:
        """Full-data penalised log-likelihood and flat gradient for a fitted model."""
        self._check_fitted()
        if y is None:
            y = [list(doc.mentions) for doc in documents]
        sequences = [
            (self._featurize(doc, expand=False), [_LABEL_INDEX[l] for l in encode_bio(doc, m)])
            for doc, m in zip(documents, y)
        ]
        loglik, g_state, g_trans = crf.log_likelihood_and_gradient(
            self.state_weights_, self.transition_weights_, sequences, l2=self.l2
        )
        return loglik, np.concatenate([g_state.ravel(), g_trans.ravel()])

    def predict_single(self, doc: Document) -> list[Mention]:
        self._check_fitted()
        features = self._featurize(doc, expand=False)
        emissions = crf.emission_scores(self.state_weights_, features)
        path = crf.viterbi_decode(emissions, self.transition_weights_)
        return decode_bio([self.labels_[i] for i in path])

    def predict(self, documents: list[Document]) -> list[list[Mention]]:
        return [self.predict_single(doc) for doc in documents]

    # -- persistence ---------------------------------------------------------

    def save(self, path: str | Path) -> None:
        self._check_fitted()
        payload = {
            "kind": "crf-tagger",
            "config": self.get_params(),
            "labels": list(self.labels_),
            "feature_index": self.feature_index_,
            "state_weights": self.state_weights_.tolist(),
            "transition_weights": self.transition_weights_.tolist(),
        }
        Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "CrfTagger":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("kind") != "crf-tagger":
            raise ValueError(f"{path} is not a CRF tagger artifact")
        model = cls(**payload["config"])
        model.labels_ = tuple(payload["labels"])
        model.feature_index_ = {k: int(v) for k, v in payload["feature_index"].items()}
        model.state_weights_ = np.asarray(payload["state_weights"], dtype=float)
        model.transition_weights_ = np.asarray(payload["transition_weights"], dtype=float)
        model.loss_history_ = payload.get("loss_history", [])
        return model
