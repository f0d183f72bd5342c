"""Relation extraction over mention pairs with gradient-boosted trees.

Every ordered pair of mentions is described by a small feature vector
(argument tags, signed token distance, sentence distance, and the tags of
neighbouring mentions as context) and classified into one of the six
relation types or ``nothing``.  Training pairs are the mention-pair
projections of the gold entity relations plus, per document and per
boosting iteration, a fresh uniform sample of ``negative_rate`` unrelated
mention pairs for each positive one.  Predicted mention-pair labels are
lifted to entity level by majority vote.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .boosting import GradientBoostedTreesClassifier
from .corpus import Document, Entity, Mention, Relation, RELATION_TYPES, TAG_SET

NO_RELATION = "nothing"
PAD = "PAD"
CLASSES: tuple[str, ...] = RELATION_TYPES + (NO_RELATION,)

# categorical code tables are fixed by the tag vocabulary, not learned
_TAG_CODE = {tag: i for i, tag in enumerate(TAG_SET)}
_TAG_CODE[PAD] = len(_TAG_CODE)

DISTANCE_CLAMP = 200


@dataclass(frozen=True)
class PairFeatures:
    """Features describing an ordered (head, tail) mention pair."""

    head_tag: str
    tail_tag: str
    token_distance: int
    sentence_distance: int
    context_tags: tuple[str, ...]


def build_pair_features(
    doc: Document,
    mentions: Sequence[Mention],
    head_idx: int,
    tail_idx: int,
    context_size: int,
) -> PairFeatures:
    """Features for one ordered mention pair.

    ``token_distance`` is the signed gap from the head's end to the tail's
    start (negative when the tail precedes the head), clamped to
    +-``DISTANCE_CLAMP``.  Context is the tags of the ``context_size``
    mentions before the head and after the tail in token order, padded
    with ``PAD`` at document edges.
    """
    if head_idx == tail_idx:
        raise ValueError("head and tail must be distinct mentions")
    head, tail = mentions[head_idx], mentions[tail_idx]
    if tail.start > head.end:
        gap = tail.start - head.end - 1
    elif head.start > tail.end:
        gap = -(head.start - tail.end - 1)
    else:
        gap = 0  # overlapping spans
    token_distance = max(-DISTANCE_CLAMP, min(DISTANCE_CLAMP, gap))
    sentence_distance = doc.sentence_ids[tail.start] - doc.sentence_ids[head.start]

    order = sorted(range(len(mentions)), key=lambda i: (mentions[i].start, mentions[i].end))
    pos = {idx: rank for rank, idx in enumerate(order)}
    before = [
        mentions[order[r]].tag if r >= 0 else PAD
        for r in range(pos[head_idx] - context_size, pos[head_idx])
    ]
    after = [
        mentions[order[r]].tag if r < len(order) else PAD
        for r in range(pos[tail_idx] + 1, pos[tail_idx] + 1 + context_size)
    ]
    return PairFeatures(head.tag, tail.tag, token_distance, sentence_distance, tuple(before + after))


def encode_pair_features(pf: PairFeatures) -> list[float]:
    return [
        float(_TAG_CODE[pf.head_tag]),
        float(_TAG_CODE[pf.tail_tag]),
        float(pf.token_distance),
        float(pf.sentence_distance),
        *(float(_TAG_CODE[t]) for t in pf.context_tags),
    ]


def categorical_columns(context_size: int) -> tuple[int, ...]:
    return (0, 1) + tuple(range(4, 4 + 2 * context_size))


def related_pairs(doc: Document) -> dict[tuple[int, int], str]:
    """Ordered positive mention pairs with their relation type."""
    positives: dict[tuple[int, int], str] = {}
    for rel in doc.relations:
        for h in doc.entities[rel.head].mention_ids:
            for t in doc.entities[rel.tail].mention_ids:
                positives[(h, t)] = rel.type
    return positives


def candidate_pairs(doc: Document) -> tuple[list[tuple[int, int, str]], list[tuple[int, int]]]:
    """Split all ordered mention pairs of *doc* into positives and the negative pool.

    The pool only holds pairs whose entities are unrelated in either
    direction, so the sampler can never emit a pair of related entities.
    """
    positives_map = related_pairs(doc)
    related_unordered = {frozenset(p) for p in positives_map}
    positives = [(h, t, label) for (h, t), label in sorted(positives_map.items())]
    pool = [
        (h, t)
        for h in range(len(doc.mentions))
        for t in range(len(doc.mentions))
        if h != t and frozenset((h, t)) not in related_unordered
    ]
    return positives, pool


def sample_training_pairs(
    doc: Document, negative_rate: int, rng: np.random.Generator
) -> list[tuple[int, int, str]]:
    """All positive pairs once, plus ``negative_rate`` sampled negatives per positive.

    Negatives are drawn uniformly without replacement from the document's
    unrelated-pair pool; when the pool is smaller than requested the whole
    pool is used.
    """
    positives, pool = candidate_pairs(doc)
    wanted = negative_rate * len(positives)
    if wanted >= len(pool):
        chosen = pool
    else:
        idx = rng.choice(len(pool), size=wanted, replace=False)
        chosen = [pool[i] for i in sorted(idx)]
    return positives + [(h, t, NO_RELATION) for h, t in chosen]


def lift_entity_relations(
    owners: Sequence[tuple[int, int]],
    labels: Sequence[str],
    scores: np.ndarray,
) -> list[Relation]:
    """Aggregate mention-pair votes into at most one relation per entity pair.

    ``owners[i]`` names the ordered entity pair that mention pair ``i``
    belongs to.  The most frequent non-``nothing`` label wins; ties break
    by summed score, then by canonical class order.  Pairs where every
    vote is ``nothing`` yield no relation.
    """
    votes: dict[tuple[int, int], dict[str, int]] = {}
    score_sums: dict[tuple[int, int], np.ndarray] = {}
    for pair, label, score in zip(owners, labels, scores):
        totals = score_sums.setdefault(pair, np.zeros(len(CLASSES)))
        totals += score
        if label != NO_RELATION:
            votes.setdefault(pair, {}).setdefault(label, 0)
            votes[pair][label] += 1

    relations = []
    for (a, b), tally in sorted(votes.items()):
        top = max(tally.values())
        tied = [cls for cls, n in tally.items() if n == top]
        if len(tied) > 1:
            sums = score_sums[(a, b)]
            tied.sort(key=lambda cls: (-sums[CLASSES.index(cls)], CLASSES.index(cls)))
        relations.append(Relation(a, b, tied[0]))
    return relations


class RelationExtractor(BaseEstimator):
    """Entity-level relation extraction via boosted mention-pair classification.

    Parameters mirror the training regime: ``negative_rate`` unrelated
    pairs per positive, redrawn each of the ``iterations`` boosting
    rounds, with ``context_size`` neighbouring mention tags as context.
    """

    def __init__(
        self,
        negative_rate: int = 40,
        context_size: int = 2,
        iterations: int = 1000,
        learning_rate: float = 0.1,
        max_depth: int = 4,
        seed: int = 0,
    ):
        self.negative_rate = negative_rate
        self.context_size = context_size
        self.iterations = iterations
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.seed = seed

    def fit(self, documents: list[Document], y=None):
        """Train on documents carrying gold mentions, entities and relations."""
        if not documents:
            raise ValueError("cannot train on an empty document set")
        rows: list[list[float]] = []
        labels: list[str] = []
        doc_positive_rows: list[np.ndarray] = []
        doc_pool_rows: list[np.ndarray] = []
        doc_positive_counts: list[int] = []
        for doc in documents:
            mentions = list(doc.mentions)
            positives, pool = candidate_pairs(doc)
            pos_rows = []
            for h, t, label in positives:
                pos_rows.append(len(rows))
                rows.append(encode_pair_features(
                    build_pair_features(doc, mentions, h, t, self.context_size)
                ))
                labels.append(label)
            pool_rows = []
            for h, t in pool:
                pool_rows.append(len(rows))
                rows.append(encode_pair_features(
                    build_pair_features(doc, mentions, h, t, self.context_size)
                ))
                labels.append(NO_RELATION)
            doc_positive_rows.append(np.asarray(pos_rows, dtype=np.intp))
            doc_pool_rows.append(np.asarray(pool_rows, dtype=np.intp))
            doc_positive_counts.append(len(pos_rows))

        if not any(doc_positive_counts):
            raise ValueError("training documents contain no relations")
        X = np.asarray(rows, dtype=float)

        def resample(iteration: int, rng: np.random.Generator) -> np.ndarray:
            parts = []
            for pos, pool, n_pos in zip(doc_positive_rows, doc_pool_rows, doc_positive_counts):
                parts.append(pos)
                wanted = self.negative_rate * n_pos
                if wanted >= pool.size:
                    parts.append(pool)
                elif wanted:
                    parts.append(np.sort(rng.choice(pool, size=wanted, replace=False)))
            return np.concatenate(parts) if parts else np.arange(X.shape[0])

        self.classifier_ = GradientBoostedTreesClassifier(
            n_iterations=self.iterations,
            learning_rate=self.learning_rate,
            max_depth=self.max_depth,
            categorical_features=categorical_columns(self.context_size),
            seed=self.seed,
        )
        self.classifier_.fit(X, np.asarray(labels), row_sampler=resample)
        self.train_log_loss_ = self.classifier_.train_log_loss_
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "classifier_"):
            raise NotFittedError("RelationExtractor is not fitted yet")

    def predict_pair(
        self, doc: Document, mentions: Sequence[Mention], head_idx: int, tail_idx: int
    ) -> tuple[str, np.ndarray]:
        """Class and softmax score vector for one ordered mention pair."""
        label, proba = self._predict_rows(
            [self._encode(doc, mentions, head_idx, tail_idx)]
        )
        return label[0], proba[0]

    def _encode(self, doc, mentions, h, t) -> list[float]:
        pf = build_pair_features(doc, mentions, h, t, self.context_size)
        return encode_pair_features(pf)

    def _predict_rows(self, rows: list[list[float]]) -> tuple[list[str], np.ndarray]:
        self._check_fitted()
        expected = 4 + 2 * self.context_size
        for row in rows:
            if len(row) != expected:
                raise ValueError(
                    f"feature arity {len(row)} does not match context size {self.context_size}"
                )
        X = np.asarray(rows, dtype=float)
        proba = self.classifier_.predict_proba(X)
        classes = list(self.classifier_.classes_)
        # align score columns with the canonical class order
        aligned = np.zeros((proba.shape[0], len(CLASSES)))
        for j, cls in enumerate(classes):
            aligned[:, CLASSES.index(cls)] = proba[:, j]
        labels = [CLASSES[int(np.argmax(row))] for row in aligned]
        return labels, aligned

    def predict(
        self, doc: Document, mentions: Sequence[Mention], entities: Sequence[Entity]
    ) -> list[Relation]:
        """Entity-level relations by majority vote over cross-product mention pairs.

        For every ordered entity pair each mention pair casts one vote;
        the most frequent non-``nothing`` class wins (ties by summed
        score).  At most one relation per ordered entity pair.
        """
        self._check_fitted()
        rows = []
        owners = []
        for a, ea in enumerate(entities):
            for b, eb in enumerate(entities):
                if a == b:
                    continue
                for h in ea.mention_ids:
                    for t in eb.mention_ids:
                        rows.append(self._encode(doc, mentions, h, t))
                        owners.append((a, b))
        if not rows:
            return []
        labels, scores = self._predict_rows(rows)
        return lift_entity_relations(owners, labels, scores)

    # -- persistence ---------------------------------------------------------

    def save(self, path: str | Path) -> None:
        self._check_fitted()
        payload = {
            "kind": "relation-extractor",
            "config": self.get_params(),
            "classifier": self.classifier_.to_dict(),
        }
        Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "RelationExtractor":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("kind") != "relation-extractor":
            raise ValueError(f"{path} is not a relation-extractor artifact")
        model = cls(**payload["config"])
        model.classifier_ = GradientBoostedTreesClassifier.from_dict(payload["classifier"])
        model.train_log_loss_ = model.classifier_.train_log_loss_
        return model
