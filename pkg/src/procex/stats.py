"""Dataset statistics over annotated corpora.

Covers per-tag mention statistics, per-type relation statistics, entity
cluster statistics with intra-entity distances, the relation-type vs
argument-tag correlation matrix, and type-token ratios.  All arithmetic
is plain Python so results are reproducible bit-for-bit across platforms;
corpora in this domain are far too small for that to cost anything.

Conventions the numbers depend on:

* The distance between two mentions is the number of tokens strictly
  between them: 0 for adjacent or overlapping spans.
* The trimmed mean removes ``floor(trim * n)`` values at each end of the
  sorted sample (``trim`` defaults to 10%).
* Type-token ratios are computed over lowercased tokens, so surface
  variants like "The claim" / "the claim" count as repeats.
* Relative counts are emitted at full precision; standard deviations are
  population standard deviations.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .corpus import Corpus, Document, Entity, RELATION_TYPES, TAG_SET


@dataclass(frozen=True)
class TagStatsRow:
    tag: str
    absolute_count: int
    relative_count: float
    per_document: float
    per_sentence: float
    average_length: float
    length_stddev: float


@dataclass(frozen=True)
class RelationStatsRow:
    type: str
    absolute_count: int
    relative_count: float
    per_document: float
    per_sentence: float


@dataclass(frozen=True)
class EntityStatsRow:
    tag: str
    absolute_count: int
    relative_count: float
    per_document: float
    per_sentence: float
    multi_mention_count: int
    distance_median: float | None = None
    distance_mean: float | None = None
    distance_trimmed_mean: float | None = None
    distance_stddev: float | None = None


@dataclass(frozen=True)
class CorrelationMatrix:
    """Counts of relation examples by (relation type, argument position, tag)."""

    relation_types: tuple[str, ...]
    tags: tuple[str, ...]
    head_counts: dict[str, dict[str, int]]
    tail_counts: dict[str, dict[str, int]]

    def cell(self, relation_type: str, position: str, tag: str) -> int:
        table = self.head_counts if position == "head" else self.tail_counts
        return table[relation_type].get(tag, 0)


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values)


def _population_std(values: Sequence[float]) -> float:
    mu = _mean(values)
    return math.sqrt(sum((v - mu) ** 2 for v in values) / len(values))


def _median(values: Sequence[float]) -> float:
    ordered = sorted(values)
    k = len(ordered)
    mid = k // 2
    return ordered[mid] if k % 2 else (ordered[mid - 1] + ordered[mid]) / 2


def trimmed_mean(values: Sequence[float], trim: float = 0.10) -> float:
    """Mean after dropping ``floor(trim * n)`` values at each end."""
    if not values:
        raise ValueError("trimmed_mean of empty sequence")
    ordered = sorted(values)
    cut = int(trim * len(ordered))
    core = ordered[cut : len(ordered) - cut] if cut else ordered
    return _mean(core)


def mention_gap(a, b) -> int:
    """Tokens strictly between two spans; 0 when adjacent or overlapping."""
    if (a.start, a.end) > (b.start, b.end):
        a, b = b, a
    return max(0, b.start - a.end - 1)


def intra_entity_distance(entity: Entity, doc: Document) -> int:
    """Largest gap a resolver must bridge inside one entity.

    Defined as the maximum over the entity's mentions of each mention's
    minimal distance to any other mention of the same entity.
    """
    if len(entity) < 2:
        raise ValueError("intra-entity distance is undefined for singleton entities")
    mentions = doc.entity_mentions(entity)
    return max(
        min(mention_gap(m, other) for j, other in enumerate(mentions) if j != i)
        for i, m in enumerate(mentions)
    )


def _corpus_sentences(corpus: Corpus) -> int:
    return sum(doc.n_sentences for doc in corpus)


def mention_statistics(corpus: Corpus) -> list[TagStatsRow]:
    n_docs = len(corpus)
    n_sents = _corpus_sentences(corpus)
    lengths: dict[str, list[int]] = {tag: [] for tag in TAG_SET}
    for doc in corpus:
        for m in doc.mentions:
            lengths[m.tag].append(m.length)
    total = sum(len(v) for v in lengths.values())
    rows = []
    for tag in TAG_SET:
        vals = lengths[tag]
        n = len(vals)
        rows.append(
            TagStatsRow(
                tag=tag,
                absolute_count=n,
                relative_count=n / total if total else 0.0,
                per_document=n / n_docs,
                per_sentence=n / n_sents,
                average_length=_mean(vals) if vals else 0.0,
                length_stddev=_population_std(vals) if vals else 0.0,
            )
        )
    return rows


def relation_statistics(corpus: Corpus) -> list[RelationStatsRow]:
    n_docs = len(corpus)
    n_sents = _corpus_sentences(corpus)
    counts = Counter(r.type for doc in corpus for r in doc.relations)
    total = sum(counts.values())
    return [
        RelationStatsRow(
            type=rt,
            absolute_count=counts[rt],
            relative_count=counts[rt] / total if total else 0.0,
            per_document=counts[rt] / n_docs,
            per_sentence=counts[rt] / n_sents,
        )
        for rt in RELATION_TYPES
    ]


def entity_statistics(corpus: Corpus) -> list[EntityStatsRow]:
    n_docs = len(corpus)
    n_sents = _corpus_sentences(corpus)
    per_tag: dict[str, list[tuple[Document, Entity]]] = {tag: [] for tag in TAG_SET}
    for doc in corpus:
        for e in doc.entities:
            per_tag[doc.entity_tag(e)].append((doc, e))
    total = sum(len(v) for v in per_tag.values())
    rows = []
    for tag in TAG_SET:
        ents = per_tag[tag]
        multi = [(doc, e) for doc, e in ents if len(e) > 1]
        row = EntityStatsRow(
            tag=tag,
            absolute_count=len(ents),
            relative_count=len(ents) / total if total else 0.0,
            per_document=len(ents) / n_docs,
            per_sentence=len(ents) / n_sents,
            multi_mention_count=len(multi),
        )
        if multi:
            dists = [intra_entity_distance(e, doc) for doc, e in multi]
            row = replace(
                row,
                distance_median=_median(dists),
                distance_mean=_mean(dists),
                distance_trimmed_mean=trimmed_mean(dists),
                distance_stddev=_population_std(dists),
            )
        rows.append(row)
    return rows


def relation_argument_correlation(corpus: Corpus) -> CorrelationMatrix:
    heads: dict[str, Counter] = {rt: Counter() for rt in RELATION_TYPES}
    tails: dict[str, Counter] = {rt: Counter() for rt in RELATION_TYPES}
    for doc in corpus:
        for rel in doc.relations:
            heads[rel.type][doc.entity_tag(doc.entities[rel.head])] += 1
            tails[rel.type][doc.entity_tag(doc.entities[rel.tail])] += 1
    return CorrelationMatrix(
        relation_types=RELATION_TYPES,
        tags=TAG_SET,
        head_counts={rt: dict(heads[rt]) for rt in RELATION_TYPES},
        tail_counts={rt: dict(tails[rt]) for rt in RELATION_TYPES},
    )


def type_token_ratio(token_lists: Iterable[Sequence[str]]) -> float:
    """Unique tokens over total tokens, case-insensitive.

    High values indicate lexical variety; low values mean uniform surface
    forms and hence easier reference resolution.
    """
    tokens = [t.lower() for seq in token_lists for t in seq]
    if not tokens:
        raise ValueError("type-token ratio of empty input")
    return len(set(tokens)) / len(tokens)


def mention_type_token_ratios(corpus: Corpus) -> dict[str, float]:
    groups: dict[str, list[tuple[str, ...]]] = {tag: [] for tag in TAG_SET}
    for doc in corpus:
        for m in doc.mentions:
            groups[m.tag].append(doc.mention_tokens(m))
    return {tag: type_token_ratio(seqs) for tag, seqs in groups.items() if seqs}


def relation_type_token_ratios(corpus: Corpus) -> dict[str, float]:
    """Type-token ratio over the argument tokens of each relation type."""
    groups: dict[str, list[tuple[str, ...]]] = {rt: [] for rt in RELATION_TYPES}
    for doc in corpus:
        for rel in doc.relations:
            for entity_idx in (rel.head, rel.tail):
                for m in doc.entity_mentions(doc.entities[entity_idx]):
                    groups[rel.type].append(doc.mention_tokens(m))
    return {rt: type_token_ratio(seqs) for rt, seqs in groups.items() if seqs}
