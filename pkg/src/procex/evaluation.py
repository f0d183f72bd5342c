"""Strict evaluation: matching, micro/macro F1, scenarios, cross-validation.

Matching is exact at every level.  A mention matches iff span and tag are
identical; an entity matches iff its set of (span, tag) triples equals a
gold entity's set; a relation matches iff both argument entities match
and the type is equal.  One wrong token therefore invalidates the
mention, every entity containing it, and every relation touching those
entities: the error-propagation cascade this evaluation regime is
designed to expose.

Six ground-truth-injection scenarios isolate pipeline stages:

(1) mention extraction alone (mention level);
(2) entity resolution on predicted mentions, (3) on gold mentions
    (entity level);
(4) relation extraction on pipeline entities, (5) on entities resolved
    from gold mentions, (6) on gold entities (relation level).
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import clone

from .corpus import Corpus, Document, Entity, Mention, Relation, split_folds
from .relex import RelationExtractor
from .resolution import AlignmentEntityResolver, CorefPrediction
from .stats import mention_gap

MENTION_LEVEL = "mention"
ENTITY_LEVEL = "entity"
RELATION_LEVEL = "relation"

SCENARIO_LEVELS: dict[int, str] = {
    1: MENTION_LEVEL,
    2: ENTITY_LEVEL,
    3: ENTITY_LEVEL,
    4: RELATION_LEVEL,
    5: RELATION_LEVEL,
    6: RELATION_LEVEL,
}

# which stages consume gold annotations instead of upstream predictions
SCENARIO_GOLD_INPUTS: dict[int, frozenset[str]] = {
    1: frozenset(),
    2: frozenset(),
    3: frozenset({"mentions"}),
    4: frozenset(),
    5: frozenset({"mentions"}),
    6: frozenset({"mentions", "entities"}),
}


@dataclass(frozen=True)
class MatchCount:
    true_positives: int
    predicted_count: int
    gold_count: int

    def __post_init__(self):
        if self.true_positives > min(self.predicted_count, self.gold_count):
            raise ValueError("true positives exceed predicted or gold count")


MatchCounts = dict[str, MatchCount]


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float


def _prf(tp: int, predicted: int, gold: int) -> PRF:
    p = tp / predicted if predicted else 0.0
    r = tp / gold if gold else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return PRF(p, r, f1)


def mention_key(m: Mention) -> tuple:
    return (m.start, m.end, m.tag)


def entity_key(mentions: Sequence[Mention], entity: Entity) -> frozenset:
    return frozenset(mention_key(mentions[i]) for i in entity.mention_ids)


def _count_matches(predicted_keys, gold_keys, classes_of) -> MatchCounts:
    """One-to-one matching over exact-equality keys, per class."""
    pred_by_class: dict[str, Counter] = {}
    gold_by_class: dict[str, Counter] = {}
    for key in predicted_keys:
        pred_by_class.setdefault(classes_of(key), Counter())[key] += 1
    for key in gold_keys:
        gold_by_class.setdefault(classes_of(key), Counter())[key] += 1
    counts: MatchCounts = {}
    # sorted so downstream float summations are process-independent
    for cls in sorted(set(pred_by_class) | set(gold_by_class)):
        pred = pred_by_class.get(cls, Counter())
        gold = gold_by_class.get(cls, Counter())
        tp = sum((pred & gold).values())
        counts[cls] = MatchCount(tp, sum(pred.values()), sum(gold.values()))
    return counts


def match_mentions(predicted: Sequence[Mention], gold: Sequence[Mention]) -> MatchCounts:
    """A predicted mention is correct iff span and tag both equal a gold mention."""
    return _count_matches(
        [mention_key(m) for m in predicted],
        [mention_key(m) for m in gold],
        classes_of=lambda key: key[2],
    )


def match_entities(
    predicted_mentions: Sequence[Mention],
    predicted_entities: Sequence[Entity],
    gold_mentions: Sequence[Mention],
    gold_entities: Sequence[Entity],
) -> MatchCounts:
    """An entity is correct iff its mention set equals a gold entity's set."""

    def cls(key: frozenset) -> str:
        return next(iter(key))[2]

    return _count_matches(
        [entity_key(predicted_mentions, e) for e in predicted_entities],
        [entity_key(gold_mentions, e) for e in gold_entities],
        classes_of=cls,
    )


def match_relations(
    predicted_mentions: Sequence[Mention],
    predicted_entities: Sequence[Entity],
    predicted_relations: Sequence[Relation],
    gold_mentions: Sequence[Mention],
    gold_entities: Sequence[Entity],
    gold_relations: Sequence[Relation],
) -> MatchCounts:
    """A relation is correct iff head entity, tail entity, and type all match."""

    def keys(mentions, entities, relations):
        ekeys = [entity_key(mentions, e) for e in entities]
        return [(ekeys[r.head], ekeys[r.tail], r.type) for r in relations]

    return _count_matches(
        keys(predicted_mentions, predicted_entities, predicted_relations),
        keys(gold_mentions, gold_entities, gold_relations),
        classes_of=lambda key: key[2],
    )


def merge_counts(parts: Iterable[MatchCounts]) -> MatchCounts:
    merged: dict[str, list[int]] = {}
    for counts in parts:
        for cls, c in counts.items():
            agg = merged.setdefault(cls, [0, 0, 0])
            agg[0] += c.true_positives
            agg[1] += c.predicted_count
            agg[2] += c.gold_count
    return {cls: MatchCount(*vals) for cls, vals in merged.items()}


def micro_prf(counts: MatchCounts) -> PRF:
    """Pool true positives and totals across classes before computing P/R/F1."""
    tp = sum(c.true_positives for c in counts.values())
    pred = sum(c.predicted_count for c in counts.values())
    gold = sum(c.gold_count for c in counts.values())
    return _prf(tp, pred, gold)


def macro_prf(counts: MatchCounts) -> PRF:
    """Average per-class P, R and F1; classes without gold instances are skipped."""
    rows = [
        _prf(c.true_positives, c.predicted_count, c.gold_count)
        for c in counts.values()
        if c.gold_count > 0
    ]
    if not rows:
        return PRF(0.0, 0.0, 0.0)
    n = len(rows)
    return PRF(
        sum(r.precision for r in rows) / n,
        sum(r.recall for r in rows) / n,
        sum(r.f1 for r in rows) / n,
    )


def per_class_prf(counts: MatchCounts) -> dict[str, PRF]:
    return {
        cls: _prf(c.true_positives, c.predicted_count, c.gold_count)
        for cls, c in sorted(counts.items())
    }


@dataclass(frozen=True)
class MetricsReport:
    scenario: int
    level: str
    counts: MatchCounts
    micro: PRF
    macro: PRF
    per_class: dict[str, PRF]
    fold: int | None = None

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "fold": self.fold,
            "level": self.level,
            "micro": vars(self.micro),
            "macro": vars(self.macro),
            "per_class": {
                cls: {
                    **vars(prf),
                    "true_positives": self.counts[cls].true_positives,
                    "predicted": self.counts[cls].predicted_count,
                    "gold": self.counts[cls].gold_count,
                }
                for cls, prf in self.per_class.items()
            },
        }


def report_from_counts(
    counts: MatchCounts, scenario: int, level: str, fold: int | None = None
) -> MetricsReport:
    return MetricsReport(
        scenario=scenario,
        level=level,
        counts=counts,
        micro=micro_prf(counts),
        macro=macro_prf(counts),
        per_class=per_class_prf(counts),
        fold=fold,
    )


@dataclass(frozen=True)
class PredictedAnnotations:
    """One document's predictions at whatever stages a scenario produced."""

    mentions: tuple[Mention, ...]
    entities: tuple[Entity, ...] = ()
    relations: tuple[Relation, ...] = ()


def run_scenario(
    scenario: int,
    documents: Sequence[Document],
    tagger,
    resolver,
    relation_model: RelationExtractor | None,
    coref: Mapping[str, CorefPrediction] | None = None,
    fold: int | None = None,
) -> MetricsReport:
    """Execute one injection scenario over *documents* and score its output level.

    ``tagger`` must provide ``predict_single(doc) -> mentions`` and
    ``resolver`` must provide ``resolve(...) -> entities``; gold inputs are
    substituted per scenario.  Models must have been trained without
    seeing *documents*.
    """
    if scenario not in SCENARIO_LEVELS:
        raise ValueError(f"unknown scenario {scenario}; expected 1-6")
    level = SCENARIO_LEVELS[scenario]
    gold_inputs = SCENARIO_GOLD_INPUTS[scenario]
    if tagger is None and "mentions" not in gold_inputs:
        raise ValueError(f"scenario {scenario} needs a fitted mention tagger")
    if resolver is None and level != MENTION_LEVEL and "entities" not in gold_inputs:
        raise ValueError(f"scenario {scenario} needs an entity resolver")
    if relation_model is None and level == RELATION_LEVEL:
        raise ValueError(f"scenario {scenario} needs a fitted relation model")

    parts: list[MatchCounts] = []
    for doc in documents:
        if "mentions" in gold_inputs:
            mentions = list(doc.mentions)
        else:
            mentions = list(tagger.predict_single(doc))

        entities: Sequence[Entity] = ()
        if level in (ENTITY_LEVEL, RELATION_LEVEL):
            if "entities" in gold_inputs:
                entities = list(doc.entities)
            else:
                entities = _resolve(resolver, doc, mentions, coref)

        if level == MENTION_LEVEL:
            parts.append(match_mentions(mentions, doc.mentions))
        elif level == ENTITY_LEVEL:
            parts.append(match_entities(mentions, entities, doc.mentions, doc.entities))
        else:
            relations = relation_model.predict(doc, mentions, entities)
            parts.append(
                match_relations(
                    mentions, entities, relations,
                    doc.mentions, doc.entities, doc.relations,
                )
            )
    return report_from_counts(merge_counts(parts), scenario, level, fold)


def _resolve(resolver, doc, mentions, coref):
    if isinstance(resolver, AlignmentEntityResolver):
        prediction = coref.get(doc.name) if coref else None
        return list(resolver.resolve(doc, mentions, prediction))
    return list(resolver.resolve(doc, mentions))


@dataclass(frozen=True)
class CrossValidationResult:
    fold_reports: tuple[MetricsReport, ...]
    averages: dict[int, dict[str, PRF]] = field(default_factory=dict)

    def reports_for(self, scenario: int) -> list[MetricsReport]:
        return [r for r in self.fold_reports if r.scenario == scenario]


def average_reports(reports: Sequence[MetricsReport]) -> dict[str, PRF]:
    """Unweighted arithmetic mean of micro and macro scores across folds."""

    def mean(rows: list[PRF]) -> PRF:
        n = len(rows)
        return PRF(
            sum(r.precision for r in rows) / n,
            sum(r.recall for r in rows) / n,
            sum(r.f1 for r in rows) / n,
        )

    return {
        "micro": mean([r.micro for r in reports]),
        "macro": mean([r.macro for r in reports]),
    }


def _run_fold(args):
    (fold_id, train_docs, test_docs, tagger, resolver, relation_model, scenarios, coref) = args
    # fit only the models the requested scenarios consume
    needs_tagger = any("mentions" not in SCENARIO_GOLD_INPUTS[s] for s in scenarios)
    needs_relations = any(SCENARIO_LEVELS[s] == RELATION_LEVEL for s in scenarios)
    fitted_tagger = clone(tagger).fit(train_docs) if needs_tagger and tagger is not None else None
    fitted_relations = (
        clone(relation_model).fit(train_docs)
        if needs_relations and relation_model is not None
        else None
    )
    return [
        run_scenario(s, test_docs, fitted_tagger, resolver, fitted_relations, coref, fold=fold_id)
        for s in scenarios
    ]


def cross_validate(
    corpus: Corpus,
    tagger,
    resolver,
    relation_model: RelationExtractor,
    scenarios: Sequence[int] = (1, 2, 3, 4, 5, 6),
    k: int = 5,
    seed: int = 0,
    coref: Mapping[str, CorefPrediction] | None = None,
    n_jobs: int = 1,
) -> CrossValidationResult:
    """k-fold cross-validation of the whole pipeline under the given scenarios.

    Unfitted ``tagger`` and ``relation_model`` prototypes are cloned and
    trained per fold on the training documents only.  Folds may run in
    parallel; reports are merged in fold order, so results do not depend
    on scheduling.
    """
    folds = split_folds(corpus, k, seed)
    jobs = []
    for fold_id, (train_idx, test_idx) in enumerate(folds):
        train_docs = [corpus[i] for i in train_idx]
        test_docs = [corpus[i] for i in test_idx]
        jobs.append(
            (fold_id, train_docs, test_docs, tagger, resolver, relation_model, scenarios, coref)
        )
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            per_fold = list(pool.map(_run_fold, jobs))
    else:
        per_fold = [_run_fold(job) for job in jobs]
    reports = tuple(r for fold in per_fold for r in fold)
    averages = {
        s: average_reports([r for r in reports if r.scenario == s]) for s in scenarios
    }
    return CrossValidationResult(reports, averages)


# -- analyses -----------------------------------------------------------------


def relation_argument_distance(
    doc: Document, mentions: Sequence[Mention], entities: Sequence[Entity], rel: Relation
) -> int:
    """Smallest token gap between any head-entity and tail-entity mention."""
    heads = [mentions[i] for i in entities[rel.head].mention_ids]
    tails = [mentions[i] for i in entities[rel.tail].mention_ids]
    return min(mention_gap(h, t) for h in heads for t in tails)


@dataclass(frozen=True)
class DistanceBin:
    min_distance: int
    max_distance: int
    count: int
    precision: float


def precision_by_distance(
    doc_bundles: Sequence[tuple[Document, PredictedAnnotations]],
    bins: int = 5,
    quantile: float = 0.95,
) -> list[DistanceBin]:
    """Relation precision binned by argument distance.

    Predicted relations beyond the ``quantile`` distance are dropped, the
    rest are split into ``bins`` equal-count bins by distance, and each
    bin reports the fraction of its predictions that match gold exactly.
    """
    records: list[tuple[int, bool]] = []
    for doc, predicted in doc_bundles:
        gold_ekeys = [entity_key(doc.mentions, e) for e in doc.entities]
        gold_keys = {(gold_ekeys[r.head], gold_ekeys[r.tail], r.type) for r in doc.relations}
        pred_ekeys = [entity_key(predicted.mentions, e) for e in predicted.entities]
        for rel in predicted.relations:
            distance = relation_argument_distance(
                doc, predicted.mentions, predicted.entities, rel
            )
            key = (pred_ekeys[rel.head], pred_ekeys[rel.tail], rel.type)
            records.append((distance, key in gold_keys))
    if len(records) < bins:
        raise ValueError(f"need at least {bins} relations, got {len(records)}")
    records.sort(key=lambda r: r[0])
    keep = int(quantile * len(records))
    records = records[:keep]
    out = []
    for chunk in np.array_split(np.arange(len(records)), bins):
        subset = [records[i] for i in chunk]
        out.append(
            DistanceBin(
                min_distance=subset[0][0],
                max_distance=subset[-1][0],
                count=len(subset),
                precision=sum(1 for _, ok in subset if ok) / len(subset),
            )
        )
    return out


@dataclass(frozen=True)
class SweepRow:
    negative_rate: int
    precision: float
    recall: float
    f1: float


def sampling_rate_sweep(
    corpus: Corpus,
    rates: Sequence[int],
    context_size: int = 2,
    iterations: int = 100,
    seeds: Sequence[int] = (0, 1, 2),
    train_fraction: float = 0.8,
    learning_rate: float = 0.1,
    max_depth: int = 4,
) -> list[SweepRow]:
    """Relation-extraction quality as a function of the negative sampling rate.

    For every rate and seed a fresh model is trained on a seeded document
    split and evaluated on the held-out documents with gold entities
    (scenario 6); scores are averaged over seeds.  Rows come back sorted
    by rate.
    """
    if not rates:
        raise ValueError("need at least one sampling rate")
    rows = []
    for rate in sorted(rates):
        scores = []
        for seed in seeds:
            order = list(range(len(corpus)))
            np.random.default_rng(seed).shuffle(order)
            cut = max(1, int(train_fraction * len(order)))
            train_docs = [corpus[i] for i in order[:cut]]
            test_docs = [corpus[i] for i in order[cut:]] or train_docs
            model = RelationExtractor(
                negative_rate=rate,
                context_size=context_size,
                iterations=iterations,
                learning_rate=learning_rate,
                max_depth=max_depth,
                seed=seed,
            ).fit(train_docs)
            report = run_scenario(6, test_docs, None, None, model)
            scores.append(report.micro)
        rows.append(
            SweepRow(
                negative_rate=rate,
                precision=sum(s.precision for s in scores) / len(scores),
                recall=sum(s.recall for s in scores) / len(scores),
                f1=sum(s.f1 for s in scores) / len(scores),
            )
        )
    return rows
