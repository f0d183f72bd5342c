from __future__ import annotations

import itertools

import pytest

from procex.corpus import Document, Entity, Mention, Relation
from procex.evaluation import (
    MatchCount,
    PredictedAnnotations,
    average_reports,
    cross_validate,
    entity_key,
    macro_prf,
    match_entities,
    match_mentions,
    match_relations,
    mention_key,
    micro_prf,
    per_class_prf,
    precision_by_distance,
    relation_argument_distance,
    run_scenario,
    sampling_rate_sweep,
)
from procex.relex import RelationExtractor
from procex.resolution import NaiveEntityResolver
from procex.synthetic import NoisyMentionOracle, relation_corpus


# -- brute-force oracle ---------------------------------------------------------


def brute_force_max_matching(predicted: list, gold: list) -> int:
    """Maximum one-to-one matching size, by trying every injective assignment."""
    if len(predicted) > len(gold):
        predicted, gold = gold, predicted
    best = 0
    for assignment in itertools.permutations(range(len(gold)), len(predicted)):
        matched = sum(1 for i, j in enumerate(assignment) if predicted[i] == gold[j])
        best = max(best, matched)
    return best


def brute_force_counts(predicted_keys: list, gold_keys: list, class_of) -> dict:
    classes = {class_of(k) for k in predicted_keys} | {class_of(k) for k in gold_keys}
    counts = {}
    for cls in classes:
        pred = [k for k in predicted_keys if class_of(k) == cls]
        gold = [k for k in gold_keys if class_of(k) == cls]
        counts[cls] = (brute_force_max_matching(pred, gold), len(pred), len(gold))
    return counts


def brute_force_metrics(counts: dict) -> dict:
    def prf(tp, pred, gold):
        p = tp / pred if pred else 0.0
        r = tp / gold if gold else 0.0
        f1 = 2 * p * r / (p + r) if p + r else 0.0
        return p, r, f1

    tp = sum(c[0] for c in counts.values())
    pred = sum(c[1] for c in counts.values())
    gold = sum(c[2] for c in counts.values())
    micro = prf(tp, pred, gold)
    rows = [prf(*c) for c in counts.values() if c[2] > 0]
    if rows:
        macro = tuple(sum(r[i] for r in rows) / len(rows) for i in range(3))
    else:
        macro = (0.0, 0.0, 0.0)
    return {"micro": micro, "macro": macro, "per_class": {c: prf(*v) for c, v in counts.items()}}


# -- the 20-case fixture --------------------------------------------------------


def bundle(mentions, entities=None, relations=None):
    mentions = tuple(mentions)
    entities = tuple(entities) if entities is not None else tuple(
        Entity((i,)) for i in range(len(mentions))
    )
    return PredictedAnnotations(mentions, entities, tuple(relations or ()))


M = Mention
E = Entity
R = Relation

# Each case: (name, predicted bundle, gold bundle).  Mentions reference a
# nominal 30-token document; entities index mentions; relations index entities.
CASES = [
    ("identical_mentions",
     bundle([M(0, 1, "Actor"), M(3, 3, "Activity")]),
     bundle([M(0, 1, "Actor"), M(3, 3, "Activity")])),
    ("span_off_by_one",
     bundle([M(0, 2, "Actor")]),
     bundle([M(0, 1, "Actor")])),
    ("wrong_tag_right_span",
     bundle([M(0, 1, "Activity Data")]),
     bundle([M(0, 1, "Actor")])),
    ("missing_mention",
     bundle([M(0, 1, "Actor")]),
     bundle([M(0, 1, "Actor"), M(5, 6, "Activity Data")])),
    ("extra_mention",
     bundle([M(0, 1, "Actor"), M(9, 9, "Activity")]),
     bundle([M(0, 1, "Actor")])),
    ("empty_predictions",
     bundle([]),
     bundle([M(0, 1, "Actor")])),
    ("empty_gold",
     bundle([M(0, 1, "Actor")]),
     bundle([])),
    ("both_empty",
     bundle([]),
     bundle([])),
    ("two_classes_one_perfect_one_missed",
     bundle([M(0, 1, "Actor"), M(4, 4, "Activity")]),
     bundle([M(0, 1, "Actor"), M(7, 7, "Activity")])),
    ("duplicate_predictions_match_once",
     bundle([M(0, 1, "Actor"), M(0, 1, "Actor")], [E((0,)), E((1,))]),
     bundle([M(0, 1, "Actor")])),
    ("entity_exact_match",
     bundle([M(0, 1, "Actor"), M(5, 6, "Actor")], [E((0, 1))]),
     bundle([M(0, 1, "Actor"), M(5, 6, "Actor")], [E((0, 1))])),
    ("entity_missing_one_of_three_mentions",
     bundle([M(0, 1, "Actor"), M(5, 6, "Actor")], [E((0, 1))]),
     bundle([M(0, 1, "Actor"), M(5, 6, "Actor"), M(9, 10, "Actor")], [E((0, 1, 2))])),
    ("all_singletons_match",
     bundle([M(0, 1, "Actor"), M(5, 6, "Activity Data")]),
     bundle([M(0, 1, "Actor"), M(5, 6, "Activity Data")])),
    ("entity_with_wrong_span_mention",
     bundle([M(0, 2, "Actor"), M(5, 6, "Actor")], [E((0, 1))]),
     bundle([M(0, 1, "Actor"), M(5, 6, "Actor")], [E((0, 1))])),
    ("entity_split_into_two",
     bundle([M(0, 1, "Actor"), M(5, 6, "Actor")], [E((0,)), E((1,))]),
     bundle([M(0, 1, "Actor"), M(5, 6, "Actor")], [E((0, 1))])),
    ("relation_exact_match",
     bundle([M(0, 1, "Actor"), M(3, 3, "Activity")], None,
            [R(1, 0, "Actor Performer")]),
     bundle([M(0, 1, "Actor"), M(3, 3, "Activity")], None,
            [R(1, 0, "Actor Performer")])),
    ("relation_wrong_direction",
     bundle([M(0, 1, "Actor"), M(3, 3, "Activity")], None,
            [R(0, 1, "Actor Performer")]),
     bundle([M(0, 1, "Actor"), M(3, 3, "Activity")], None,
            [R(1, 0, "Actor Performer")])),
    ("relation_wrong_type",
     bundle([M(0, 1, "Actor"), M(3, 3, "Activity")], None, [R(1, 0, "Uses")]),
     bundle([M(0, 1, "Actor"), M(3, 3, "Activity")], None,
            [R(1, 0, "Actor Performer")])),
    ("relation_with_incomplete_argument_entity",
     bundle([M(0, 1, "Actor"), M(5, 6, "Actor"), M(9, 9, "Activity")],
            [E((0,)), E((1,)), E((2,))], [R(2, 0, "Actor Performer")]),
     bundle([M(0, 1, "Actor"), M(5, 6, "Actor"), M(9, 9, "Activity")],
            [E((0, 1)), E((2,))], [R(1, 0, "Actor Performer")])),
    ("cascade_one_wrong_token_breaks_everything",
     bundle([M(0, 2, "Actor"), M(9, 9, "Activity")],
            [E((0,)), E((1,))], [R(1, 0, "Actor Performer")]),
     bundle([M(0, 1, "Actor"), M(9, 9, "Activity")],
            [E((0,)), E((1,))], [R(1, 0, "Actor Performer")])),
]


def implementation_counts(predicted, gold, level):
    if level == "mention":
        return match_mentions(predicted.mentions, gold.mentions)
    if level == "entity":
        return match_entities(
            predicted.mentions, predicted.entities, gold.mentions, gold.entities
        )
    return match_relations(
        predicted.mentions, predicted.entities, predicted.relations,
        gold.mentions, gold.entities, gold.relations,
    )


def oracle_counts(predicted, gold, level):
    if level == "mention":
        pred_keys = [mention_key(m) for m in predicted.mentions]
        gold_keys = [mention_key(m) for m in gold.mentions]
        return brute_force_counts(pred_keys, gold_keys, lambda k: k[2])
    if level == "entity":
        pred_keys = [entity_key(predicted.mentions, e) for e in predicted.entities]
        gold_keys = [entity_key(gold.mentions, e) for e in gold.entities]
        return brute_force_counts(pred_keys, gold_keys, lambda k: next(iter(k))[2])

    def relation_keys(b):
        ekeys = [entity_key(b.mentions, e) for e in b.entities]
        return [(ekeys[r.head], ekeys[r.tail], r.type) for r in b.relations]

    return brute_force_counts(relation_keys(predicted), relation_keys(gold), lambda k: k[2])


class TestMatchingAgainstBruteForce:
    @pytest.mark.parametrize("name,predicted,gold", CASES, ids=[c[0] for c in CASES])
    @pytest.mark.parametrize("level", ["mention", "entity", "relation"])
    def test_counts_and_metrics_equal_oracle(self, name, predicted, gold, level):
        counts = implementation_counts(predicted, gold, level)
        expected = oracle_counts(predicted, gold, level)

        assert {
            cls: (c.true_positives, c.predicted_count, c.gold_count)
            for cls, c in counts.items()
        } == expected

        reference = brute_force_metrics(expected)
        micro = micro_prf(counts)
        macro = macro_prf(counts)
        assert abs(micro.precision - reference["micro"][0]) < 1e-12
        assert abs(micro.recall - reference["micro"][1]) < 1e-12
        assert abs(micro.f1 - reference["micro"][2]) < 1e-12
        assert abs(macro.precision - reference["macro"][0]) < 1e-12
        assert abs(macro.recall - reference["macro"][1]) < 1e-12
        assert abs(macro.f1 - reference["macro"][2]) < 1e-12
        for cls, prf in per_class_prf(counts).items():
            assert abs(prf.precision - reference["per_class"][cls][0]) < 1e-12
            assert abs(prf.recall - reference["per_class"][cls][1]) < 1e-12
            assert abs(prf.f1 - reference["per_class"][cls][2]) < 1e-12

    def test_cascade_case_fails_at_every_level(self):
        _, predicted, gold = CASES[-1]
        for level in ("mention", "entity", "relation"):
            counts = implementation_counts(predicted, gold, level)
            by_class = {c: v.true_positives for c, v in counts.items()}
            if level == "mention":
                assert by_class == {"Actor": 0, "Activity": 1}
            else:
                assert all(
                    v.true_positives < v.gold_count
                    for c, v in counts.items()
                    if c == "Actor" or level == "relation"
                )


class TestMicroMacro:
    def test_hand_computed_single_class(self):
        counts = {"Uses": MatchCount(1, 2, 1)}
        micro = micro_prf(counts)
        assert (micro.precision, micro.recall) == (0.5, 1.0)
        assert micro.f1 == pytest.approx(2 / 3, abs=1e-12)

    def test_hand_computed_two_classes_macro(self):
        counts = {"A": MatchCount(2, 2, 2), "B": MatchCount(0, 1, 3)}
        macro = macro_prf(counts)
        assert macro.f1 == pytest.approx(0.5, abs=1e-12)
        micro = micro_prf(counts)
        assert micro.precision == pytest.approx(2 / 3, abs=1e-12)
        assert micro.recall == pytest.approx(2 / 5, abs=1e-12)

    def test_all_zero_counts(self):
        counts = {"A": MatchCount(0, 0, 0)}
        assert micro_prf(counts) == macro_prf(counts)
        assert micro_prf(counts).f1 == 0.0

    def test_zero_gold_classes_are_excluded_from_macro(self):
        counts = {"A": MatchCount(1, 1, 1), "B": MatchCount(0, 5, 0)}
        assert macro_prf(counts).f1 == 1.0
        assert micro_prf(counts).precision == pytest.approx(1 / 6, abs=1e-12)

    def test_swapping_predicted_and_gold_swaps_precision_and_recall(self):
        predicted = bundle([M(0, 1, "Actor"), M(3, 3, "Activity"), M(9, 9, "Activity")])
        gold = bundle([M(0, 1, "Actor"), M(5, 6, "Activity Data")])
        forward = micro_prf(match_mentions(predicted.mentions, gold.mentions))
        backward = micro_prf(match_mentions(gold.mentions, predicted.mentions))
        assert forward.precision == backward.recall
        assert forward.recall == backward.precision
        assert forward.f1 == backward.f1

    def test_micro_invariant_under_class_relabeling(self):
        counts = {"A": MatchCount(1, 2, 3), "B": MatchCount(2, 4, 2)}
        renamed = {"X": counts["A"], "Y": counts["B"]}
        assert micro_prf(counts) == micro_prf(renamed)
        permuted = {"B": counts["B"], "A": counts["A"]}
        assert macro_prf(counts) == macro_prf(permuted)

    def test_correct_prediction_never_hurts(self):
        base = {"A": MatchCount(1, 2, 3)}
        better = {"A": MatchCount(2, 3, 3)}
        for metric in (micro_prf, macro_prf):
            assert metric(better).precision >= metric(base).precision
            assert metric(better).recall >= metric(base).recall
            assert metric(better).f1 >= metric(base).f1
        worse = {"A": MatchCount(1, 3, 3)}
        assert micro_prf(worse).recall <= micro_prf(base).recall


# -- scenarios ------------------------------------------------------------------


def memorizable_corpus():
    return relation_corpus(
        6, seed=5, flow_probability=1.0, coref_probability=0.0, unique_actors=True
    )


class TestScenarios:
    def test_unknown_scenario_id_is_rejected(self):
        with pytest.raises(ValueError, match="scenario"):
            run_scenario(7, [], None, None, None)

    def test_scenario_6_with_memorizing_model_is_perfect_on_train(self):
        docs = list(memorizable_corpus())
        model = RelationExtractor(negative_rate=40, iterations=150, seed=0).fit(docs)
        report = run_scenario(6, docs, None, None, model)
        assert report.micro.f1 == 1.0

    def test_scenario_3_ignores_tagger_quality(self):
        docs = list(memorizable_corpus())
        resolver = NaiveEntityResolver()
        bad_tagger = NoisyMentionOracle(noise=1.0, seed=0)
        good_tagger = NoisyMentionOracle(noise=0.0, seed=0)
        bad = run_scenario(3, docs, bad_tagger, resolver, None)
        good = run_scenario(3, docs, good_tagger, resolver, None)
        assert bad.micro == good.micro
        assert bad.level == "entity"

    def test_scenario_1_reports_mention_level(self):
        docs = list(memorizable_corpus())
        tagger = NoisyMentionOracle(noise=0.0, seed=0)
        report = run_scenario(1, docs, tagger, None, None)
        assert report.level == "mention"
        assert report.micro.f1 == 1.0


class TestCrossValidation:
    def test_five_folds_give_five_reports_per_scenario(self):
        corpus = relation_corpus(10, seed=3)
        result = cross_validate(
            corpus,
            tagger=None,
            resolver=NaiveEntityResolver(),
            relation_model=RelationExtractor(negative_rate=3, iterations=8, seed=0),
            scenarios=(3, 6),
            k=5,
            seed=0,
        )
        assert len(result.reports_for(3)) == 5
        assert len(result.reports_for(6)) == 5
        assert set(result.averages) == {3, 6}

    def test_deterministic_for_fixed_seed(self):
        corpus = relation_corpus(8, seed=3)
        kwargs = dict(
            tagger=None,
            resolver=NaiveEntityResolver(),
            relation_model=RelationExtractor(negative_rate=3, iterations=8, seed=0),
            scenarios=(6,),
            k=2,
            seed=4,
        )
        a = cross_validate(corpus, **kwargs)
        b = cross_validate(corpus, **kwargs)
        assert [r.to_dict() for r in a.fold_reports] == [r.to_dict() for r in b.fold_reports]

    def test_average_of_identical_scores_is_that_score(self):
        corpus = relation_corpus(8, seed=3)
        result = cross_validate(
            corpus,
            tagger=None,
            resolver=NaiveEntityResolver(),
            relation_model=RelationExtractor(negative_rate=3, iterations=8, seed=0),
            scenarios=(6,),
            k=2,
            seed=4,
        )
        reports = result.reports_for(6)
        mean = average_reports(reports)
        assert mean["micro"].f1 == pytest.approx(
            sum(r.micro.f1 for r in reports) / len(reports), abs=1e-12
        )


# -- analyses -------------------------------------------------------------------


def spaced_relation_bundle(n_relations: int, correct: set[int]):
    """One document with relations (0 -> i) at strictly increasing distances."""
    n_mentions = n_relations + 1
    mentions = tuple(M(3 * i, 3 * i, "Activity") for i in range(n_mentions))
    entities = tuple(E((i,)) for i in range(n_mentions))
    predicted_relations = tuple(R(0, i, "Flows") for i in range(1, n_mentions))
    gold_relations = tuple(R(0, i, "Flows") for i in correct)
    n_tokens = 3 * n_mentions
    doc = Document(
        name="d",
        tokens=tuple(f"t{i}" for i in range(n_tokens)),
        sentence_ids=(0,) * n_tokens,
        mentions=mentions,
        entities=entities,
        relations=gold_relations,
    )
    return doc, PredictedAnnotations(mentions, entities, predicted_relations)


class TestPrecisionByDistance:
    def test_all_correct_gives_unit_precision_everywhere(self):
        doc, predicted = spaced_relation_bundle(20, correct=set(range(1, 21)))
        for b in precision_by_distance([(doc, predicted)], bins=5, quantile=1.0):
            assert b.precision == 1.0

    def test_hundred_relations_trim_to_bins_of_nineteen(self):
        doc, predicted = spaced_relation_bundle(100, correct=set(range(1, 101)))
        result = precision_by_distance([(doc, predicted)], bins=5, quantile=0.95)
        assert [b.count for b in result] == [19] * 5

    def test_near_predictions_beat_far_ones(self):
        # first half correct, second half wrong: precision must fall with distance
        doc, predicted = spaced_relation_bundle(40, correct=set(range(1, 21)))
        result = precision_by_distance([(doc, predicted)], bins=5, quantile=1.0)
        assert result[0].precision >= result[-1].precision
        assert result[0].precision == 1.0
        assert result[-1].precision == 0.0

    def test_fewer_relations_than_bins_is_an_error(self):
        doc, predicted = spaced_relation_bundle(3, correct=set())
        with pytest.raises(ValueError):
            precision_by_distance([(doc, predicted)], bins=5)

    def test_argument_distance_is_minimum_over_mention_pairs(self):
        mentions = (M(0, 1, "Actor"), M(10, 11, "Actor"), M(14, 15, "Activity"))
        entities = (E((0, 1)), E((2,)))
        doc = Document(
            name="d",
            tokens=tuple(f"t{i}" for i in range(20)),
            sentence_ids=(0,) * 20,
            mentions=mentions,
            entities=entities,
        )
        # head entity has mentions at gaps 12 and 2 from the tail; min is 2
        assert relation_argument_distance(doc, mentions, entities, R(0, 1, "Uses")) == 2


class TestSamplingRateSweep:
    def test_single_rate_gives_single_row(self):
        corpus = relation_corpus(6, seed=3)
        rows = sampling_rate_sweep(corpus, rates=[2], iterations=8, seeds=(0,))
        assert len(rows) == 1
        assert rows[0].negative_rate == 2

    def test_rows_sorted_by_rate(self):
        corpus = relation_corpus(6, seed=3)
        rows = sampling_rate_sweep(corpus, rates=[5, 1], iterations=8, seeds=(0,))
        assert [r.negative_rate for r in rows] == [1, 5]

    def test_empty_rates_is_an_error(self):
        with pytest.raises(ValueError):
            sampling_rate_sweep(relation_corpus(4, seed=1), rates=[])
