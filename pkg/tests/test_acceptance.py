"""Acceptance suite: one test per release criterion, at its stated tolerance.

Criterion 1 runs its full-corpus assertions only when the real annotated
corpus is available (point PROCEX_PET_CORPUS at the JSONL file); the
bundled 5-document fixture path always runs.
"""

from __future__ import annotations

import itertools
import json
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from procex import crf
from procex.boosting import GradientBoostedTreesClassifier
from procex.cli import main as cli_main
from procex.corpus import load_corpus, save_corpus, split_folds
from procex.evaluation import (
    macro_prf,
    match_mentions,
    merge_counts,
    micro_prf,
    per_class_prf,
    run_scenario,
    sampling_rate_sweep,
)
from procex.relex import RelationExtractor
from procex.resolution import AlignmentEntityResolver, CorefPrediction, NaiveEntityResolver
from procex.synthetic import (
    NoisyMentionOracle,
    fixture_path,
    relation_corpus,
    tagging_corpus,
)
from procex.stats import entity_statistics, mention_statistics, relation_statistics
from procex.tagger import CrfTagger

from test_evaluation import (
    CASES,
    brute_force_metrics,
    implementation_counts,
    oracle_counts,
)
from test_resolution import cluster_doc


PET_ENV = "PROCEX_PET_CORPUS"

PET_TABLE_1 = {
    # tag: (absolute count, relative %, average length)
    "Activity": (501, 30.16, 1.10),
    "Activity Data": (451, 27.21, 3.49),
    "Actor": (439, 26.43, 2.32),
    "Further Specification": (64, 3.86, 5.19),
    "XOR Gateway": (117, 7.04, 1.26),
    "AND Gateway": (8, 0.48, 2.12),
    "Condition Specification": (80, 4.82, 6.04),
}
PET_TABLE_2 = {
    "Flows": (674, 39.10),
    "Uses": (468, 27.15),
    "Actor Performer": (312, 18.10),
    "Actor Recipient": (164, 9.51),
    "Further Specification": (64, 3.71),
    "Same Gateway": (42, 2.44),
}
PET_TABLE_3 = {
    # tag: (entities, multi-mention, median distance, mean distance)
    "Activity Data": (320, 75, 16, 31.93),
    "Actor": (175, 88, 32, 54.84),
}


class TestCriterion1DatasetStatistics:
    def test_fixture_statistics_match_hand_computed_values(self):
        start = time.monotonic()
        corpus = load_corpus(fixture_path())
        mention_rows = {r.tag: r for r in mention_statistics(corpus)}
        relation_rows = {r.type: r for r in relation_statistics(corpus)}
        entity_rows = {r.tag: r for r in entity_statistics(corpus)}
        elapsed = time.monotonic() - start

        assert mention_rows["Activity"].absolute_count == 13
        assert mention_rows["Activity Data"].absolute_count == 12
        assert mention_rows["Actor"].absolute_count == 15
        assert mention_rows["Actor"].average_length == pytest.approx(1.8, abs=1e-12)
        assert mention_rows["Actor"].length_stddev == pytest.approx(
            0.5416025603090641, abs=1e-12
        )
        assert mention_rows["Condition Specification"].average_length == 4.0

        assert {rt: r.absolute_count for rt, r in relation_rows.items()} == {
            "Flows": 12, "Uses": 12, "Actor Performer": 13,
            "Actor Recipient": 2, "Further Specification": 2, "Same Gateway": 1,
        }

        ad = entity_rows["Activity Data"]
        assert (ad.absolute_count, ad.multi_mention_count) == (7, 4)
        assert ad.distance_median == pytest.approx(5.5, abs=1e-12)
        assert ad.distance_mean == pytest.approx(7.5, abs=1e-12)
        actor = entity_rows["Actor"]
        assert (actor.absolute_count, actor.multi_mention_count) == (10, 5)
        assert actor.distance_median == pytest.approx(5, abs=1e-12)
        assert actor.distance_mean == pytest.approx(7.8, abs=1e-12)

        assert elapsed < 10.0

    @pytest.mark.skipif(PET_ENV not in os.environ, reason="real corpus not available")
    def test_real_corpus_reproduces_published_tables(self):
        start = time.monotonic()
        corpus = load_corpus(os.environ[PET_ENV])
        assert len(corpus) == 45
        mention_rows = {r.tag: r for r in mention_statistics(corpus)}
        relation_rows = {r.type: r for r in relation_statistics(corpus)}
        entity_rows = {r.tag: r for r in entity_statistics(corpus)}
        elapsed = time.monotonic() - start

        for tag, (count, relative, avg_len) in PET_TABLE_1.items():
            assert mention_rows[tag].absolute_count == count
            assert mention_rows[tag].average_length == pytest.approx(avg_len, abs=0.005)
            assert mention_rows[tag].relative_count * 100 == pytest.approx(
                relative, abs=0.05
            )
        for rt, (count, relative) in PET_TABLE_2.items():
            assert relation_rows[rt].absolute_count == count
            assert relation_rows[rt].relative_count * 100 == pytest.approx(
                relative, abs=0.05
            )
        for tag, (count, multi, median, mean) in PET_TABLE_3.items():
            assert entity_rows[tag].absolute_count == count
            assert entity_rows[tag].multi_mention_count == multi
            assert entity_rows[tag].distance_median == median
            assert entity_rows[tag].distance_mean == pytest.approx(mean, abs=0.01)
        assert elapsed < 10.0


class TestCriterion2EvaluatorOracle:
    def test_twenty_cases_match_brute_force_exactly(self):
        assert len(CASES) == 20
        for name, predicted, gold in CASES:
            for level in ("mention", "entity", "relation"):
                counts = implementation_counts(predicted, gold, level)
                expected = oracle_counts(predicted, gold, level)
                assert {
                    cls: (c.true_positives, c.predicted_count, c.gold_count)
                    for cls, c in counts.items()
                } == expected, (name, level)
                reference = brute_force_metrics(expected)
                micro, macro = micro_prf(counts), macro_prf(counts)
                for got, want in [
                    (micro.precision, reference["micro"][0]),
                    (micro.recall, reference["micro"][1]),
                    (micro.f1, reference["micro"][2]),
                    (macro.precision, reference["macro"][0]),
                    (macro.recall, reference["macro"][1]),
                    (macro.f1, reference["macro"][2]),
                ]:
                    assert abs(got - want) <= 1e-12, (name, level)
                for cls, prf in per_class_prf(counts).items():
                    assert abs(prf.f1 - reference["per_class"][cls][2]) <= 1e-12

    def test_error_propagation_cascade(self):
        name, predicted, gold = CASES[-1]
        assert name == "cascade_one_wrong_token_breaks_everything"
        mention = implementation_counts(predicted, gold, "mention")
        entity = implementation_counts(predicted, gold, "entity")
        relation = implementation_counts(predicted, gold, "relation")
        assert mention["Actor"].true_positives == 0
        assert entity["Actor"].true_positives == 0
        assert relation["Actor Performer"].true_positives == 0


class TestCriterion3CrfNumerics:
    def test_gradient_partition_and_viterbi_oracles(self):
        start = time.monotonic()

        # finite differences on a 3-token, 3-label instance
        rng = np.random.default_rng(11)
        n_labels, n_features = 3, 6
        state = rng.normal(size=(n_features, n_labels)) * 0.7
        trans = rng.normal(size=(n_labels, n_labels)) * 0.7
        features = [[0, 3], [1, 4], [2, 5]]
        labels = [1, 0, 2]

        def objective(flat):
            sw = flat[: n_features * n_labels].reshape(n_features, n_labels)
            tw = flat[n_features * n_labels :].reshape(n_labels, n_labels)
            value, _, _ = crf.log_likelihood_and_gradient(sw, tw, [(features, labels)], l2=0.1)
            return value

        _, g_state, g_trans = crf.log_likelihood_and_gradient(
            state, trans, [(features, labels)], l2=0.1
        )
        analytic = np.concatenate([g_state.ravel(), g_trans.ravel()])
        flat = np.concatenate([state.ravel(), trans.ravel()])
        h = 1e-5
        numeric = np.empty_like(flat)
        for i in range(flat.size):
            bump = np.zeros_like(flat)
            bump[i] = h
            numeric[i] = (objective(flat + bump) - objective(flat - bump)) / (2 * h)
        denom = np.maximum(1e-8, np.abs(analytic) + np.abs(numeric))
        assert (np.abs(analytic - numeric) / denom).max() < 1e-4

        # partition function and viterbi vs exhaustive enumeration, lengths <= 4
        for n_tokens in (1, 2, 3, 4):
            feats = [[t % n_features, (t + 1) % n_features] for t in range(n_tokens)]
            emissions = crf.emission_scores(state, feats)

            def path_score(ys):
                s = sum(emissions[t, y] for t, y in enumerate(ys))
                return s + sum(trans[ys[t - 1], ys[t]] for t in range(1, n_tokens))

            all_paths = list(itertools.product(range(n_labels), repeat=n_tokens))
            brute = math.log(sum(math.exp(path_score(p)) for p in all_paths))
            assert abs(crf.log_partition(emissions, trans) - brute) < 1e-8
            assert crf.viterbi_decode(emissions, trans) == list(max(all_paths, key=path_score))

        assert time.monotonic() - start < 5.0


class TestCriterion4CrfLearning:
    def test_training_f1_on_synthetic_corpus(self):
        start = time.monotonic()
        docs = list(tagging_corpus(20, seed=13))
        tagger = CrfTagger(epochs=50, seed=0).fit(docs)
        counts = merge_counts(
            match_mentions(tagger.predict_single(d), d.mentions) for d in docs
        )
        assert micro_prf(counts).f1 >= 0.95
        assert time.monotonic() - start < 60.0


class TestCriterion5EntityResolution:
    def test_discard_rules_and_transitive_closure(self):
        doc = cluster_doc()
        mentions = list(doc.mentions)

        # rule 1: unmapped span dropped, cluster survives at alpha_c = 0.5
        coref = CorefPrediction("d", (((0, 1), (10, 11)),))
        entities = AlignmentEntityResolver().resolve(doc, mentions, coref)
        assert sorted(e.mention_ids for e in entities) == [(0,), (1,), (2,), (3,)]

        # rule 2: low index overlap dropped
        coref = CorefPrediction("d", (((0, 3), (3, 4)),))
        entities = AlignmentEntityResolver(alpha_m=0.8).resolve(doc, mentions, coref)
        assert sorted(e.mention_ids for e in entities) == [(0,), (1,), (2,), (3,)]

        # rule 3: minority tag dropped, majority cluster survives
        coref = CorefPrediction("d", (((0, 1), (3, 4), (6, 7)),))
        entities = AlignmentEntityResolver(alpha_c=0.5).resolve(doc, mentions, coref)
        assert sorted(e.mention_ids for e in entities) == [(0, 1), (2,), (3,)]

        # rule 4: cluster with survivor fraction below alpha_c fully discarded
        coref = CorefPrediction("d", (((0, 1), (10, 11), (5, 5)),))
        entities = AlignmentEntityResolver(alpha_c=0.5).resolve(doc, mentions, coref)
        assert sorted(e.mention_ids for e in entities) == [(0,), (1,), (2,), (3,)]

        # transitive closure in the naive resolver
        from procex.corpus import Document, Entity, Mention

        chain_doc = Document(
            name="chain",
            tokens=("u", "v", "w", "x", "u", "v", "w", "y", "u", "z", "w", "y"),
            sentence_ids=(0,) * 12,
            mentions=(
                Mention(0, 3, "Actor"), Mention(4, 7, "Actor"), Mention(8, 11, "Actor")
            ),
            entities=(Entity((0,)), Entity((1,)), Entity((2,))),
        )
        entities = NaiveEntityResolver(alpha_m=0.75).resolve(
            chain_doc, list(chain_doc.mentions)
        )
        assert sorted(e.mention_ids for e in entities) == [(0, 1, 2)]

    def test_partition_property_over_thousand_instances(self):
        from procex.corpus import Document, Mention, TAG_SET

        rng = np.random.default_rng(99)
        naive = NaiveEntityResolver()
        align = AlignmentEntityResolver()
        for trial in range(1000):
            n_tokens = int(rng.integers(3, 25))
            tokens = tuple(f"w{rng.integers(0, 6)}" for _ in range(n_tokens))
            mentions = []
            position = 0
            while position < n_tokens:
                if rng.random() < 0.5:
                    end = min(n_tokens - 1, position + int(rng.integers(0, 3)))
                    mentions.append(
                        Mention(position, end, TAG_SET[rng.integers(0, len(TAG_SET))])
                    )
                    position = end + 1
                else:
                    position += 1
            doc = Document(
                name="r", tokens=tokens, sentence_ids=(0,) * n_tokens,
                mentions=tuple(mentions),
            )
            clusters = tuple(
                tuple(
                    (lambda s: (s, min(n_tokens - 1, s + int(rng.integers(0, 3)))))(
                        int(rng.integers(0, n_tokens))
                    )
                    for _ in range(int(rng.integers(1, 4)))
                )
                for _ in range(int(rng.integers(0, 3)))
            )
            for entities in (
                naive.resolve(doc, mentions),
                align.resolve(doc, mentions, CorefPrediction("r", clusters)),
            ):
                covered = sorted(i for e in entities for i in e.mention_ids)
                assert covered == list(range(len(mentions))), trial


class TestCriterion6RelationExtraction:
    def test_separable_table_and_sampling_direction(self):
        start = time.monotonic()

        # perfect fit on a separable feature table within 100 iterations
        rng = np.random.default_rng(0)
        cat = rng.integers(0, 5, size=240).astype(float)
        num = rng.normal(size=240) * 10
        y = np.where(cat >= 3, "a", np.where(num > 0, "b", "c"))
        X = np.column_stack([cat, num])
        model = GradientBoostedTreesClassifier(
            n_iterations=100, categorical_features=(0,), seed=0
        ).fit(X, y)
        assert (model.predict(X) == y).mean() == 1.0

        # negative-sampling direction, averaged over three seeds
        corpus = relation_corpus(12, seed=7)
        rows = {
            r.negative_rate: r
            for r in sampling_rate_sweep(
                corpus, rates=[1, 40], iterations=100, seeds=(0, 1, 2)
            )
        }
        assert rows[40].precision > rows[1].precision
        assert rows[40].recall < rows[1].recall

        assert time.monotonic() - start < 300.0


class TestCriterion7ScenarioMonotonicity:
    def test_relation_f1_ordering_under_injected_noise(self):
        corpus = relation_corpus(12, seed=7)
        resolver = NaiveEntityResolver()
        noisy_tagger = NoisyMentionOracle(noise=0.3, seed=0)
        scores = {4: [], 5: [], 6: []}
        for train_idx, test_idx in split_folds(corpus, 3, seed=0):
            train = [corpus[i] for i in train_idx]
            test = [corpus[i] for i in test_idx]
            model = RelationExtractor(negative_rate=40, iterations=100, seed=0).fit(train)
            for scenario in (4, 5, 6):
                report = run_scenario(scenario, test, noisy_tagger, resolver, model)
                scores[scenario].append(report.micro.f1)
        mean = {s: sum(v) / len(v) for s, v in scores.items()}
        assert mean[4] <= mean[5] <= mean[6]


class TestCriterion8Determinism:
    def test_run_twice_across_processes_is_byte_identical(self, tmp_path):
        # separate interpreter invocations randomize string hashing, which
        # catches any hash-order dependence the in-process test cannot see
        import subprocess
        import sys

        corpus_path = tmp_path / "corpus.jsonl"
        save_corpus(relation_corpus(5, seed=3), corpus_path)
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({
            "relations": {"iterations": 6, "negative_rate": 3},
            "tagger": {"epochs": 2},
        }))
        trees = []
        for name in ("p1", "p2"):
            out = tmp_path / name
            proc = subprocess.run(
                [sys.executable, "-m", "procex.cli", "run",
                 "--config", str(config_path), "--corpus", str(corpus_path),
                 "--seed", "5", "--folds", "2", "--scenarios", "1,4",
                 "--out", str(out)],
                capture_output=True, text=True,
            )
            assert proc.returncode == 0, proc.stderr
            trees.append({
                str(p.relative_to(out)): p.read_bytes()
                for p in sorted(out.rglob("*")) if p.is_file()
            })
        assert trees[0] == trees[1]

    def test_run_twice_is_byte_identical(self, tmp_path):
        corpus_path = tmp_path / "corpus.jsonl"
        save_corpus(relation_corpus(6, seed=3), corpus_path)
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({
            "relations": {"iterations": 8, "negative_rate": 3},
            "tagger": {"epochs": 3},
        }))
        runner = CliRunner()
        trees = []
        for name in ("one", "two"):
            out = tmp_path / name
            result = runner.invoke(cli_main, [
                "run", "--config", str(config_path), "--corpus", str(corpus_path),
                "--seed", "17", "--folds", "2", "--scenarios", "1,4,6",
                "--out", str(out),
            ])
            assert result.exit_code == 0, result.output
            trees.append({
                str(p.relative_to(out)): p.read_bytes()
                for p in sorted(out.rglob("*")) if p.is_file()
            })
        assert trees[0].keys() == trees[1].keys()
        assert trees[0] == trees[1]


class TestCriterion9ReferencePointsAreDocumentedNotGated:
    def test_readme_records_published_reference_scores(self):
        readme = Path(__file__).resolve().parent.parent / "README.md"
        text = readme.read_text(encoding="utf-8")
        for value in ("0.32", "0.79", "0.60", "0.66"):
            assert value in text
        assert "not" in text.lower()  # documented explicitly as non-gates
