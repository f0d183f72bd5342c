"""Command-line interface wiring the pipeline into reproducible runs.

Exit codes: 0 on success, 2 on bad input or configuration, 1 on any other
runtime failure.  ``PROCEX_OUTPUT`` sets the default output root.  Every
``run`` writes a manifest (configuration, seed, content hashes) from
which the run can be reproduced byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import click

from . import evaluation, stats
from .corpus import Corpus, Entity, Mention, Relation, load_corpus, split_folds
from .errors import ConfigurationError, CorpusFormatError, CorpusValidationError
from .relex import RelationExtractor
from .resolution import (
    AlignmentEntityResolver,
    NaiveEntityResolver,
    grid_search_alignment,
    load_coref_predictions,
)
from .tagger import CrfTagger
from .validation import check_fraction

_INPUT_ERRORS = (
    ConfigurationError,
    CorpusFormatError,
    CorpusValidationError,
    FileNotFoundError,
    KeyError,
    ValueError,
)


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guarded(fn):
    """Translate exceptions into the documented exit codes."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _INPUT_ERRORS as exc:
            _fail(str(exc), 2)
        except click.ClickException:
            raise
        except Exception as exc:  # pragma: no cover - defensive
            _fail(f"{type(exc).__name__}: {exc}", 1)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _output_root(out: str | None) -> Path:
    root = Path(out) if out else Path(os.environ.get("PROCEX_OUTPUT", "."))
    root.mkdir(parents=True, exist_ok=True)
    return root


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@click.group()
def main() -> None:
    """Process-element extraction toolkit."""


# -- stats ---------------------------------------------------------------------


@main.command("stats")
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--out", default=None, help="Output directory (default: PROCEX_OUTPUT or cwd).")
@click.option("--format", "fmt", type=click.Choice(["csv", "json", "both"]), default="both")
@_guarded
def cmd_stats(corpus_path: str, out: str | None, fmt: str) -> None:
    """Emit the mention/relation/entity statistics tables and matrices."""
    corpus = load_corpus(corpus_path)
    if not len(corpus):
        raise ConfigurationError(f"corpus {corpus_path} contains no documents")
    root = _output_root(out)
    written = []

    mention_rows = stats.mention_statistics(corpus)
    relation_rows = stats.relation_statistics(corpus)
    entity_rows = stats.entity_statistics(corpus)
    correlation = stats.relation_argument_correlation(corpus)
    ttr = {
        "mentions": stats.mention_type_token_ratios(corpus),
        "relations": stats.relation_type_token_ratios(corpus),
    }

    if fmt in ("json", "both"):
        _write_json(root / "mention_stats.json", [asdict(r) for r in mention_rows])
        _write_json(root / "relation_stats.json", [asdict(r) for r in relation_rows])
        _write_json(root / "entity_stats.json", [asdict(r) for r in entity_rows])
        _write_json(root / "correlation.json", {
            "head": correlation.head_counts, "tail": correlation.tail_counts,
        })
        _write_json(root / "type_token_ratio.json", ttr)
        written += ["mention_stats.json", "relation_stats.json", "entity_stats.json",
                    "correlation.json", "type_token_ratio.json"]
    if fmt in ("csv", "both"):
        _write_csv(
            root / "mention_stats.csv",
            ["tag", "absolute count", "relative count", "per document",
             "per sentence", "average length", "standard dev."],
            [[r.tag, r.absolute_count, r.relative_count, r.per_document,
              r.per_sentence, r.average_length, r.length_stddev] for r in mention_rows],
        )
        _write_csv(
            root / "relation_stats.csv",
            ["type", "absolute count", "relative count", "per document", "per sentence"],
            [[r.type, r.absolute_count, r.relative_count, r.per_document, r.per_sentence]
             for r in relation_rows],
        )
        _write_csv(
            root / "entity_stats.csv",
            ["tag", "absolute count", "relative count", "per document", "per sentence",
             "multi-mention", "median distance", "average distance",
             "trimmed mean distance", "standard dev."],
            [[r.tag, r.absolute_count, r.relative_count, r.per_document, r.per_sentence,
              r.multi_mention_count, r.distance_median, r.distance_mean,
              r.distance_trimmed_mean, r.distance_stddev] for r in entity_rows],
        )
        _write_csv(root / "correlation.csv", *_correlation_table(correlation))
        _write_csv(
            root / "type_token_ratio.csv",
            ["group", "name", "ratio"],
            [["mention", tag, ratio] for tag, ratio in ttr["mentions"].items()]
            + [["relation", rt, ratio] for rt, ratio in ttr["relations"].items()],
        )
        written += ["mention_stats.csv", "relation_stats.csv", "entity_stats.csv",
                    "correlation.csv", "type_token_ratio.csv"]
    for name in written:
        click.echo(str(root / name))


def _correlation_table(correlation) -> tuple[list[str], list[list]]:
    header = (
        ["relation type"]
        + [f"head {tag}" for tag in correlation.tags]
        + [f"tail {tag}" for tag in correlation.tags]
    )
    rows = [
        [rt]
        + [correlation.cell(rt, "head", tag) for tag in correlation.tags]
        + [correlation.cell(rt, "tail", tag) for tag in correlation.tags]
        for rt in correlation.relation_types
    ]
    return header, rows


# -- train / predict -----------------------------------------------------------


@main.command("train")
@click.option("--module", type=click.Choice(["mentions", "relations"]), required=True)
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--out", "model_path", required=True, type=click.Path())
@click.option("--seed", type=int, required=True)
@click.option("--epochs", type=int, default=50, help="CRF epochs (mentions).")
@click.option("--l2", type=float, default=0.1, help="CRF L2 strength (mentions).")
@click.option("--learning-rate", type=float, default=0.1)
@click.option("--iterations", type=int, default=1000, help="Boosting rounds (relations).")
@click.option("--negative-rate", type=int, default=40, help="Negatives per positive (relations).")
@click.option("--context-size", type=int, default=2, help="Neighbour tags as context (relations).")
@_guarded
def cmd_train(module, corpus_path, model_path, seed, epochs, l2, learning_rate,
              iterations, negative_rate, context_size) -> None:
    """Train the mention tagger or the relation extractor on gold annotations."""
    corpus = load_corpus(corpus_path)
    documents = list(corpus)
    if module == "mentions":
        model = CrfTagger(l2=l2, epochs=epochs, learning_rate=learning_rate, seed=seed)
        model.fit(documents)
    else:
        model = RelationExtractor(
            negative_rate=negative_rate,
            context_size=context_size,
            iterations=iterations,
            learning_rate=learning_rate,
            seed=seed,
        )
        model.fit(documents)
    model.save(model_path)
    click.echo(model_path)


def _annotation_record(name: str, mentions, entities=None, relations=None) -> dict:
    record = {
        "name": name,
        "mentions": [{"start": m.start, "end": m.end, "tag": m.tag} for m in mentions],
    }
    if entities is not None:
        record["entities"] = [list(e.mention_ids) for e in entities]
    if relations is not None:
        record["relations"] = [{"head": r.head, "tail": r.tail, "type": r.type} for r in relations]
    return record


def _load_annotations(path: str | Path, corpus: Corpus) -> dict[str, dict]:
    """Read a predictions JSONL keyed by document name."""
    names = {doc.name for doc in corpus}
    records = {}
    with Path(path).open("r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, 1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                record = json.loads(raw)
                name = record["name"]
            except (json.JSONDecodeError, KeyError) as exc:
                raise CorpusFormatError(f"malformed annotation record: {exc}", lineno)
            if name not in names:
                raise CorpusFormatError(f"unknown document {name!r}", lineno)
            records[name] = record
    return records


def _parse_annotations(record: dict) -> tuple[list[Mention], list[Entity], list[Relation]]:
    mentions = [Mention(m["start"], m["end"], m["tag"]) for m in record.get("mentions", [])]
    entities = [Entity(ids) for ids in record.get("entities", [])]
    relations = [Relation(r["head"], r["tail"], r["type"]) for r in record.get("relations", [])]
    return mentions, entities, relations


@main.command("predict")
@click.option("--module", type=click.Choice(["mentions", "relations"]), required=True)
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--annotations", "annotations_path", default=None, type=click.Path(),
              help="Predicted mentions/entities JSONL for relation prediction "
                   "(default: gold annotations).")
@click.option("--out", "out_path", required=True, type=click.Path())
@_guarded
def cmd_predict(module, model_path, corpus_path, annotations_path, out_path) -> None:
    """Apply a trained model, writing one prediction record per document."""
    corpus = load_corpus(corpus_path)
    records = []
    if module == "mentions":
        model = CrfTagger.load(model_path)
        for doc in corpus:
            records.append(_annotation_record(doc.name, model.predict_single(doc)))
    else:
        model = RelationExtractor.load(model_path)
        given = (
            _load_annotations(annotations_path, corpus) if annotations_path else None
        )
        for doc in corpus:
            if given is None:
                mentions, entities = list(doc.mentions), list(doc.entities)
            else:
                mentions, entities, _ = _parse_annotations(given[doc.name])
            relations = model.predict(doc, mentions, entities)
            records.append(_annotation_record(doc.name, mentions, entities, relations))
    with Path(out_path).open("w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, sort_keys=True) + "\n")
    click.echo(out_path)


# -- resolve -------------------------------------------------------------------


@main.command("resolve")
@click.option("--strategy", type=click.Choice(["naive", "align"]), required=True)
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--mentions", "mentions_path", default=None, type=click.Path(),
              help="Predicted mentions JSONL (default: gold mentions).")
@click.option("--coref", "coref_path", default=None, type=click.Path())
@click.option("--alpha-m", type=float, default=0.8)
@click.option("--alpha-c", type=float, default=0.5)
@click.option("--out", "out_path", required=True, type=click.Path())
@_guarded
def cmd_resolve(strategy, corpus_path, mentions_path, coref_path, alpha_m, alpha_c, out_path):
    """Cluster mentions into entities with the chosen strategy."""
    corpus = load_corpus(corpus_path)
    check_fraction("alpha-m", alpha_m)
    check_fraction("alpha-c", alpha_c)
    if strategy == "align":
        if not coref_path:
            raise ConfigurationError("--strategy align requires --coref predictions")
        coref = load_coref_predictions(coref_path, corpus)
        resolver = AlignmentEntityResolver(alpha_m=alpha_m, alpha_c=alpha_c)
    else:
        coref = {}
        resolver = NaiveEntityResolver(alpha_m=alpha_m)
    given = _load_annotations(mentions_path, corpus) if mentions_path else None
    with Path(out_path).open("w", encoding="utf-8") as handle:
        for doc in corpus:
            mentions = (
                list(doc.mentions)
                if given is None
                else _parse_annotations(given[doc.name])[0]
            )
            if strategy == "align":
                entities = resolver.resolve(doc, mentions, coref.get(doc.name))
            else:
                entities = resolver.resolve(doc, mentions)
            record = _annotation_record(doc.name, mentions, entities)
            handle.write(json.dumps(record, sort_keys=True) + "\n")
    click.echo(out_path)


# -- evaluate ------------------------------------------------------------------


@main.command("evaluate")
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--predictions", "predictions_path", required=True, type=click.Path())
@click.option("--level", type=click.Choice(["mention", "entity", "relation"]), required=True)
@click.option("--out", "out_path", default=None, type=click.Path())
@_guarded
def cmd_evaluate(corpus_path, predictions_path, level, out_path) -> None:
    """Score a predictions file against gold annotations at one level."""
    corpus = load_corpus(corpus_path)
    given = _load_annotations(predictions_path, corpus)
    parts = []
    for doc in corpus:
        record = given.get(doc.name, {"mentions": []})
        mentions, entities, relations = _parse_annotations(record)
        if level == "mention":
            parts.append(evaluation.match_mentions(mentions, doc.mentions))
        elif level == "entity":
            parts.append(
                evaluation.match_entities(mentions, entities, doc.mentions, doc.entities)
            )
        else:
            parts.append(
                evaluation.match_relations(
                    mentions, entities, relations,
                    doc.mentions, doc.entities, doc.relations,
                )
            )
    counts = evaluation.merge_counts(parts)
    report = {
        "level": level,
        "micro": vars(evaluation.micro_prf(counts)),
        "macro": vars(evaluation.macro_prf(counts)),
        "per_class": {
            cls: vars(prf) for cls, prf in evaluation.per_class_prf(counts).items()
        },
    }
    text = json.dumps(report, sort_keys=True, indent=2)
    if out_path:
        Path(out_path).write_text(text + "\n", encoding="utf-8")
    click.echo(text)


# -- grid search ---------------------------------------------------------------


@main.command("grid-search")
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--coref", "coref_path", required=True, type=click.Path())
@click.option("--out", "out_path", default=None, type=click.Path())
@_guarded
def cmd_grid_search(corpus_path, coref_path, out_path) -> None:
    """Tune alignment thresholds against gold entities on a development corpus."""
    corpus = load_corpus(corpus_path)
    coref = load_coref_predictions(coref_path, corpus)
    result = grid_search_alignment(list(corpus), coref)
    payload = {
        "alpha_m": result.alpha_m,
        "alpha_c": result.alpha_c,
        "f1": result.f1,
        "surface": [list(point) for point in result.surface],
    }
    if out_path:
        _write_json(Path(out_path), payload)
    click.echo(json.dumps({k: payload[k] for k in ("alpha_m", "alpha_c", "f1")}, sort_keys=True))


# -- run -----------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    corpus: str
    seed: int
    coref: str | None = None
    folds: int = 5
    scenarios: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    strategy: str = "naive"
    alpha_m: float = 0.8
    alpha_c: float = 0.5
    tagger: dict = field(default_factory=dict)
    relations: dict = field(default_factory=dict)
    jobs: int = 1

    @classmethod
    def from_file(cls, path: str | None, overrides: dict) -> "RunConfig":
        data: dict = {}
        if path:
            try:
                data = json.loads(Path(path).read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"config file {path} is not valid JSON: {exc}")
            if not isinstance(data, dict):
                raise ConfigurationError(f"config file {path} must hold a JSON object")
        data.update({k: v for k, v in overrides.items() if v is not None})
        if "scenarios" in data:
            data["scenarios"] = tuple(int(s) for s in data["scenarios"])
        if "corpus" not in data:
            raise ConfigurationError("run needs a corpus (config file or --corpus)")
        if "seed" not in data:
            raise ConfigurationError("run needs an explicit seed")
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def validate(self) -> None:
        if not Path(self.corpus).exists():
            raise ConfigurationError(f"corpus file {self.corpus} does not exist")
        if self.coref and not Path(self.coref).exists():
            raise ConfigurationError(f"coref file {self.coref} does not exist")
        bad = [s for s in self.scenarios if s not in evaluation.SCENARIO_LEVELS]
        if bad:
            raise ConfigurationError(f"unknown scenarios: {bad}")
        if self.strategy not in ("naive", "align"):
            raise ConfigurationError(f"unknown resolver strategy {self.strategy!r}")
        if self.strategy == "align" and not self.coref:
            needing = [s for s in self.scenarios if s in (2, 3, 4, 5)]
            if needing:
                raise ConfigurationError(
                    "strategy 'align' requires coref predictions for scenarios "
                    f"{needing}"
                )
        check_fraction("alpha_m", self.alpha_m)
        check_fraction("alpha_c", self.alpha_c)


def _fold_job(args: tuple) -> list[Path]:
    config, fold_id, train_idx, test_idx, root = args
    corpus = load_corpus(config.corpus)
    train_docs = [corpus[i] for i in train_idx]
    test_docs = [corpus[i] for i in test_idx]
    coref = load_coref_predictions(config.coref, corpus) if config.coref else None

    tagger = CrfTagger(seed=config.seed, **config.tagger).fit(train_docs)
    relation_model = RelationExtractor(seed=config.seed, **config.relations).fit(train_docs)
    if config.strategy == "align":
        resolver = AlignmentEntityResolver(alpha_m=config.alpha_m, alpha_c=config.alpha_c)
    else:
        resolver = NaiveEntityResolver(alpha_m=config.alpha_m)

    written: list[Path] = []
    model_dir = root / "models" / f"fold{fold_id}"
    model_dir.mkdir(parents=True, exist_ok=True)
    tagger.save(model_dir / "mentions.json")
    relation_model.save(model_dir / "relations.json")
    written += [model_dir / "mentions.json", model_dir / "relations.json"]

    # full-pipeline predictions on the held-out documents
    predictions_dir = root / "predictions"
    predictions_dir.mkdir(parents=True, exist_ok=True)
    pred_path = predictions_dir / f"fold{fold_id}.jsonl"
    with pred_path.open("w", encoding="utf-8") as handle:
        for doc in test_docs:
            mentions = tagger.predict_single(doc)
            if config.strategy == "align":
                entities = resolver.resolve(doc, mentions, (coref or {}).get(doc.name))
            else:
                entities = resolver.resolve(doc, mentions)
            relations = relation_model.predict(doc, mentions, entities)
            handle.write(
                json.dumps(
                    _annotation_record(doc.name, mentions, entities, relations),
                    sort_keys=True,
                )
                + "\n"
            )
    written.append(pred_path)

    reports_dir = root / "reports"
    reports_dir.mkdir(parents=True, exist_ok=True)
    for scenario in config.scenarios:
        report = evaluation.run_scenario(
            scenario, test_docs, tagger, resolver, relation_model, coref, fold=fold_id
        )
        report_path = reports_dir / f"scenario{scenario}-fold{fold_id}.json"
        _write_json(report_path, report.to_dict())
        csv_path = reports_dir / f"scenario{scenario}-fold{fold_id}.csv"
        _write_report_csv(csv_path, report)
        written += [report_path, csv_path]
    return written


def _write_report_csv(path: Path, report) -> None:
    data = report.to_dict()
    rows = [
        ["micro", "", data["micro"]["precision"], data["micro"]["recall"],
         data["micro"]["f1"], "", "", ""],
        ["macro", "", data["macro"]["precision"], data["macro"]["recall"],
         data["macro"]["f1"], "", "", ""],
    ]
    for cls, values in sorted(data["per_class"].items()):
        rows.append([
            "class", cls, values["precision"], values["recall"], values["f1"],
            values["true_positives"], values["predicted"], values["gold"],
        ])
    _write_csv(
        path,
        ["kind", "class", "precision", "recall", "f1", "true positives", "predicted", "gold"],
        rows,
    )


@main.command("run")
@click.option("--config", "config_path", default=None, type=click.Path())
@click.option("--corpus", "corpus_path", default=None, type=click.Path())
@click.option("--coref", "coref_path", default=None, type=click.Path())
@click.option("--seed", type=int, default=None)
@click.option("--folds", type=int, default=None)
@click.option("--scenarios", default=None, help="Comma-separated scenario ids, e.g. 1,4,6.")
@click.option("--strategy", type=click.Choice(["naive", "align"]), default=None)
@click.option("--jobs", type=int, default=None)
@click.option("--out", default=None)
@_guarded
def cmd_run(config_path, corpus_path, coref_path, seed, folds, scenarios, strategy, jobs, out):
    """Cross-validated evaluation of the whole pipeline; flags override the config file."""
    overrides = {
        "corpus": corpus_path,
        "coref": coref_path,
        "seed": seed,
        "folds": folds,
        "strategy": strategy,
        "jobs": jobs,
        "scenarios": [s for s in scenarios.split(",") if s] if scenarios else None,
    }
    config = RunConfig.from_file(config_path, overrides)
    config.validate()
    root = _output_root(out)

    corpus = load_corpus(config.corpus)
    folds_spec = split_folds(corpus, config.folds, config.seed)
    jobs_args = [
        (config, fold_id, train_idx, test_idx, root)
        for fold_id, (train_idx, test_idx) in enumerate(folds_spec)
    ]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            fold_outputs = list(pool.map(_fold_job, jobs_args))
    else:
        fold_outputs = [_fold_job(a) for a in jobs_args]

    # aggregate: unweighted mean of fold scores per scenario
    aggregate = {}
    for scenario in config.scenarios:
        fold_reports = []
        for fold_id in range(config.folds):
            path = root / "reports" / f"scenario{scenario}-fold{fold_id}.json"
            fold_reports.append(json.loads(path.read_text(encoding="utf-8")))
        aggregate[str(scenario)] = {
            "level": fold_reports[0]["level"],
            "micro": _mean_prf([r["micro"] for r in fold_reports]),
            "macro": _mean_prf([r["macro"] for r in fold_reports]),
        }
    aggregate_path = root / "reports" / "aggregate.json"
    _write_json(aggregate_path, aggregate)
    _write_csv(
        root / "reports" / "aggregate.csv",
        ["scenario", "level", "micro P", "micro R", "micro F1", "macro P", "macro R", "macro F1"],
        [
            [s, agg["level"],
             agg["micro"]["precision"], agg["micro"]["recall"], agg["micro"]["f1"],
             agg["macro"]["precision"], agg["macro"]["recall"], agg["macro"]["f1"]]
            for s, agg in aggregate.items()
        ],
    )

    artifacts = sorted(
        {str(p.relative_to(root)) for paths in fold_outputs for p in paths}
        | {"reports/aggregate.json", "reports/aggregate.csv"}
    )
    manifest = {
        "config": {**asdict(config), "scenarios": list(config.scenarios)},
        "artifacts": {name: _sha256(root / name) for name in artifacts},
    }
    _write_json(root / "manifest.json", manifest)
    click.echo(str(root / "manifest.json"))


def _mean_prf(rows: list[dict]) -> dict:
    n = len(rows)
    return {
        "precision": sum(r["precision"] for r in rows) / n,
        "recall": sum(r["recall"] for r in rows) / n,
        "f1": sum(r["f1"] for r in rows) / n,
    }


# -- analyze -------------------------------------------------------------------


@main.group("analyze")
def cmd_analyze() -> None:
    """Figure-ready analysis tables (CSV)."""


@cmd_analyze.command("sweep")
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--rates", default="1,5,10,20,40,80")
@click.option("--iterations", type=int, default=100)
@click.option("--context-size", type=int, default=2)
@click.option("--seeds", default="0,1,2")
@click.option("--out", "out_path", required=True, type=click.Path())
@_guarded
def cmd_analyze_sweep(corpus_path, rates, iterations, context_size, seeds, out_path) -> None:
    """Relation quality as a function of the negative sampling rate."""
    corpus = load_corpus(corpus_path)
    rows = evaluation.sampling_rate_sweep(
        corpus,
        rates=[int(r) for r in rates.split(",") if r],
        context_size=context_size,
        iterations=iterations,
        seeds=[int(s) for s in seeds.split(",") if s],
    )
    _write_csv(
        Path(out_path),
        ["negative rate", "precision", "recall", "f1"],
        [[r.negative_rate, r.precision, r.recall, r.f1] for r in rows],
    )
    click.echo(out_path)


@cmd_analyze.command("distance")
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--predictions", "predictions_path", required=True, type=click.Path())
@click.option("--bins", type=int, default=5)
@click.option("--quantile", type=float, default=0.95)
@click.option("--out", "out_path", required=True, type=click.Path())
@_guarded
def cmd_analyze_distance(corpus_path, predictions_path, bins, quantile, out_path) -> None:
    """Relation precision binned by argument distance."""
    corpus = load_corpus(corpus_path)
    given = _load_annotations(predictions_path, corpus)
    bundles = []
    for doc in corpus:
        if doc.name not in given:
            continue
        mentions, entities, relations = _parse_annotations(given[doc.name])
        bundles.append(
            (doc, evaluation.PredictedAnnotations(
                tuple(mentions), tuple(entities), tuple(relations)
            ))
        )
    result = evaluation.precision_by_distance(bundles, bins=bins, quantile=quantile)
    _write_csv(
        Path(out_path),
        ["min distance", "max distance", "count", "precision"],
        [[b.min_distance, b.max_distance, b.count, b.precision] for b in result],
    )
    click.echo(out_path)


@cmd_analyze.command("correlation")
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@_guarded
def cmd_analyze_correlation(corpus_path, out_path) -> None:
    """Relation-type vs argument-tag count matrix."""
    corpus = load_corpus(corpus_path)
    header, rows = _correlation_table(stats.relation_argument_correlation(corpus))
    _write_csv(Path(out_path), header, rows)
    click.echo(out_path)


@cmd_analyze.command("ttr")
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@_guarded
def cmd_analyze_ttr(corpus_path, out_path) -> None:
    """Type-token ratios per mention tag and per relation type."""
    corpus = load_corpus(corpus_path)
    _write_csv(
        Path(out_path),
        ["group", "name", "ratio"],
        [["mention", tag, ratio]
         for tag, ratio in stats.mention_type_token_ratios(corpus).items()]
        + [["relation", rt, ratio]
           for rt, ratio in stats.relation_type_token_ratios(corpus).items()],
    )
    click.echo(out_path)


if __name__ == "__main__":
    main()
