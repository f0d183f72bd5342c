"""Data model and ingestion for token-annotated process descriptions.

A corpus is a JSON-lines file, one document per line:

    {"name": str,
     "tokens": [str, ...],
     "sentence_ids": [int, ...],
     "mentions": [{"start": int, "end": int, "tag": str}, ...],
     "entities": [[mention_index, ...], ...],
     "relations": [{"head": entity_index, "tail": entity_index, "type": str}, ...]}

Token indices are 0-based and mention spans are inclusive.  Tag and
relation-type strings must match :data:`TAG_SET` / :data:`RELATION_TYPES`
exactly (case-sensitive).  Documents are normalised at load time so that
every mention belongs to exactly one entity: mentions not covered by an
annotated entity become singleton entities.  All objects are immutable
after construction and safe for concurrent reads.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import CorpusFormatError, CorpusValidationError

TAG_SET: tuple[str, ...] = (
    "Activity",
    "Activity Data",
    "Actor",
    "Further Specification",
    "XOR Gateway",
    "AND Gateway",
    "Condition Specification",
)

RELATION_TYPES: tuple[str, ...] = (
    "Flows",
    "Uses",
    "Actor Performer",
    "Actor Recipient",
    "Further Specification",
    "Same Gateway",
)


@dataclass(frozen=True, order=True)
class Mention:
    """A contiguous token span ``[start, end]`` (inclusive) with a tag."""

    start: int
    end: int
    tag: str

    @property
    def length(self) -> int:
        return self.end - self.start + 1

    @property
    def token_indices(self) -> range:
        return range(self.start, self.end + 1)


@dataclass(frozen=True)
class Entity:
    """A cluster of same-tag mentions referring to one process element.

    ``mention_ids`` index into the owning document's mention list and are
    stored sorted so equal clusters compare equal.
    """

    mention_ids: tuple[int, ...]

    def __init__(self, mention_ids: Iterable[int]):
        object.__setattr__(self, "mention_ids", tuple(sorted(mention_ids)))

    def __len__(self) -> int:
        return len(self.mention_ids)


@dataclass(frozen=True)
class Relation:
    """A directed entity-level relation ``head -> tail`` of a given type."""

    head: int
    tail: int
    type: str


@dataclass(frozen=True)
class Document:
    """A tokenised process description with its gold annotations."""

    name: str
    tokens: tuple[str, ...]
    sentence_ids: tuple[int, ...]
    mentions: tuple[Mention, ...] = ()
    entities: tuple[Entity, ...] = ()
    relations: tuple[Relation, ...] = ()

    @property
    def n_tokens(self) -> int:
        return len(self.tokens)

    @property
    def n_sentences(self) -> int:
        return self.sentence_ids[-1] + 1 if self.sentence_ids else 0

    def mention_tokens(self, mention: Mention) -> tuple[str, ...]:
        return self.tokens[mention.start : mention.end + 1]

    def entity_tag(self, entity: Entity) -> str:
        return self.mentions[entity.mention_ids[0]].tag

    def entity_mentions(self, entity: Entity) -> tuple[Mention, ...]:
        return tuple(self.mentions[i] for i in entity.mention_ids)


@dataclass(frozen=True)
class Corpus:
    """An immutable collection of documents with unique names."""

    documents: tuple[Document, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)

    def __getitem__(self, index: int) -> Document:
        return self.documents[index]

    def by_name(self, name: str) -> Document:
        for doc in self.documents:
            if doc.name == name:
                return doc
        raise KeyError(name)


def validate_document(doc: Document) -> list[str]:
    """Return all invariant violations for *doc*, empty if it is valid.

    Each violation names the broken rule and the offending index, so a
    caller can report precisely what is wrong instead of failing on the
    first problem.
    """
    violations: list[str] = []
    n = len(doc.tokens)

    if n < 1:
        violations.append("document has no tokens")
    if len(doc.sentence_ids) != n:
        violations.append(
            f"sentence_ids length {len(doc.sentence_ids)} != token count {n}"
        )
    elif n > 0:
        if doc.sentence_ids[0] != 0:
            violations.append("sentence_ids must start at 0")
        for i in range(1, n):
            step = doc.sentence_ids[i] - doc.sentence_ids[i - 1]
            if step not in (0, 1):
                violations.append(f"sentence_ids jump of {step} at token {i}")

    for i, m in enumerate(doc.mentions):
        if not (0 <= m.start <= m.end < n):
            violations.append(
                f"mention {i} span [{m.start}, {m.end}] out of bounds for {n} tokens"
            )
        if m.tag not in TAG_SET:
            violations.append(f"mention {i} has unknown tag {m.tag!r}")

    seen: dict[int, int] = {}
    for j, entity in enumerate(doc.entities):
        if not entity.mention_ids:
            violations.append(f"entity {j} is empty")
            continue
        tags = set()
        for mid in entity.mention_ids:
            if not (0 <= mid < len(doc.mentions)):
                violations.append(f"entity {j} references unknown mention {mid}")
                continue
            tags.add(doc.mentions[mid].tag)
            if mid in seen:
                violations.append(
                    f"clusters overlap: mention {mid} in entities {seen[mid]} and {j}"
                )
            else:
                seen[mid] = j
        if len(tags) > 1:
            violations.append(
                f"type homogeneity: entity {j} mixes tags {sorted(tags)}"
            )
    for mid in range(len(doc.mentions)):
        if mid not in seen:
            violations.append(f"mention {mid} belongs to no entity")

    for k, rel in enumerate(doc.relations):
        if rel.type not in RELATION_TYPES:
            violations.append(f"relation {k} has unknown type {rel.type!r}")
        for role, idx in (("head", rel.head), ("tail", rel.tail)):
            if not (0 <= idx < len(doc.entities)):
                violations.append(f"relation {k} {role} references unknown entity {idx}")

    return violations


def normalize_entities(doc: Document) -> Document:
    """Attach a singleton entity to every mention not covered by one."""
    covered = {mid for e in doc.entities for mid in e.mention_ids}
    extra = tuple(
        Entity((mid,)) for mid in range(len(doc.mentions)) if mid not in covered
    )
    if not extra:
        return doc
    return replace(doc, entities=doc.entities + extra)


def document_from_record(record: dict, line: int | None = None) -> Document:
    try:
        doc = Document(
            name=record["name"],
            tokens=tuple(record["tokens"]),
            sentence_ids=tuple(int(s) for s in record["sentence_ids"]),
            mentions=tuple(
                Mention(int(m["start"]), int(m["end"]), m["tag"])
                for m in record.get("mentions", ())
            ),
            entities=tuple(
                Entity(int(i) for i in ids) for ids in record.get("entities", ())
            ),
            relations=tuple(
                Relation(int(r["head"]), int(r["tail"]), r["type"])
                for r in record.get("relations", ())
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorpusFormatError(f"malformed document record: {exc}", line) from exc
    return normalize_entities(doc)


def document_to_record(doc: Document) -> dict:
    return {
        "name": doc.name,
        "tokens": list(doc.tokens),
        "sentence_ids": list(doc.sentence_ids),
        "mentions": [{"start": m.start, "end": m.end, "tag": m.tag} for m in doc.mentions],
        "entities": [list(e.mention_ids) for e in doc.entities],
        "relations": [
            {"head": r.head, "tail": r.tail, "type": r.type} for r in doc.relations
        ],
    }


def load_corpus(path: str | Path) -> Corpus:
    """Read a JSONL corpus, validating every document.

    Raises :class:`CorpusFormatError` (with the line number) on parse
    problems and :class:`CorpusValidationError` (naming the document and
    rule) on annotation-invariant violations.
    """
    path = Path(path)
    documents: list[Document] = []
    names: set[str] = set()
    with path.open("r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"invalid JSON: {exc.msg}", lineno) from exc
            doc = document_from_record(record, lineno)
            violations = validate_document(doc)
            if violations:
                raise CorpusValidationError(doc.name, violations)
            if doc.name in names:
                raise CorpusValidationError(doc.name, ["duplicate document name"])
            names.add(doc.name)
            documents.append(doc)
    return Corpus(tuple(documents))


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for doc in corpus:
            handle.write(json.dumps(document_to_record(doc), sort_keys=True))
            handle.write("\n")


def split_folds(
    corpus: Corpus | Sequence, k: int, seed: int
) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Partition document indices into *k* cross-validation folds.

    Deterministic for a fixed seed.  Test sets are disjoint, cover every
    document, and their sizes differ by at most one.  Splitting is at
    document granularity: entity clusters and relations span sentences, so
    finer splits would leak annotation structure across folds.
    """
    n = len(corpus)
    if k < 1 or k > n:
        raise ValueError(f"cannot split {n} documents into {k} folds")
    order = list(range(n))
    random.Random(seed).shuffle(order)
    folds: list[tuple[tuple[int, ...], tuple[int, ...]]] = []
    base, extra = divmod(n, k)
    start = 0
    for f in range(k):
        size = base + (1 if f < extra else 0)
        test = tuple(sorted(order[start : start + size]))
        train = tuple(sorted(set(range(n)) - set(test)))
        folds.append((train, test))
        start += size
    return folds
