"""Deterministic synthetic corpora for self-contained tests and demos.

The real annotated corpus is external; these generators produce small
process descriptions with known structure so every part of the pipeline
can be exercised offline:

* :func:`tagging_corpus` has an unambiguous token-to-tag mapping, so a
  sequence tagger should reach near-perfect training F1 on it.
* :func:`relation_corpus` mixes reliable relation patterns with a
  genuinely ambiguous one (consecutive activities are related only with
  probability ``flow_probability``) plus repeated surface forms that fool
  a surface-based resolver.  This yields the characteristic
  precision/recall trade-off under negative sampling and the scenario
  ordering under error propagation.
* :class:`NoisyMentionOracle` perturbs gold mentions deterministically to
  stand in for an imperfect tagger.

A tiny hand-checkable 5-document corpus ships with the package for exact
statistics tests; :func:`fixture_path` locates it.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .corpus import Corpus, Document, Entity, Mention, Relation, TAG_SET

_ACTORS = ("clerk", "manager", "officer", "auditor", "analyst")
_VERBS = ("approves", "reviews", "files", "signs", "checks", "sends")
_OBJECTS = ("invoice", "report", "claim", "form", "request")
_ADVERBS = ("quickly", "carefully", "immediately")


def fixture_path() -> Path:
    """Location of the bundled 5-document fixture corpus."""
    return Path(resources.files("procex").joinpath("data/fixture.jsonl"))


def fixture_corpus() -> Corpus:
    from .corpus import load_corpus

    return load_corpus(fixture_path())


def tagging_corpus(n_docs: int = 20, seed: int = 13) -> Corpus:
    """Documents whose tokens map deterministically to tags.

    Three sentence patterns cover seven-tag vocabulary slots; every
    content word occurs in exactly one role, so the mention structure is
    fully recoverable from local context.
    """
    rng = np.random.default_rng(seed)
    docs = []
    for d in range(n_docs):
        tokens: list[str] = []
        sids: list[int] = []
        mentions: list[Mention] = []
        n_sentences = int(rng.integers(2, 5))
        for s in range(n_sentences):
            offset = len(tokens)
            pattern = int(rng.integers(0, 3))
            actor = _ACTORS[rng.integers(0, len(_ACTORS))]
            verb = _VERBS[rng.integers(0, len(_VERBS))]
            obj = _OBJECTS[rng.integers(0, len(_OBJECTS))]
            if pattern == 0:
                words = ["the", actor, verb, "the", obj, "."]
                mentions += [
                    Mention(offset, offset + 1, "Actor"),
                    Mention(offset + 2, offset + 2, "Activity"),
                    Mention(offset + 3, offset + 4, "Activity Data"),
                ]
            elif pattern == 1:
                words = ["otherwise", "the", actor, verb, "the", obj, "."]
                mentions += [
                    Mention(offset, offset, "XOR Gateway"),
                    Mention(offset + 1, offset + 2, "Actor"),
                    Mention(offset + 3, offset + 3, "Activity"),
                    Mention(offset + 4, offset + 5, "Activity Data"),
                ]
            else:
                adv = _ADVERBS[rng.integers(0, len(_ADVERBS))]
                words = ["meanwhile", "the", actor, verb, "the", obj, adv, "."]
                mentions += [
                    Mention(offset, offset, "AND Gateway"),
                    Mention(offset + 1, offset + 2, "Actor"),
                    Mention(offset + 3, offset + 3, "Activity"),
                    Mention(offset + 4, offset + 5, "Activity Data"),
                    Mention(offset + 6, offset + 6, "Further Specification"),
                ]
            tokens += words
            sids += [s] * len(words)
        entities = tuple(Entity((i,)) for i in range(len(mentions)))
        docs.append(
            Document(
                name=f"tagging-{d:03d}",
                tokens=tuple(tokens),
                sentence_ids=tuple(sids),
                mentions=tuple(mentions),
                entities=entities,
            )
        )
    return Corpus(tuple(docs))


def relation_corpus(
    n_docs: int = 12,
    seed: int = 7,
    flow_probability: float = 0.4,
    coref_probability: float = 0.8,
    unique_actors: bool = False,
) -> Corpus:
    """Documents with gold entities and relations of controlled difficulty.

    Every sentence is ``the <actor> <verb> the <object> .`` and reliably
    carries a performer and a uses relation.  Consecutive activities flow
    into each other only with ``flow_probability``, from features alone an
    undecidable region.  Actor mentions with the same surface within one
    document are the same entity, so a surface-based resolver handles them
    correctly.  Object mentions reuse surface forms: with
    ``coref_probability`` a repeated surface refers to the previous object
    entity, otherwise it is a fresh entity that merely looks the same.

    ``unique_actors`` gives every sentence a distinct actor surface; with
    ``flow_probability=1.0`` and ``coref_probability=0.0`` the relation
    structure then becomes fully determined by the pair features, which a
    classifier can memorise perfectly.
    """
    rng = np.random.default_rng(seed)
    docs = []
    for d in range(n_docs):
        if unique_actors:
            n_sentences = int(rng.integers(4, len(_ACTORS) + 1))
            actor_order = [_ACTORS[i] for i in rng.permutation(len(_ACTORS))]
        else:
            n_sentences = int(rng.integers(4, 7))
        tokens: list[str] = []
        sids: list[int] = []
        mentions: list[Mention] = []
        entity_groups: list[list[int]] = []
        relations: list[Relation] = []
        activity_entities: list[int] = []
        actor_entity_by_surface: dict[str, int] = {}
        prev_object: tuple[str, int] | None = None  # (surface, entity index)

        for s in range(n_sentences):
            offset = len(tokens)
            actor = actor_order[s] if unique_actors else _ACTORS[rng.integers(0, len(_ACTORS))]
            verb = _VERBS[rng.integers(0, len(_VERBS))]
            tokens += ["the", actor, verb, "the", None, "."]  # object filled below
            sids += [s] * 6

            actor_mid = len(mentions)
            mentions.append(Mention(offset, offset + 1, "Actor"))
            if actor in actor_entity_by_surface:
                actor_eid = actor_entity_by_surface[actor]
                entity_groups[actor_eid].append(actor_mid)
            else:
                entity_groups.append([actor_mid])
                actor_eid = len(entity_groups) - 1
                actor_entity_by_surface[actor] = actor_eid

            verb_mid = len(mentions)
            mentions.append(Mention(offset + 2, offset + 2, "Activity"))
            entity_groups.append([verb_mid])
            verb_eid = len(entity_groups) - 1
            activity_entities.append(verb_eid)

            object_mid = len(mentions)
            mentions.append(Mention(offset + 3, offset + 4, "Activity Data"))
            if prev_object is not None and rng.random() < 0.6:
                surface = prev_object[0]
                if rng.random() < coref_probability:
                    # same surface, same entity: a genuine reference
                    entity_groups[prev_object[1]].append(object_mid)
                    object_eid = prev_object[1]
                else:
                    # same surface, different entity: a resolver trap
                    entity_groups.append([object_mid])
                    object_eid = len(entity_groups) - 1
            else:
                surface = _OBJECTS[rng.integers(0, len(_OBJECTS))]
                entity_groups.append([object_mid])
                object_eid = len(entity_groups) - 1
            tokens[offset + 4] = surface
            prev_object = (surface, object_eid)

            relations.append(Relation(verb_eid, actor_eid, "Actor Performer"))
            relations.append(Relation(verb_eid, object_eid, "Uses"))
            if s > 0 and rng.random() < flow_probability:
                relations.append(Relation(activity_entities[s - 1], verb_eid, "Flows"))

        docs.append(
            Document(
                name=f"relation-{d:03d}",
                tokens=tuple(tokens),
                sentence_ids=tuple(sids),
                mentions=tuple(mentions),
                entities=tuple(Entity(g) for g in entity_groups),
                relations=tuple(dict.fromkeys(relations)),
            )
        )
    return Corpus(tuple(docs))


@dataclass
class NoisyMentionOracle:
    """A stand-in tagger that corrupts gold mentions deterministically.

    With probability ``noise`` a mention is dropped, span-shifted by one
    token, or re-tagged (equally likely).  Corruption depends only on the
    seed and the document name, so repeated calls agree.
    """

    noise: float = 0.3
    seed: int = 0

    def predict_single(self, doc: Document) -> list[Mention]:
        rng = np.random.default_rng([self.seed, zlib.crc32(doc.name.encode())])
        predicted: list[Mention] = []
        for m in doc.mentions:
            if rng.random() >= self.noise:
                predicted.append(m)
                continue
            kind = int(rng.integers(0, 3))
            if kind == 0:
                continue  # dropped
            if kind == 1:
                start = max(0, m.start - 1) if rng.random() < 0.5 else m.start
                end = m.end + 1 if start == m.start and m.end + 1 < doc.n_tokens else m.end
                if (start, end) == (m.start, m.end):
                    start = max(0, m.start - 1)
                if (start, end) != (m.start, m.end):
                    predicted.append(Mention(start, end, m.tag))
                    continue
                kind = 2  # span cannot shift; fall through to retagging
            others = [t for t in TAG_SET if t != m.tag]
            predicted.append(Mention(m.start, m.end, others[rng.integers(0, len(others))]))
        return predicted

    def predict(self, documents: list[Document]) -> list[list[Mention]]:
        return [self.predict_single(doc) for doc in documents]
