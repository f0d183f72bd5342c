"""Entity resolution: clustering mentions that refer to one process element.

Two resolvers are provided.  The naive resolver links mentions of the
same tag whose surface forms overlap strongly and takes connected
components.  The alignment resolver consumes span clusters produced by an
external coreference system and filters them against the predicted
mentions with four discard rules:

(1) a span that overlaps no mention is dropped;
(2) a span whose best mention overlap (Jaccard over token indices) is
    below ``alpha_m`` is dropped;
(3) a span whose mention's tag differs from the cluster's majority tag is
    dropped;
(4) a cluster keeping less than a fraction ``alpha_c`` of its spans is
    dropped entirely.

Mentions of rejected spans and clusters fall back to singleton entities,
so both resolvers always emit an exact partition of the input mentions.
Multi-mention entities are only formed for tags that admit linguistic
references (by default Actor and Activity Data).
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from sklearn.base import BaseEstimator

from .corpus import Corpus, Document, Entity, Mention
from .errors import CorpusFormatError
from .validation import check_mentions

DEFAULT_RESOLVABLE_TAGS: tuple[str, ...] = ("Actor", "Activity Data")
DEFAULT_ALPHA_GRID: tuple[float, ...] = tuple(round(0.1 * i, 1) for i in range(11))


def surface_overlap(tokens_a: Sequence[str], tokens_b: Sequence[str]) -> float:
    """Shared-token fraction of two surface forms, in [0, 1].

    Case-insensitive multiset intersection divided by the longer length,
    so a short mention buried inside a long one never counts as a full
    match.  Symmetric by construction.
    """
    if not tokens_a or not tokens_b:
        raise ValueError("surface overlap of an empty mention")
    counts_a = Counter(t.lower() for t in tokens_a)
    counts_b = Counter(t.lower() for t in tokens_b)
    shared = sum((counts_a & counts_b).values())
    return shared / max(len(tokens_a), len(tokens_b))


def _connected_components(n: int, edges: Iterable[tuple[int, int]]) -> list[list[int]]:
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [groups[root] for root in sorted(groups)]


class NaiveEntityResolver(BaseEstimator):
    """Cluster mentions by surface-form overlap alone.

    Each resolvable mention is linked to its best-matching other mention
    of the same tag when the overlap reaches ``alpha_m``; entities are the
    connected components of those links.  Ties between equally good
    matches go to the earliest mention in token order.
    """

    def __init__(
        self,
        alpha_m: float = 0.8,
        resolvable_tags: tuple[str, ...] = DEFAULT_RESOLVABLE_TAGS,
    ):
        self.alpha_m = alpha_m
        self.resolvable_tags = resolvable_tags

    def resolve(self, doc: Document, mentions: Sequence[Mention]) -> list[Entity]:
        check_mentions(doc, mentions)
        resolvable = set(self.resolvable_tags)
        edges: list[tuple[int, int]] = []
        order = sorted(range(len(mentions)), key=lambda i: (mentions[i].start, mentions[i].end, i))
        for i, m in enumerate(mentions):
            if m.tag not in resolvable:
                continue
            best_j, best_score = None, -1.0
            for j in order:
                other = mentions[j]
                if j == i or other.tag != m.tag:
                    continue
                score = surface_overlap(doc.mention_tokens(m), doc.mention_tokens(other))
                if score > best_score:
                    best_j, best_score = j, score
            if best_j is not None and best_score >= self.alpha_m:
                edges.append((i, best_j))
        return [Entity(group) for group in _connected_components(len(mentions), edges)]


@dataclass(frozen=True)
class CorefPrediction:
    """Span clusters predicted for one document by an external coreference model."""

    name: str
    clusters: tuple[tuple[tuple[int, int], ...], ...]


def load_coref_predictions(
    path: str | Path, corpus: Corpus
) -> dict[str, CorefPrediction]:
    """Read coreference span clusters (JSONL) and validate them against *corpus*.

    Each line: ``{"name": str, "clusters": [[[start, end], ...], ...]}`` with
    inclusive token spans.
    """
    predictions: dict[str, CorefPrediction] = {}
    names = {doc.name: doc for doc in corpus}
    with Path(path).open("r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                record = json.loads(raw)
                name = record["name"]
                clusters = tuple(
                    tuple((int(s), int(e)) for s, e in cluster)
                    for cluster in record["clusters"]
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CorpusFormatError(f"malformed coreference record: {exc}", lineno) from exc
            if name not in names:
                raise CorpusFormatError(f"unknown document {name!r}", lineno)
            n = names[name].n_tokens
            for cluster in clusters:
                if not cluster:
                    raise CorpusFormatError(f"empty cluster for document {name!r}", lineno)
                for s, e in cluster:
                    if not (0 <= s <= e < n):
                        raise CorpusFormatError(
                            f"span [{s}, {e}] out of bounds for document {name!r} ({n} tokens)",
                            lineno,
                        )
            predictions[name] = CorefPrediction(name, clusters)
    return predictions


def _index_overlap(span: tuple[int, int], mention: Mention) -> float:
    """Jaccard similarity between a span's and a mention's token-index sets."""
    lo = max(span[0], mention.start)
    hi = min(span[1], mention.end)
    inter = max(0, hi - lo + 1)
    union = (span[1] - span[0] + 1) + mention.length - inter
    return inter / union


class AlignmentEntityResolver(BaseEstimator):
    """Align external coreference clusters with predicted mentions.

    Applies the four discard rules documented at module level; surviving
    clusters become entities and everything else falls back to singleton
    entities.  Clusters whose majority tag is not resolvable are rejected
    as a whole, since multi-mention entities exist only for resolvable
    tags.
    """

    def __init__(
        self,
        alpha_m: float = 0.8,
        alpha_c: float = 0.5,
        resolvable_tags: tuple[str, ...] = DEFAULT_RESOLVABLE_TAGS,
    ):
        self.alpha_m = alpha_m
        self.alpha_c = alpha_c
        self.resolvable_tags = resolvable_tags

    def _majority_tag(self, doc: Document, tags: list[str]) -> str:
        counts = Counter(tags)
        top = max(counts.values())
        tied = [t for t, c in counts.items() if c == top]
        if len(tied) == 1:
            return tied[0]
        doc_freq = Counter(m.tag for m in doc.mentions)
        return min(tied, key=lambda t: (-doc_freq[t], t))

    def resolve(
        self,
        doc: Document,
        mentions: Sequence[Mention],
        coref: CorefPrediction | None,
    ) -> list[Entity]:
        check_mentions(doc, mentions)
        clusters = coref.clusters if coref is not None else ()
        accepted_groups: list[list[int]] = []
        claimed: set[int] = set()
        order = sorted(range(len(mentions)), key=lambda i: (mentions[i].start, mentions[i].end, i))

        for cluster in clusters:
            # rules (1) and (2): map each span to its best mention by index overlap
            mapped: list[int] = []
            for span in cluster:
                best_i, best_ratio = None, 0.0
                for i in order:
                    ratio = _index_overlap(span, mentions[i])
                    if ratio > best_ratio:
                        best_i, best_ratio = i, ratio
                if best_i is not None and best_ratio >= self.alpha_m:
                    mapped.append(best_i)
            if not mapped:
                continue
            # rule (3): keep only spans matching the cluster's majority tag
            majority = self._majority_tag(doc, [mentions[i].tag for i in mapped])
            survivors = [i for i in mapped if mentions[i].tag == majority]
            # rule (4): drop the whole cluster if too few spans survived
            if len(survivors) / len(cluster) < self.alpha_c:
                continue
            if majority not in set(self.resolvable_tags):
                continue
            group = sorted({i for i in survivors if i not in claimed})
            if group:
                claimed.update(group)
                accepted_groups.append(group)

        entities = [Entity(g) for g in accepted_groups]
        entities.extend(Entity((i,)) for i in range(len(mentions)) if i not in claimed)
        return entities


@dataclass(frozen=True)
class GridSearchResult:
    alpha_m: float
    alpha_c: float
    f1: float
    surface: tuple[tuple[float, float, float], ...]  # (alpha_m, alpha_c, f1)


def grid_search_alignment(
    documents: Sequence[Document],
    coref: Mapping[str, CorefPrediction],
    alpha_m_grid: Sequence[float] = DEFAULT_ALPHA_GRID,
    alpha_c_grid: Sequence[float] = DEFAULT_ALPHA_GRID,
    resolvable_tags: tuple[str, ...] = DEFAULT_RESOLVABLE_TAGS,
) -> GridSearchResult:
    """Exhaustively tune the alignment thresholds against gold entities.

    Resolution runs on gold mentions so the search measures the aligner in
    isolation.  Returns the argmax by entity micro-F1; ties break toward
    the smallest ``alpha_m``, then smallest ``alpha_c``.
    """
    from .evaluation import match_entities, merge_counts, micro_prf

    if not documents:
        raise ValueError("grid search needs a non-empty development set")
    surface = []
    best = None
    for am, ac in product(alpha_m_grid, alpha_c_grid):
        resolver = AlignmentEntityResolver(am, ac, resolvable_tags)
        parts = []
        for doc in documents:
            mentions = list(doc.mentions)
            entities = resolver.resolve(doc, mentions, coref.get(doc.name))
            parts.append(
                match_entities(mentions, entities, list(doc.mentions), list(doc.entities))
            )
        f1 = micro_prf(merge_counts(parts)).f1
        surface.append((am, ac, f1))
        if best is None or f1 > best[2]:
            best = (am, ac, f1)
    return GridSearchResult(best[0], best[1], best[2], tuple(surface))
