"""Input validation helpers shared by the estimators."""

from __future__ import annotations

from typing import Sequence

from .corpus import Document, Entity, Mention


def check_mentions(doc: Document, mentions: Sequence[Mention], allow_overlap: bool = True) -> None:
    """Ensure mentions lie within *doc*; optionally ensure they do not overlap."""
    occupied = [False] * doc.n_tokens
    for i, m in enumerate(mentions):
        if not (0 <= m.start <= m.end < doc.n_tokens):
            raise ValueError(
                f"mention {i} span [{m.start}, {m.end}] out of bounds for {doc.n_tokens} tokens"
            )
        if allow_overlap:
            continue
        for t in range(m.start, m.end + 1):
            if occupied[t]:
                raise ValueError(f"mention {i} overlaps another mention at token {t}")
            occupied[t] = True


def check_partition(mentions: Sequence[Mention], entities: Sequence[Entity]) -> None:
    """Ensure the entities cover every mention exactly once."""
    seen = sorted(i for e in entities for i in e.mention_ids)
    if seen != list(range(len(mentions))):
        raise ValueError("entities do not partition the mention set")


def check_fraction(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
