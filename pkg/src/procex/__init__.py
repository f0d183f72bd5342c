"""procex: process-element extraction from annotated text.

A pipeline of sklearn-style estimators over token-annotated process
descriptions: CRF mention tagging, surface- and alignment-based entity
resolution, boosted-tree relation extraction, plus dataset statistics and
a strict cross-validated evaluation harness.
"""

from .corpus import (
    Corpus,
    Document,
    Entity,
    Mention,
    RELATION_TYPES,
    Relation,
    TAG_SET,
    load_corpus,
    save_corpus,
    split_folds,
    validate_document,
)
from .boosting import GradientBoostedTreesClassifier
from .relex import RelationExtractor
from .resolution import (
    AlignmentEntityResolver,
    CorefPrediction,
    NaiveEntityResolver,
    grid_search_alignment,
    load_coref_predictions,
    surface_overlap,
)
from .tagger import BIO_LABELS, CrfTagger, decode_bio, encode_bio, extract_token_features
from .evaluation import (
    MetricsReport,
    cross_validate,
    macro_prf,
    match_entities,
    match_mentions,
    match_relations,
    micro_prf,
    precision_by_distance,
    run_scenario,
    sampling_rate_sweep,
)
from .stats import (
    entity_statistics,
    intra_entity_distance,
    mention_statistics,
    relation_argument_correlation,
    relation_statistics,
    type_token_ratio,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentEntityResolver",
    "BIO_LABELS",
    "CorefPrediction",
    "Corpus",
    "CrfTagger",
    "Document",
    "Entity",
    "GradientBoostedTreesClassifier",
    "Mention",
    "MetricsReport",
    "NaiveEntityResolver",
    "RELATION_TYPES",
    "Relation",
    "RelationExtractor",
    "TAG_SET",
    "cross_validate",
    "decode_bio",
    "encode_bio",
    "entity_statistics",
    "extract_token_features",
    "grid_search_alignment",
    "intra_entity_distance",
    "load_coref_predictions",
    "load_corpus",
    "macro_prf",
    "match_entities",
    "match_mentions",
    "match_relations",
    "mention_statistics",
    "micro_prf",
    "precision_by_distance",
    "relation_argument_correlation",
    "relation_statistics",
    "run_scenario",
    "sampling_rate_sweep",
    "save_corpus",
    "split_folds",
    "surface_overlap",
    "type_token_ratio",
    "validate_document",
]
