"""Multi-image question/program/answer synthesis from scene graphs, plus
compositional split construction over the generated corpus."""

__version__ = "0.1.0"

from .scenes import SceneGraph, ObjectNode, RelationEdge, parse_scene_graphs, load_scene_graphs
from .subgraphs import (
    PatternObject,
    RelationPattern,
    ModifierPattern,
    Subgraph,
    canonical,
    parse_subgraph,
    validate_subgraph,
    enumerate_subgraphs,
    match_subgraph,
    decompose_simple,
)
from .realize import describe, pluralize
from .lexicon import ExclusionLexicon, AttributeCategories
from .editdist import edit_distance, edit_distance_witness
from .programs import parse_program, serialize, anonymize, anonymized_key
from .interpreter import Answer, execute
from .mining import (
    CorpusIndex,
    DistractorCandidate,
    ExactMatchVerifier,
    build_masked_index,
    find_distractor_images,
    find_positive_images,
)
from .config import PipelineConfig
from .generate import generate_examples
from .records import ExampleRecord, read_records, write_records
from .balance import balance, compute_stats, DatasetStats
from .splits import (
    SplitSpec,
    build_split,
    has_property,
    parse_property,
    parse_split_spec,
    verify_split,
)

__all__ = [
    "SceneGraph",
    "ObjectNode",
    "RelationEdge",
    "parse_scene_graphs",
    "load_scene_graphs",
    "PatternObject",
    "RelationPattern",
    "ModifierPattern",
    "Subgraph",
    "canonical",
    "parse_subgraph",
    "validate_subgraph",
    "enumerate_subgraphs",
    "match_subgraph",
    "decompose_simple",
    "describe",
    "pluralize",
    "ExclusionLexicon",
    "AttributeCategories",
    "edit_distance",
    "edit_distance_witness",
    "parse_program",
    "serialize",
    "anonymize",
    "anonymized_key",
    "Answer",
    "execute",
    "CorpusIndex",
    "DistractorCandidate",
    "ExactMatchVerifier",
    "build_masked_index",
    "find_distractor_images",
    "find_positive_images",
    "PipelineConfig",
    "generate_examples",
    "ExampleRecord",
    "read_records",
    "write_records",
    "balance",
    "compute_stats",
    "DatasetStats",
    "SplitSpec",
    "build_split",
    "has_property",
    "parse_property",
    "parse_split_spec",
    "verify_split",
]
