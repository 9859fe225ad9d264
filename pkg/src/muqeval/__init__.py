"""Evaluation harness for music question-answering models.

Two tracks: reference-similarity metrics over free-form answers (lexical
battery plus embedding-based scores) and a factual pipeline that
canonicalizes answers into closed-vocabulary labels scored with
precision/recall/F1.
"""

from .conditions import Condition, ConditionAssignment, assign_random_audio, generate_rewrite, load_rewrites
from .corpus import (
    AudioRef,
    DatasetTag,
    LabelVocabulary,
    QAItem,
    Task,
    load_fma_small,
    load_musicnet,
    load_musicqa,
)
from .embedding_metrics import (
    CachedEmbeddingProvider,
    EmbeddingProvider,
    EmbeddingVector,
    HttpEmbeddingProvider,
    MockEmbeddingProvider,
    TokenEmbeddings,
    bertscore_f1,
    claptext,
    cosine,
)
from .extraction import (
    ExtractionResult,
    TreeMode,
    build_extraction_prompt,
    canonicalize,
    extract,
    fallback_extract,
    parse_extraction_output,
)
from .factual_scoring import (
    AggregateRow,
    BooleanJudgment,
    SetScore,
    aggregate,
    make_binary_choice_item,
    make_binary_choice_items,
    merge_chunk_labels,
    score_item,
    score_true_false,
)
from .ngram_metrics import (
    IdfTable,
    TokenSequence,
    bleu_mean,
    bleu_n,
    build_idf,
    cider,
    meteor_lite,
    rouge_l,
    tokenize,
)
from .runner import (
    ModelEndpoint,
    ModelTranscript,
    RunConfig,
    TranscriptStore,
    load_config,
    render_report,
    run,
    score_factual,
    score_freeform,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateRow",
    "AudioRef",
    "BooleanJudgment",
    "CachedEmbeddingProvider",
    "Condition",
    "ConditionAssignment",
    "DatasetTag",
    "EmbeddingProvider",
    "EmbeddingVector",
    "ExtractionResult",
    "IdfTable",
    "LabelVocabulary",
    "MockEmbeddingProvider",
    "HttpEmbeddingProvider",
    "ModelEndpoint",
    "ModelTranscript",
    "QAItem",
    "RunConfig",
    "SetScore",
    "Task",
    "TokenEmbeddings",
    "TokenSequence",
    "TranscriptStore",
    "TreeMode",
    "aggregate",
    "assign_random_audio",
    "bertscore_f1",
    "bleu_mean",
    "bleu_n",
    "build_extraction_prompt",
    "build_idf",
    "canonicalize",
    "cider",
    "claptext",
    "cosine",
    "extract",
    "fallback_extract",
    "generate_rewrite",
    "load_config",
    "load_fma_small",
    "load_musicnet",
    "load_musicqa",
    "load_rewrites",
    "make_binary_choice_item",
    "make_binary_choice_items",
    "merge_chunk_labels",
    "meteor_lite",
    "parse_extraction_output",
    "render_report",
    "rouge_l",
    "run",
    "score_factual",
    "score_freeform",
    "score_item",
    "score_true_false",
    "tokenize",
]
