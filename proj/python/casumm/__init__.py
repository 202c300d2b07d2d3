"""Cascaded summarization toolkit: sentence selection, token highlighting,
and highlight-conditioned fusion, with self-contained ROUGE scoring."""

from casumm._core import (  # noqa: F401
    Alignment,
    ConfigError,
    DataError,
    Document,
    EvalResult,
    FusionConfig,
    FusionModel,
    GenerationResult,
    HighlightMask,
    Instance,
    InstanceScore,
    NumericError,
    ProvenanceEntry,
    RankedInstance,
    RougeScore,
    RunConfig,
    SelectorConfig,
    SelectorModel,
    StrategyKind,
    SummaryOutput,
    TrainConfig,
    Vocab,
    align_summary_sentence,
    build_instances,
    build_vocab,
    evaluate,
    extract_tag_summary,
    generate,
    highlight_rate,
    is_punctuation,
    is_stopword,
    lemmatize,
    load_corpus,
    load_instances,
    make_highlight_labels,
    proportional_highlight,
    rank_instances,
    rouge_l,
    rouge_n,
    rouge_summary,
    save_corpus,
    save_instances,
    score_instance,
    smooth_labels,
    stopword_list_version,
    summarize,
    threshold_highlight,
    tokenize,
    train_fusion,
    train_selector,
)

__version__ = "0.1.0"
