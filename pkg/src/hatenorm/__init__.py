"""Hate-speech normalization: intensity prediction, hate-span tagging, and
reward-guided span rewriting, with evaluation and engagement-hypothesis
tooling."""

from .corpus import (
    Corpus,
    Sample,
    SplitSpec,
    decode_bio,
    encode_bio,
    load_corpus,
    save_corpus,
    split_corpus,
    tokenize,
)
from .synthetic import SyntheticConfig, generate_synthetic
from .intensity import (
    HipTrainConfig,
    IntensityModel,
    RegressionMetrics,
    hip_metrics,
    hip_predict,
    hip_train,
)
from .spanner import (
    CrfModel,
    HsiTrainConfig,
    SpanMetrics,
    crf_log_partition,
    crf_nll_and_grad,
    crf_score,
    hsi_predict_spans,
    hsi_train,
    span_metrics,
    span_metrics_micro,
    viterbi,
)
from .rewriter import (
    DictionaryRewriter,
    GeneratorModel,
    HirTrainConfig,
    RewriteResult,
    dict_build,
    dict_rewrite,
    gen_train,
    reward,
    rewrite_sample,
    splice,
)
from .evalx import (
    EvalReport,
    HateDetector,
    NgramLm,
    bleu,
    delta_confidence,
    detector_train,
    lm_train,
    perplexity,
)
from .virality import (
    EngagementFeatures,
    EngagementModel,
    ViralityReport,
    WelchResult,
    engagement_predict,
    engagement_train,
    extract_features,
    load_sentiment_lexicon,
    virality_experiment,
    welch_t_test,
)
from .pipeline import (
    NormalizationOutcome,
    PipelineConfig,
    TrainedBundle,
    analyze,
    band_of,
    train_all,
)

__version__ = "0.1.0"
