"""Calibration metrics and rescaling for confidence measures on generated code."""

from .confidence import (
    ConfidenceScore,
    ConfidenceScorer,
    CorpusLengthStats,
    Measure,
    ask_tf_probability,
    avg_token_probability,
    length_baseline,
    parse_verbalized,
    score_record,
    total_sequence_probability,
)
from .correctness import CrossTab, Notion, all_pass, cross_tab, exact_match, label_record, label_records
from .metrics import (
    CalibrationReport,
    ReliabilityBins,
    Scheme,
    ScoredSample,
    auc_roc,
    bin_samples,
    brier,
    brier_ref,
    ece,
    report,
    skill_score,
)
from .records import GenerationRecord, TestReport, TfResponse, load_records, save_records, validate_record
from .rescale import FoldPlan, PlattModel, PlattScaler, apply_platt, cross_fold_rescale, detect_collapse, fit_platt

__version__ = "0.1.0"
