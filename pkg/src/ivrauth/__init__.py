"""Bayesian fraud-risk scoring and adaptive credential ordering for IVR
authentication logs.

The pipeline: ingest labelled tri-state call logs (or generate synthetic
ones), estimate per-credential pass behavior, compute posteriors over
evidence, rank credential pairs as two-factor gates, compile greedy adaptive
policies with accept/block thresholds, backtest them, and serve them to
machine clients over line-delimited JSON.
"""

from .bayes import (
    Belief,
    PosteriorMode,
    bayes_update,
    sequential_posterior,
    total_probability,
)
from .errors import (
    CsvFormatError,
    DataError,
    DegeneratePairError,
    EmptyDatasetError,
    ImpossibleEvidenceError,
    InsufficientSupportError,
    IvrAuthError,
    PolicyError,
    SchemaError,
    SpecValidationError,
)
from .estimator import (
    CorrelationMatrix,
    CredentialStats,
    NullPolicy,
    correlation_matrix,
    credential_stats,
    missingness_profile,
)
from .ingest import load_csv, write_csv
from .model import CallRecord, ClassConditional, CredentialId, Dataset, Outcome, prior_fraud
from .pairs import PairReport, RankObjective, evaluate_pair, rank_pairs
from .sequencer import (
    BacktestSummary,
    Policy,
    PolicyNode,
    SelectionCriterion,
    SessionResult,
    Thresholds,
    backtest,
    compile_policy,
    next_credential,
    run_session,
)
from .synthgen import GeneratorSpec, default_spec, generate

__version__ = "0.1.0"

__all__ = [
    "BacktestSummary",
    "Belief",
    "CallRecord",
    "ClassConditional",
    "CorrelationMatrix",
    "CredentialId",
    "CredentialStats",
    "CsvFormatError",
    "DataError",
    "Dataset",
    "DegeneratePairError",
    "EmptyDatasetError",
    "GeneratorSpec",
    "ImpossibleEvidenceError",
    "InsufficientSupportError",
    "IvrAuthError",
    "NullPolicy",
    "Outcome",
    "PairReport",
    "Policy",
    "PolicyError",
    "PolicyNode",
    "PosteriorMode",
    "RankObjective",
    "SchemaError",
    "SelectionCriterion",
    "SessionResult",
    "SpecValidationError",
    "Thresholds",
    "bayes_update",
    "backtest",
    "compile_policy",
    "correlation_matrix",
    "credential_stats",
    "default_spec",
    "evaluate_pair",
    "generate",
    "load_csv",
    "missingness_profile",
    "next_credential",
    "prior_fraud",
    "rank_pairs",
    "run_session",
    "sequential_posterior",
    "total_probability",
    "write_csv",
]
