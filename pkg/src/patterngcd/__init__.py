"""Generalized category discovery over frozen embeddings with LLM-mined patterns."""

from .config import RunConfig, load_config
from .datasets import DatasetBundle, PseudoLabelRecord, Sample, load_dataset, synth_gcd, write_dataset
from .errors import (
    ConfigError,
    DataFormatError,
    PatternGCDError,
    PatternOracleError,
    TrainingError,
)
from .estimator import PatternGCD
from .evaluation import GcdMetrics, aligned_accuracy, gcd_metrics, h_score
from .oracle import HttpChatBackend, MockChatBackend, PatternOracle, ReplayChatBackend
from .patterns import Pattern, PatternStore
from .pipeline import Checkpoint, RunResult, run_baseline, run_eval, run_training
from .projection import ProjectionHead

__version__ = "0.1.0"

__all__ = [
    "Checkpoint",
    "ConfigError",
    "DataFormatError",
    "DatasetBundle",
    "GcdMetrics",
    "HttpChatBackend",
    "MockChatBackend",
    "Pattern",
    "PatternGCD",
    "PatternGCDError",
    "PatternOracle",
    "PatternOracleError",
    "PatternStore",
    "ProjectionHead",
    "PseudoLabelRecord",
    "ReplayChatBackend",
    "RunConfig",
    "RunResult",
    "Sample",
    "TrainingError",
    "aligned_accuracy",
    "gcd_metrics",
    "h_score",
    "load_config",
    "load_dataset",
    "run_baseline",
    "run_eval",
    "run_training",
    "synth_gcd",
    "write_dataset",
]
