"""Config-driven simulation studies, real-data analysis and result files."""

from .config import ConfigError, ExperimentConfig, list_presets, load_config, parse_config
from .io import read_aggregates, read_metadata, read_records, write_results
from .study import IngestionError, StudyResult, aggregate, run_real_data, run_study

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "IngestionError",
    "StudyResult",
    "aggregate",
    "list_presets",
    "load_config",
    "parse_config",
    "read_aggregates",
    "read_metadata",
    "read_records",
    "run_real_data",
    "run_study",
    "write_results",
]
