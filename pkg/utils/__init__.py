"""Utilitaires partagés."""
from .constants import METRIC_ALIASES, NA_LEVEL, SINK, SOURCE, TREE_SCHEMA_VERSION, UNSEEN_CODE
from .errors import ConfigError, DatasetParseError, OmtError, OracleCapExceeded, SolverError
from .helpers import ConstraintsConfig, load_constraints, load_json, parse_constraints, parse_split, save_text

__all__ = [
    'METRIC_ALIASES', 'NA_LEVEL', 'SINK', 'SOURCE', 'TREE_SCHEMA_VERSION', 'UNSEEN_CODE',
    'ConfigError', 'DatasetParseError', 'OmtError', 'OracleCapExceeded', 'SolverError',
    'ConstraintsConfig', 'load_constraints', 'load_json', 'parse_constraints', 'parse_split', 'save_text',
]
