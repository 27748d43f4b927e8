"""Detect and clean Python code smells, by deterministic rules or with an LLM."""

from smellcc.detectors import DEFAULT_CONFIG, DetectorConfig, Finding, SmellKind, scan
from smellcc.pysource import SourceUnit, Span, parse, parse_file, render

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_CONFIG",
    "DetectorConfig",
    "Finding",
    "SmellKind",
    "SourceUnit",
    "Span",
    "parse",
    "parse_file",
    "render",
    "scan",
]
