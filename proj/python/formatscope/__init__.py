"""Format profiles of web-archive corpora over time.

Thin wrapper over the compiled core: signature-based identification with a
fine and a broad engine, WARC/ARC profiling into keyed year counts, trend
analysis, and a deterministic synthetic-corpus generator.
"""

from ._core import (
    BadTimestampError,
    CycleError,
    Error,
    MalformedMimeError,
    ParseError,
    SchemaError,
    SignatureSet,
    SpecError,
    analyze,
    canonical_mime,
    extract_year,
    generate_corpus,
    normalize_server_mime,
    profile,
)

__all__ = [
    "BadTimestampError",
    "CycleError",
    "Error",
    "MalformedMimeError",
    "ParseError",
    "SchemaError",
    "SignatureSet",
    "SpecError",
    "analyze",
    "canonical_mime",
    "extract_year",
    "generate_corpus",
    "normalize_server_mime",
    "profile",
]

__version__ = "0.1.0"
