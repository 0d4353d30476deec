"""Recursive visual concepts: L-system rewriting, rendering and Bayesian inference."""

from ._rvc import (
    MAX_SYMBOLS,
    CapExceeded,
    DimensionMismatch,
    Error,
    LSystem,
    NotInSupport,
    ParseError,
    builtin_grammar,
    decode_pbm,
    encode_pbm,
    expand,
    expand_once,
    infer,
    log_prior,
    modified_hausdorff,
    render,
    render_mean,
    sample,
)

__all__ = [
    "MAX_SYMBOLS",
    "CapExceeded",
    "DimensionMismatch",
    "Error",
    "LSystem",
    "NotInSupport",
    "ParseError",
    "builtin_grammar",
    "decode_pbm",
    "encode_pbm",
    "expand",
    "expand_once",
    "infer",
    "log_prior",
    "modified_hausdorff",
    "render",
    "render_mean",
    "sample",
]
