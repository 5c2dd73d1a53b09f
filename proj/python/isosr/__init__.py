"""Constrained symbolic regression for adsorption isotherms."""

from ._isosr import (
    ConfigError,
    DatasetError,
    Expr,
    ParseError,
    __version__,
    canonical_form,
    catalog,
    check,
    default_config,
    fit,
    parse,
    search,
    synthesize,
)

__all__ = [
    "ConfigError",
    "DatasetError",
    "Expr",
    "ParseError",
    "canonical_form",
    "catalog",
    "check",
    "default_config",
    "fit",
    "parse",
    "search",
    "synthesize",
]
