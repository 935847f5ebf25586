# SPDX-License-Identifier: Apache-2.0
"""IKNet forecasting engine: keyword JSONL schema, indicators, and metrics."""

from ._core import (
    DimensionError,
    MissingDataError,
    NumericError,
    ValidationError,
    dm_test,
    feature_names,
    indicators,
    keyword_record,
    read_keywords_jsonl,
    rmse,
    smape,
    validate_keyword_record,
    validate_keywords_jsonl,
    write_keywords_jsonl,
)

__all__ = [
    "DimensionError",
    "MissingDataError",
    "NumericError",
    "ValidationError",
    "dm_test",
    "feature_names",
    "indicators",
    "keyword_record",
    "read_keywords_jsonl",
    "rmse",
    "smape",
    "validate_keyword_record",
    "validate_keywords_jsonl",
    "write_keywords_jsonl",
]
