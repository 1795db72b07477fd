"""Standardized error handling for the toolkit.

This module provides:
1. Custom exception classes for domain-specific errors
2. An error record model written to ``errors.log``
3. The mapping from exceptions to process exit statuses

Usage:
    from ltr.errors import ParseError

    # In parsers:
    if not token.startswith("qid:"):
        raise ParseError(detail="missing qid", line_number=3, token=token)

    # In the CLI:
    from ltr.errors import handle_error
    return handle_error(exc, log_path)
"""

import json
import logging
from pathlib import Path
from typing import Any

from pydantic import BaseModel

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARTIAL_FAILURE = 1
EXIT_CONFIG_ERROR = 2


class ErrorResponse(BaseModel):
    """Standard error record model."""

    error: str
    detail: str | None = None
    error_code: str | None = None
    context: dict[str, Any] | None = None


class LTRError(Exception):
    """Base class for toolkit errors."""

    exit_code: int = EXIT_PARTIAL_FAILURE
    error: str = "internal_error"
    detail: str = "An unexpected error occurred"

    def __init__(
        self,
        detail: str | None = None,
        error_code: str | None = None,
        **context: Any,
    ) -> None:
        self.detail = detail or self.__class__.detail
        self.error_code = error_code
        self.context = context if context else None
        super().__init__(self.detail)

    def __str__(self) -> str:
        if not self.context:
            return self.detail
        extras = ", ".join(f"{k}={v!r}" for k, v in self.context.items())
        return f"{self.detail} ({extras})"

    def to_response(self) -> ErrorResponse:
        """Convert exception to error record model."""
        return ErrorResponse(
            error=self.error,
            detail=self.detail,
            error_code=self.error_code,
            context=self.context,
        )


class ParseError(LTRError):
    """Malformed LETOR/LibSVM line."""

    exit_code = EXIT_CONFIG_ERROR
    error = "parse_error"
    detail = "Malformed input line"


class DatasetError(LTRError):
    """Dataset cannot be built or split."""

    exit_code = EXIT_CONFIG_ERROR
    error = "dataset_error"
    detail = "Invalid dataset"


class ConfigError(LTRError):
    """Invalid experiment configuration."""

    exit_code = EXIT_CONFIG_ERROR
    error = "config_error"
    detail = "Invalid configuration"


class ShapeError(LTRError):
    """Array shapes do not match what the network expects."""

    error = "shape_error"
    detail = "Shape mismatch"


class DivergenceError(LTRError):
    """Training produced a non-finite loss, gradient or parameter."""

    error = "divergence"
    detail = "Training diverged"


class CheckpointError(LTRError):
    """Checkpoint file cannot be read or written."""

    error = "checkpoint_error"
    detail = "Invalid checkpoint"


class RankingError(LTRError):
    """Invalid scores or ranking for a query."""

    error = "ranking_error"
    detail = "Invalid ranking"


class InsufficientDocumentsError(RankingError):
    """A query has too few usable documents; callers skip it."""

    error = "insufficient_documents"
    detail = "Too few documents for the requested ranking size"


class FoldFailure(LTRError):
    """One cross-validation fold failed; the run continues."""

    error = "fold_failure"
    detail = "Fold failed"


class CancelledRunError(LTRError):
    """Run stopped at a fold boundary after a shutdown request."""

    error = "cancelled"
    detail = "Run cancelled"


def error_record(exc: BaseException) -> ErrorResponse:
    """Build the error record for any exception."""
    if isinstance(exc, LTRError):
        return exc.to_response()
    return ErrorResponse(error="internal_error", detail=f"{type(exc).__name__}: {exc}")


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the process exit status."""
    if isinstance(exc, LTRError):
        return exc.exit_code
    return EXIT_PARTIAL_FAILURE


def handle_error(exc: BaseException, log_path: Path | None = None) -> int:
    """Log an error, append its record to ``log_path`` and return the exit status."""
    record = error_record(exc)
    if isinstance(exc, LTRError):
        logger.warning("Run error: %s (error=%s)", exc, record.error)
    else:
        logger.exception("Unhandled exception: %s", exc)
    if log_path is not None:
        log_path.parent.mkdir(parents=True, exist_ok=True)
        with log_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record.model_dump(exclude_none=True), default=str) + "\n")
    return exit_code_for(exc)
