"""
Error handling for the command-line front-end.
"""

import logging
import sys

from ..exceptions import QssAuditError, SpecError

logger = logging.getLogger(__name__)

MAX_MESSAGE = 300


def describe_error(exc: BaseException) -> str:
    """One line naming what failed and, when known, the file or field."""
    if isinstance(exc, OSError) and exc.filename is not None:
        message = f"{exc.filename}: {exc.strerror or exc}"
    else:
        message = str(exc) or type(exc).__name__
    field = getattr(exc, "field", None) if isinstance(exc, SpecError) else None
    if field and field not in message:
        message = f"{message} ({field})"
    # Truncate long messages
    if len(message) > MAX_MESSAGE:
        message = message[:MAX_MESSAGE] + "..."
    return message


def error_handler(exc: BaseException) -> int:
    """Report an input or configuration failure; returns the exit code."""
    kind = "input error" if isinstance(exc, (QssAuditError, OSError)) else "unexpected error"
    logger.error(f"{kind}: {exc}")
    print(f"error: {describe_error(exc)}", file=sys.stderr)
    return 1
