import sys
import traceback

from utils.exceptions import UsageError, VeilError, VerificationFailedError
from utils.logger_config import configure_logger

logger = configure_logger(__name__)

EXIT_USAGE = 1
EXIT_VERIFICATION = 2
EXIT_ABORT = 3


def error_handler(error: BaseException) -> int:
    """Log the error with its traceback, print a one-line reason, and return the exit status."""
    if not isinstance(error, VeilError):
        raise error

    # Log the error before anything else so it is visible even if printing fails.
    logger.error("Exception while handling a command:", exc_info=error)
    logger.debug("".join(traceback.format_exception(None, error, error.__traceback__)))

    if isinstance(error, UsageError):
        code = EXIT_USAGE
    elif isinstance(error, VerificationFailedError):
        code = EXIT_VERIFICATION
    else:
        code = EXIT_ABORT
    print(f"error: {error}", file=sys.stderr)
    return code
