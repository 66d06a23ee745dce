"""
Error Handler - Typed Errors and Provider Retry Logic
=====================================================

Error hierarchy for the detective engine, the provider retry policy with
exponential backoff, and machine-readable error records for the CLI.

Exit codes: 0 ok, 2 input error, 3 provider error, 4 internal invariant.
"""

import json
import os
import random
import time
import logging
import traceback
from typing import Callable, Any, Optional, Dict
from datetime import datetime

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def configure_logging(verbose: bool = False):
    """Configure root logging for entry points"""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format=LOG_FORMAT
    )


class DetectiveError(Exception):
    """Base class for every typed engine error"""
    exit_code = 4

    def __init__(self, message: str = "", context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.context = context or {}

    def to_record(self) -> Dict[str, Any]:
        return {
            'error_type': type(self).__name__,
            'message': self.message,
            'exit_code': self.exit_code,
            'context': self.context,
        }


# --- input errors (exit 2) ---

class InputError(DetectiveError):
    exit_code = 2


class EmptyVideo(InputError):
    pass


class InvalidFeature(InputError):
    pass


class EmptyInput(InputError):
    pass


class EmptyGraph(InputError):
    pass


class InvalidSource(InputError):
    pass


class NoEvidence(InputError):
    pass


class EmptySelection(InputError):
    pass


class InvalidQuery(InputError):
    pass


class BundleNotFound(InputError):
    pass


class BundleFormatError(InputError):
    pass


class ConfigError(InputError):
    pass


class TooLargeForDense(InputError):
    pass


# --- provider errors (exit 3) ---

class ProviderError(DetectiveError):
    exit_code = 3


class ResponseFormatError(ProviderError):
    """Provider answered, but not in the expected schema"""
    pass


class DecompositionError(ResponseFormatError):
    pass


class ParseError(ProviderError):
    pass


class RetryError(ProviderError):
    """Raised when all retry attempts have been exhausted"""

    def __init__(self, message: str, attempts: int, last_cause: Optional[BaseException] = None):
        super().__init__(message, context={'attempts': attempts})
        self.attempts = attempts
        self.last_cause = last_cause


# --- internal invariant violations (exit 4) ---

class InvariantViolation(DetectiveError):
    exit_code = 4


class ShapeError(InvariantViolation):
    pass


class InvalidInjection(InvariantViolation):
    pass


class RetryConfig:
    """Configuration for provider retry behavior"""
    def __init__(
        self,
        max_attempts: int = 5,
        base_delay: float = 1.0,
        max_delay: float = 20.0,
        exponential_base: float = 2.0,
        jitter: float = 0.2
    ):
        if max_attempts < 1:
            raise ConfigError(f"max_attempts must be >= 1, got {max_attempts}")
        if base_delay <= 0 or max_delay <= 0:
            raise ConfigError("retry delays must be positive")
        if not 0.0 <= jitter < 1.0:
            raise ConfigError(f"jitter must be in [0, 1), got {jitter}")
        self.max_attempts = max_attempts
        self.base_delay = base_delay
        self.max_delay = max_delay
        self.exponential_base = exponential_base
        self.jitter = jitter

    @classmethod
    def from_config(cls, cfg) -> 'RetryConfig':
        return cls(
            max_attempts=cfg.max_attempts,
            base_delay=cfg.base_delay,
            max_delay=cfg.max_delay,
            jitter=cfg.jitter
        )


def calculate_backoff_delay(attempt: int, config: RetryConfig,
                            rng: Optional[random.Random] = None) -> float:
    """Delay before retry number ``attempt`` (1-based), jittered and capped"""
    delay = min(
        config.base_delay * (config.exponential_base ** (attempt - 1)),
        config.max_delay
    )

    if config.jitter:
        u = (rng or random).random()
        delay = delay * (1.0 + config.jitter * (2.0 * u - 1.0))

    return min(delay, config.max_delay)


def call_with_retry(
    func: Callable[[], Any],
    policy: Optional[RetryConfig] = None,
    *,
    exceptions: tuple = (Exception,),
    on_retry: Optional[Callable[[Exception, int], None]] = None,
    sleep: Callable[[float], None] = time.sleep,
    rng: Optional[random.Random] = None,
    label: str = "call"
) -> Any:
    """
    Run ``func`` until it succeeds or the policy is exhausted.

    Raises RetryError (a ProviderError) carrying the last cause.
    """
    policy = policy or RetryConfig()
    last_exception = None

    for attempt in range(1, policy.max_attempts + 1):
        try:
            return func()

        except exceptions as e:
            last_exception = e

            logger.warning(
                f"Attempt {attempt}/{policy.max_attempts} failed for {label}: {str(e)}"
            )

            if on_retry:
                on_retry(e, attempt)

            if attempt == policy.max_attempts:
                logger.error(f"All {policy.max_attempts} attempts failed for {label}")
                raise RetryError(
                    f"{label} failed after {policy.max_attempts} attempts: {str(last_exception)}",
                    attempts=attempt,
                    last_cause=last_exception
                ) from last_exception

            delay = calculate_backoff_delay(attempt, policy, rng)
            logger.info(f"Retrying {label} in {delay:.2f} seconds...")
            sleep(delay)

    raise RetryError("Unexpected retry loop exit", attempts=policy.max_attempts)


class ErrorLogger:
    """Logs failures and writes error.json records for the CLI"""

    RECORD_NAME = "error.json"

    def __init__(self, log_file: Optional[str] = None):
        self.logger = logging.getLogger("detective.errors")
        if log_file:
            os.makedirs(os.path.dirname(log_file) or ".", exist_ok=True)
            file_handler = logging.FileHandler(log_file, mode='a', encoding='utf-8')
            file_handler.setLevel(logging.ERROR)
            file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
            self.logger.addHandler(file_handler)

    def log_error(
        self,
        error: BaseException,
        context: Optional[Dict[str, Any]] = None,
        out_dir: Optional[str] = None
    ) -> Dict[str, Any]:
        """
        Log error with context and return its machine-readable record

        Args:
            error: The exception that occurred
            context: Additional context information
            out_dir: If given, the record is also written there as error.json
        """
        if isinstance(error, DetectiveError):
            record = error.to_record()
        else:
            record = {
                'error_type': type(error).__name__,
                'message': str(error),
                'exit_code': 4,
                'context': {},
            }
        record['context'] = {**record['context'], **(context or {})}
        record['timestamp'] = datetime.now().isoformat()
        record['hint'] = self._generate_user_message(error)

        self.logger.error(
            f"Error occurred: {record['error_type']} - {record['message']}"
        )
        self.logger.debug(traceback.format_exc())

        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
            with open(os.path.join(out_dir, self.RECORD_NAME), 'w', encoding='utf-8') as f:
                json.dump(record, f, indent=2, sort_keys=True, default=str)

        return record

    def _generate_user_message(self, error: BaseException) -> str:
        error_messages = {
            BundleNotFound: "Feature bundle not found. Check the --bundle path.",
            ConfigError: "Invalid configuration. Check the config file and --set overrides.",
            RetryError: "Provider kept failing after all retries. Check DETECTIVE_PROVIDER_URL.",
            ProviderError: "Provider call failed.",
            InputError: "Input rejected. See the error message for the offending field.",
            InvariantViolation: "Internal invariant violated. Please report this run.",
        }

        for error_type, message in error_messages.items():
            if isinstance(error, error_type):
                return message

        return "Unexpected error. See the log for details."


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, DetectiveError):
        return error.exit_code
    return 4
