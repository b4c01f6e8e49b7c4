"""
Process-level settings read from the environment.
"""
import logging
import os

# Worker threads for row-parallel assembly (overridden by --threads)
THREADS = int(os.getenv("NONLOC_THREADS", "1"))

LOG_LEVEL = os.getenv("NONLOC_LOG_LEVEL", "WARNING").upper()

# Frequency-domain convolution is opt-in; the direct sum is the reference
FAST_CONVOLUTION = os.getenv("NONLOC_FAST_CONVOLUTION", "0").lower() in ("1", "true", "yes")


def resolve_threads(flag_value=None) -> int:
    """
    Resolve the worker thread count.

    Args:
        flag_value: Value given on the command line, if any

    Returns:
        Thread count >= 1 (flag first, then NONLOC_THREADS)
    """
    if flag_value is not None:
        return max(1, int(flag_value))
    return max(1, int(os.getenv("NONLOC_THREADS", str(THREADS))))


def configure_logging(level=None) -> None:
    """Configure the root logger once for CLI and script use."""
    name = (level or os.getenv("NONLOC_LOG_LEVEL", LOG_LEVEL)).upper()
    logging.basicConfig(
        level=getattr(logging, name, logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
