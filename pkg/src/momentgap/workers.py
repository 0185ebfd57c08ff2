"""Thread pool helper for chunked grid and quadrature work"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

logger = logging.getLogger(__name__)

THREADS_ENV = "MOMENTGAP_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def max_workers() -> int:
    """Get the worker cap from MOMENTGAP_THREADS (default: CPU count)."""
    default = os.cpu_count() or 1
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer {THREADS_ENV}={raw!r}")
        return default
    return max(1, value)


def map_ordered(fn: Callable[[T], R], chunks: Iterable[T]) -> List[R]:
    """Apply ``fn`` to every chunk and return the results in chunk order.

    Callers split work into chunks of a fixed size, never one chunk per
    worker, so reductions over the returned list do not depend on the
    thread count.
    
    Args:
        fn: Function applied to each chunk
        chunks: Work items
        
    Returns:
        List of results, in the same order as ``chunks``
    """
    items = list(chunks)
    workers = min(max_workers(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    
    logger.debug(f"Dispatching {len(items)} chunks to {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
