import os
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')

WORKERS_ENV = 'QUADOMAIN_WORKERS'


def worker_count() -> int:
    """Number of evaluation workers, read from ``QUADOMAIN_WORKERS``."""
    raw = os.environ.get(WORKERS_ENV, '1')
    try:
        count = int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer {WORKERS_ENV}={raw!r}, using 1 worker")
        return 1
    return max(1, count)


def map_chunks(func: Callable[[T], R], chunks: Iterable[T]) -> List[R]:
    """Apply ``func`` to every chunk, preserving input order.

    Runs inline with one worker; otherwise on a thread pool. numpy releases
    the GIL in the heavy kernels, so threads are enough here.
    """
    chunks = list(chunks)
    workers = worker_count()
    if workers == 1 or len(chunks) < 2:
        return [func(chunk) for chunk in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, chunks))


def split_rows(count: int, size: int) -> List[slice]:
    """Row slices of at most ``size`` covering ``range(count)``."""
    size = max(1, size)
    return [slice(start, min(start + size, count)) for start in range(0, count, size)]
