"""Fixed-chunk scheduling of nogil kernels on a thread pool."""

import concurrent.futures
import logging
from typing import Callable, Iterator, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")


def chunk_bounds(total: int, chunk_size: int) -> Iterator[tuple[int, int]]:
    """Half-open [start, stop) ranges covering range(total); independent of workers."""
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
    for start in range(0, total, chunk_size):
        yield start, min(start + chunk_size, total)


def run_chunked(
    task: Callable[[int, int], T],
    total: int,
    workers: int = 1,
    chunk_size: int = 4096,
) -> list[T]:
    """
    Run task(start, stop) over every chunk of range(total).

    Results come back in chunk order whatever the scheduling, so callers that
    merge them sequentially get the same answer for any worker count. The
    first failing chunk re-raises its exception after the pool drains.

    Args:
        task: callable over a half-open index range
        total: number of indices
        workers: thread count; 1 runs inline
        chunk_size: indices per chunk

    Returns:
        the task results, ordered by chunk
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    bounds = list(chunk_bounds(total, chunk_size))
    if workers == 1 or len(bounds) <= 1:
        return [task(start, stop) for start, stop in bounds]

    n_threads = min(workers, len(bounds))
    logger.debug(f"Dispatching {len(bounds)} chunks to {n_threads} threads")
    with concurrent.futures.ThreadPoolExecutor(
        max_workers=n_threads, thread_name_prefix="chunk"
    ) as executor:
        futures = [executor.submit(task, start, stop) for start, stop in bounds]
        concurrent.futures.wait(futures)
    return [future.result() for future in futures]
