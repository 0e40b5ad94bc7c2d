"""
Ordered block map over a thread pool.
Results come back in submission order, so any reduction over them is
independent of the worker count.
"""

import logging
from multiprocessing.pool import ThreadPool
from typing import Callable, Iterable, List, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(func: Callable[[T], R], items: Iterable[T], threads: int = 1) -> List[R]:
    """
    Apply *func* to every item, optionally on a thread pool.

    Args:
        func: Work function; must not mutate shared state.
        items: Work items (block indices, time chunks, ...).
        threads: Worker count; 1 runs inline.

    Returns:
        Results in the order of *items*.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    workers = min(threads, len(items))
    logger.debug(f"Dispatching {len(items)} blocks over {workers} threads")
    with ThreadPool(processes=workers) as pool:
        return pool.map(func, items)
