"""
Worker Pool Module

Resolves the worker budget from GRAD_DR_THREADS and runs independent jobs on
a thread pool while returning results in submission order. Only one pool
level is ever active: a map issued from inside a pool worker runs serially
on that worker.
"""

import logging
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

import psutil

logger = logging.getLogger(__name__)

THREADS_ENV = "GRAD_DR_THREADS"

T = TypeVar("T")
R = TypeVar("R")

_worker_state = threading.local()


def resolve_workers(requested: Optional[int] = None) -> int:
    """
    Number of worker threads to use

    An explicit positive ``requested`` wins; otherwise GRAD_DR_THREADS is read
    (0 or unset means auto) and auto resolves to the physical core count.
    """
    if requested is not None and requested > 0:
        return int(requested)
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        configured = int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer {THREADS_ENV}={raw!r}")
        configured = 0
    if configured > 0:
        return configured
    return psutil.cpu_count(logical=False) or psutil.cpu_count() or 1


def in_worker() -> bool:
    """True on a thread currently running a job for ordered_map"""
    return getattr(_worker_state, "active", False)


def ordered_map(func: Callable[[T], R], items: Iterable[T], workers: Optional[int] = None) -> List[R]:
    """Apply func to every item, in parallel when allowed, keeping input order"""
    items = list(items)
    count = min(resolve_workers(workers), max(len(items), 1))
    if count <= 1 or in_worker():
        return [func(item) for item in items]

    def job(item: T) -> R:
        _worker_state.active = True
        try:
            return func(item)
        finally:
            _worker_state.active = False

    with ThreadPoolExecutor(max_workers=count) as pool:
        return list(pool.map(job, items))
