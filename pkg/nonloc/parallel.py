"""
Row-parallel evaluation helpers.

Work over the outer node index is split into contiguous row blocks. Each block
computes complete rows, so per-row reductions never depend on the thread count.
"""
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List

import numpy as np

from nonloc import config

_threads = config.THREADS


def set_threads(n: int) -> None:
    """Set the worker count used by map_rows when none is passed explicitly."""
    global _threads
    _threads = max(1, int(n))


def row_blocks(m: int, threads: int) -> List[np.ndarray]:
    """Partition rows 0..m-1 into at most `threads` contiguous blocks."""
    parts = max(1, min(int(threads), m))
    return [block for block in np.array_split(np.arange(m), parts) if block.size]


def map_rows(fn: Callable[[np.ndarray], np.ndarray], m: int, threads: int = None) -> np.ndarray:
    """
    Evaluate fn on row blocks and stack the results in row order.

    Args:
        fn: Maps an index array of rows to an array whose first axis matches it
        m: Number of rows
        threads: Worker count (defaults to the process setting)

    Returns:
        Concatenation of the block results along axis 0
    """
    threads = _threads if threads is None else max(1, int(threads))
    blocks = row_blocks(m, threads)
    if len(blocks) == 1:
        return fn(blocks[0])
    with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
        parts = list(pool.map(fn, blocks))
    return np.concatenate(parts, axis=0)
