"""
Deterministic reductions for grid sweeps
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, TypeVar

import numpy as np

T = TypeVar("T")


def pairwise_sum(stack: np.ndarray) -> np.ndarray:
    """
    Pairwise (cascade) summation over axis 0

    The reduction tree depends only on the number of terms, so the result is
    bit-reproducible for a fixed enumeration order.
    """
    terms = np.asarray(stack)
    if terms.shape[0] == 0:
        raise ValueError("pairwise_sum needs at least one term")
    while terms.shape[0] > 1:
        if terms.shape[0] % 2:
            head = terms[:-1:2] + terms[1::2]
            terms = np.concatenate([head, terms[-1:]], axis=0)
        else:
            terms = terms[0::2] + terms[1::2]
    return terms[0]


def chunk_slices(total: int, chunk_size: int) -> List[slice]:
    """Consecutive slices covering range(total)"""
    return [slice(start, min(start + chunk_size, total)) for start in range(0, total, chunk_size)]


def map_chunks(
    func: Callable[[slice], T],
    total: int,
    chunk_size: int,
    workers: int = 1,
) -> List[T]:
    """
    Evaluate func on every chunk, results in chunk order

    With workers > 1 chunks run on a thread pool (numpy releases the GIL in
    the heavy kernels); assembly order never depends on completion order.
    """
    slices = chunk_slices(total, chunk_size)
    if workers <= 1 or len(slices) <= 1:
        return [func(s) for s in slices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, slices))


def reduce_chunks(partials: Sequence[np.ndarray]) -> np.ndarray:
    """Pairwise reduction of per-chunk partial sums in chunk order"""
    return pairwise_sum(np.stack(list(partials), axis=0))
