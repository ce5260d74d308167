"""Path engine - batched, stream-keyed simulation with a worker-count independent result."""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Tuple
import logging

import numpy as np

from ..errors import DomainError, StructuralError
from .grid import TimeGrid
from .rng import stream_range

logger = logging.getLogger(__name__)

Evaluator = Callable[..., np.ndarray]


def _chunks(n_paths: int, chunk_size: int) -> List[Tuple[int, int]]:
    return [(lo, min(lo + chunk_size, n_paths)) for lo in range(0, n_paths, chunk_size)]


def run_paths(
    process,
    grid: TimeGrid,
    n_paths: int,
    seed: int,
    evaluate: Evaluator,
    coupled: bool = False,
    stream_offset: int = 0,
    workers: int = 1,
    chunk_size: int = 4096,
) -> np.ndarray:
    """
    Simulate `n_paths` paths and reduce each chunk with `evaluate`.

    Path i is driven by stream (seed, stream_offset + i). `evaluate(paths)` (or `evaluate(paths,
    reflected)` when coupled) must return one row per path; rows are concatenated in stream order, so
    the output does not depend on `workers` or `chunk_size`.

    Args:
        process: a process spec exposing `sample(grid, streams, reflect=False)`
        grid: simulation grid
        n_paths: number of paths
        seed: master seed
        evaluate: chunk reducer, ndarray (chunk, n+1) -> ndarray (chunk, ...)
        coupled: also pass the reflected twin driven by the negated noise
        stream_offset: first stream id
        workers: number of threads
        chunk_size: paths per chunk

    Returns:
        ndarray with one leading row per path
    """
    if n_paths < 1:
        raise DomainError(f"n_paths must be positive, got {n_paths}")
    if coupled and not getattr(process, "reflectable", False):
        raise StructuralError(f"{type(process).__name__} has no reflection coupling W -> -W")

    def work(bounds: Tuple[int, int]) -> np.ndarray:
        lo, hi = bounds
        streams = stream_range(seed, stream_offset + lo, stream_offset + hi)
        paths = process.sample(grid, streams)
        if coupled:
            reflected = process.sample(grid, streams, reflect=True)
            out = evaluate(paths, reflected)
        else:
            out = evaluate(paths)
        out = np.asarray(out, dtype=np.float64)
        if out.shape[0] != hi - lo:
            raise StructuralError("evaluate must return one row per path")
        return out

    chunks = _chunks(n_paths, max(1, int(chunk_size)))
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    logger.debug("simulated %d paths of %s in %d chunks", n_paths, type(process).__name__, len(chunks))
    return np.concatenate(parts, axis=0)


def simulate_paths(
    process,
    grid: TimeGrid,
    n_paths: int,
    seed: int,
    reflect: bool = False,
    stream_offset: int = 0,
    workers: int = 1,
    chunk_size: int = 4096,
) -> np.ndarray:
    """Full (n_paths, n+1) array of node values; meant for small budgets."""
    if reflect:
        return run_paths(process, grid, n_paths, seed, lambda p, r: r, coupled=True,
                         stream_offset=stream_offset, workers=workers, chunk_size=chunk_size)
    return run_paths(process, grid, n_paths, seed, lambda p: p,
                     stream_offset=stream_offset, workers=workers, chunk_size=chunk_size)


def evaluate_functionals(
    process,
    grid: TimeGrid,
    functionals: list,
    n_paths: int,
    seed: int,
    stream_offset: int = 0,
    workers: int = 1,
    chunk_size: int = 4096,
    reflected: Optional[bool] = False,
) -> np.ndarray:
    """(n_paths, len(functionals)) matrix of functional values on common paths."""
    def evaluate(paths: np.ndarray) -> np.ndarray:
        return np.column_stack([f.evaluate(paths, grid) for f in functionals])

    if reflected:
        return run_paths(process, grid, n_paths, seed, lambda p, r: evaluate(r), coupled=True,
                         stream_offset=stream_offset, workers=workers, chunk_size=chunk_size)
    return run_paths(process, grid, n_paths, seed, evaluate, stream_offset=stream_offset,
                     workers=workers, chunk_size=chunk_size)
