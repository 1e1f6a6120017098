"""Seeded random substreams and an ordered worker pool."""

import hashlib
import os
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from typing import Any, Callable, Hashable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

KeyedResult = Tuple[Hashable, Optional[Any], Optional[BaseException]]


def default_workers() -> int:
    """Worker count from ``UAVNOMA_WORKERS`` (default 1)."""
    return max(1, int(os.getenv("UAVNOMA_WORKERS", "1")))


def derive_seed(seed: int, index: int) -> int:
    """64-bit substream seed for sweep point ``index`` of run ``seed``."""
    digest = hashlib.sha256(f"{int(seed)}:{int(index)}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


class ChunkStreams(NamedTuple):
    """Independent generators used by one Monte Carlo chunk."""

    geometry: np.random.Generator
    fading: np.random.Generator
    policy: np.random.Generator


def chunk_seeds(seed: int, n_chunks: int) -> List[np.random.SeedSequence]:
    return np.random.SeedSequence(int(seed)).spawn(n_chunks)


def chunk_streams(seed_seq: np.random.SeedSequence) -> ChunkStreams:
    return ChunkStreams(*(np.random.default_rng(s) for s in seed_seq.spawn(3)))


def chunk_sizes(trials: int, chunk_size: int) -> List[int]:
    """Split ``trials`` into full chunks plus a remainder."""
    full, rest = divmod(int(trials), int(chunk_size))
    return [chunk_size] * full + ([rest] if rest else [])


class WorkerPool:
    """Ordered fan-out over a thread or process pool.

    Results come back in submission order as ``(key, result, error)``
    tuples. With one worker the calls run inline.

    Example:
        >>> with WorkerPool(workers=4) as pool:
        ...     out = pool.map(work, [(0, (a,)), (1, (b,))])
    """

    def __init__(self, workers: Optional[int] = None, processes: bool = False):
        self.workers = workers if workers is not None else default_workers()
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        self.processes = processes
        self._executor: Optional[Executor] = None

    def __enter__(self) -> "WorkerPool":
        if self.workers > 1:
            cls = ProcessPoolExecutor if self.processes else ThreadPoolExecutor
            self._executor = cls(max_workers=self.workers)
        return self

    def __exit__(self, *exc) -> None:
        if self._executor is not None:
            self._executor.shutdown()
            self._executor = None

    def map(
        self, fn: Callable[..., Any], jobs: Sequence[Tuple[Hashable, tuple]]
    ) -> List[KeyedResult]:
        """Run ``fn(*args)`` for every ``(key, args)`` job."""
        results: List[KeyedResult] = []
        if self._executor is None:
            for key, args in jobs:
                try:
                    results.append((key, fn(*args), None))
                except Exception as e:
                    results.append((key, None, e))
            return results

        futures = [(key, self._executor.submit(fn, *args)) for key, args in jobs]
        for key, future in futures:
            try:
                results.append((key, future.result(), None))
            except Exception as e:
                results.append((key, None, e))
        return results

    def run(
        self, fn: Callable[..., Any], jobs: Sequence[Tuple[Hashable, tuple]]
    ) -> List[Any]:
        """Like ``map`` but returns bare results and re-raises the first error."""
        out = []
        for key, result, error in self.map(fn, jobs):
            if error is not None:
                logger.error(f"job {key!r} failed: {error}")
                raise error
            out.append(result)
        return out
