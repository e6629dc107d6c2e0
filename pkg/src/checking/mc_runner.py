"""
Monte Carlo runner.

Splits a simulation into fixed-size chunks, each bound to its own random
stream, and executes them inline or on a worker pool. Results always come
back in chunk order, so worker count never changes an answer.
"""

import logging
import threading
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Generic, List, Optional, Sequence, Tuple, TypeVar

from ..data.models import McConfig, RunStatus
from ..errors import NumericalError, PriorConflictError
from ..numerics.rng_dist import SeededStream

logger = logging.getLogger(__name__)

T = TypeVar('T')

PROGRESS_LOG_MIN_CHUNKS = 20    # Smaller runs do not log progress


@dataclass(frozen=True)
class Chunk:
    """A contiguous block of draws with its own stream."""
    index: int
    start: int
    size: int
    stream: SeededStream
    group: int = 0          # Grid point the chunk belongs to (power studies)


def plan_chunks(total: int, chunk_size: int, base_seed: int,
                path: Tuple[int, ...] = (), group: int = 0) -> List[Chunk]:
    """
    Partition `total` draws into chunks of at most `chunk_size`.

    Chunk k draws from stream (base_seed, k, path), so the mapping from
    draw index to random stream depends only on the arguments.
    """
    chunks = []
    start = 0
    index = 0
    while start < total:
        size = min(chunk_size, total - start)
        chunks.append(Chunk(index, start, size, SeededStream(base_seed, index, tuple(path)), group))
        start += size
        index += 1
    return chunks


class MonteCarloRunner(Generic[T]):
    """
    Executes chunked Monte Carlo work.

    Uses a thread pool by default; a process pool needs picklable tasks.
    With n_workers == 1 chunks run inline on the calling thread.
    """

    def __init__(self, config: McConfig):
        self.config = config
        self._status = RunStatus()
        self._stop_requested = False
        self._thread: Optional[threading.Thread] = None
        self._results: Optional[List[T]] = None

        # Callbacks
        self._on_chunk_callback: Optional[Callable[[Chunk, T], None]] = None
        self._on_progress_callback: Optional[Callable[[float], None]] = None
        self._on_complete_callback: Optional[Callable[[List[T]], None]] = None
        self._on_error_callback: Optional[Callable[[str], None]] = None

    @property
    def status(self) -> RunStatus:
        return self._status

    @property
    def results(self) -> Optional[List[T]]:
        """Chunk results of the last completed run."""
        return self._results

    def set_callbacks(self,
                      on_chunk: Optional[Callable[[Chunk, T], None]] = None,
                      on_progress: Optional[Callable[[float], None]] = None,
                      on_complete: Optional[Callable[[List[T]], None]] = None,
                      on_error: Optional[Callable[[str], None]] = None):
        """
        Set callback functions for run events.

        Args:
            on_chunk: Called with each finished chunk and its result, in chunk order
            on_progress: Called with progress percentage (0-100)
            on_complete: Called with all chunk results when the run finishes
            on_error: Called with the error message if a chunk fails
        """
        self._on_chunk_callback = on_chunk
        self._on_progress_callback = on_progress
        self._on_complete_callback = on_complete
        self._on_error_callback = on_error

    def stop(self):
        """Request a cooperative stop; pending chunks are cancelled."""
        self._stop_requested = True

    def start(self, chunks: Sequence[Chunk], task: Callable[[Chunk], T]):
        """Run in a background thread; poll `status` and read `results`."""
        if self._status.is_running:
            return
        self._thread = threading.Thread(target=self._run_quietly, args=(chunks, task))
        self._thread.daemon = True
        self._thread.start()

    def join(self, timeout: Optional[float] = None):
        if self._thread:
            self._thread.join(timeout=timeout)

    def _run_quietly(self, chunks, task):
        try:
            self.run(chunks, task)
        except PriorConflictError:
            # Already recorded in status and reported through on_error
            pass

    def run(self, chunks: Sequence[Chunk], task: Callable[[Chunk], T]) -> List[T]:
        """
        Execute `task` on every chunk and return results in chunk order.

        Raises:
            NumericalError: a chunk failed, or the run was stopped early
            DomainError: a chunk rejected its inputs
        """
        self._stop_requested = False
        self._results = None
        self._status = RunStatus(is_running=True, chunks_total=len(chunks))
        results: List[T] = []

        try:
            if self.config.n_workers == 1 or len(chunks) <= 1:
                for chunk in chunks:
                    if self._stop_requested:
                        break
                    result = self._execute(task, chunk)
                    self._record(chunk, result, results)
            else:
                with self._make_executor() as pool:
                    futures = [pool.submit(task, chunk) for chunk in chunks]
                    try:
                        for chunk, future in zip(chunks, futures):
                            if self._stop_requested:
                                break
                            result = self._collect(future, chunk)
                            self._record(chunk, result, results)
                    finally:
                        # Chunks not yet started are dropped on stop or failure
                        for pending in futures:
                            pending.cancel()

            if self._stop_requested and len(results) < len(chunks):
                raise NumericalError(
                    f"run stopped after {len(results)} of {len(chunks)} chunks"
                )

            self._results = results
            if self._on_complete_callback:
                self._on_complete_callback(results)
            return results

        except PriorConflictError as e:
            self._status.error_message = str(e)
            logger.error("Monte Carlo run failed: %s", e)
            if self._on_error_callback:
                self._on_error_callback(str(e))
            raise

        finally:
            self._status.is_running = False

    def _make_executor(self) -> Executor:
        if self.config.executor == "process":
            return ProcessPoolExecutor(max_workers=self.config.n_workers)
        return ThreadPoolExecutor(max_workers=self.config.n_workers)

    @staticmethod
    def _execute(task, chunk: Chunk):
        try:
            return task(chunk)
        except Exception as e:
            raise _with_chunk_context(e, chunk) from e

    @staticmethod
    def _collect(future, chunk: Chunk):
        try:
            return future.result()
        except Exception as e:
            raise _with_chunk_context(e, chunk) from e

    def _record(self, chunk: Chunk, result: T, results: List[T]):
        results.append(result)
        self._status.chunks_done = len(results)
        total = max(self._status.chunks_total, 1)
        progress = 100.0 * len(results) / total
        if total >= PROGRESS_LOG_MIN_CHUNKS and (10 * len(results)) // total > (10 * (len(results) - 1)) // total:
            logger.info("Monte Carlo progress: %d/%d chunks (%.0f%%)", len(results), total, progress)
        self._status.progress_percent = progress
        if self._on_chunk_callback:
            self._on_chunk_callback(chunk, result)
        if self._on_progress_callback:
            self._on_progress_callback(progress)


def _with_chunk_context(error: Exception, chunk: Chunk) -> PriorConflictError:
    message = f"chunk {chunk.index} ({chunk.stream.describe()}): {error}"
    if isinstance(error, PriorConflictError):
        return type(error)(message)
    return NumericalError(message)
