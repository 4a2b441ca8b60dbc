# Licensed under the MIT license

"""
Process pool for bifurcation sweeps, driven from an asyncio loop.

Sweep rows are independent and CPU-bound, so the rows are cut into chunks
and every chunk is one task for a plain child process. The parent keeps the
asyncio interface so that a sweep can be awaited or run with `asyncio.run`.
"""

import asyncio
import logging
import math
import multiprocessing
import os
import queue
import traceback
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from .types import PoolResult, PoolTask, R, T, TaskID, TracebackStr, WorkerError

DEFAULT_START_METHOD = "spawn"
CHUNKS_PER_PROCESS = 4
POLL_INTERVAL = 0.005

Context = multiprocessing.context.BaseContext
Queue = multiprocessing.Queue

# "spawn" behaves the same on every platform, but can only run importable functions
context = multiprocessing.get_context(DEFAULT_START_METHOD)

log = logging.getLogger(__name__)


def set_start_method(method: Optional[str] = DEFAULT_START_METHOD) -> None:
    """
    Set the start method used for future pools.

    `None` selects CPython's platform default instead of "spawn".
    """
    global context
    context = multiprocessing.get_context(method)


def get_context() -> Context:
    return context


def chunked(items: Sequence[T], chunksize: int) -> List[List[T]]:
    return [list(items[i : i + chunksize]) for i in range(0, len(items), chunksize)]


def run_worker(tx: Queue, rx: Queue) -> None:
    """Worker body: run chunks from `tx`, post `(tid, results, traceback)` to `rx`."""
    while True:
        task: PoolTask = tx.get()
        if task is None:
            break

        tid, func, chunk = task
        results = None
        tb = None
        try:
            results = [func(*args) for args in chunk]
        except BaseException:
            log.exception(f"chunk {tid} failed in worker {os.getpid()}")
            tb = traceback.format_exc()

        rx.put((tid, results, tb))


class Pool:
    """Evaluate rows of a sweep on a pool of child processes."""

    def __init__(self, processes: Optional[int] = None) -> None:
        self.context = get_context()
        self.process_count = max(1, processes or os.cpu_count() or 2)

        self.tx: Queue = self.context.Queue()
        self.rx: Queue = self.context.Queue()
        self.processes: List[multiprocessing.process.BaseProcess] = []

        self.running = True
        self.broken = False
        self.last_id = 0
        self._results: Dict[TaskID, Tuple[Any, Optional[TracebackStr]]] = {}

        for _ in range(self.process_count):
            self.processes.append(self.create_worker())
        self._loop = asyncio.ensure_future(self.loop())

    async def __aenter__(self) -> "Pool":
        return self

    async def __aexit__(self, *args) -> None:
        self.terminate()
        await self.join()

    def create_worker(self) -> multiprocessing.process.BaseProcess:
        process = self.context.Process(
            target=run_worker, args=(self.tx, self.rx), daemon=True
        )
        process.start()
        log.debug(f"started sweep worker {process.pid}")
        return process

    async def loop(self) -> None:
        """Collect finished chunks until every worker has exited."""
        while self.running or any(p.is_alive() for p in self.processes):
            while True:
                try:
                    result: PoolResult = self.rx.get_nowait()
                except queue.Empty:
                    break
                task_id, values, tb = result
                self._results[task_id] = values, tb

            if self.running and not all(p.is_alive() for p in self.processes):
                dead = [p.pid for p in self.processes if not p.is_alive()]
                log.error(f"sweep workers {dead} exited while the pool was open")
                self.broken = True
                self.running = False

            await asyncio.sleep(POLL_INTERVAL)

    def queue_chunk(
        self, func: Callable[..., R], chunk: List[Sequence[Any]]
    ) -> TaskID:
        self.last_id += 1
        task_id = TaskID(self.last_id)
        self.tx.put_nowait((task_id, func, chunk))
        return task_id

    async def results(self, tids: Sequence[TaskID]) -> List[R]:
        """Results of every chunk in `tids`, flattened in submission order."""
        pending = set(tids)
        ready: Dict[TaskID, List[R]] = {}

        while pending:
            for tid in pending.copy():
                if tid in self._results:
                    values, tb = self._results.pop(tid)
                    if tb is not None:
                        raise WorkerError(tb)
                    ready[tid] = values
                    pending.remove(tid)

            if pending and self.broken:
                raise WorkerError(f"{len(pending)} chunks lost to exited workers")
            await asyncio.sleep(POLL_INTERVAL)

        return [value for tid in tids for value in ready[tid]]

    async def starmap(
        self,
        func: Callable[..., R],
        iterable: Sequence[Sequence[Any]],
        chunksize: Optional[int] = None,
    ) -> List[R]:
        """`func(*args)` for every argument tuple, results in input order."""
        if not self.running:
            raise RuntimeError("pool is closed")

        items = list(iterable)
        if not items:
            return []
        if chunksize is None:
            chunks = CHUNKS_PER_PROCESS * self.process_count
            chunksize = math.ceil(len(items) / chunks)
        if chunksize < 1:
            raise ValueError(f"chunksize must be positive, got {chunksize}")

        tids = [self.queue_chunk(func, chunk) for chunk in chunked(items, chunksize)]
        return await self.results(tids)

    def close(self) -> None:
        """Close the pool to new work; workers exit once the queue drains."""
        self.running = False
        for _ in self.processes:
            self.tx.put_nowait(None)

    def terminate(self) -> None:
        if self.running:
            self.close()

        for process in self.processes:
            process.terminate()

    async def join(self) -> None:
        """Wait for the collection loop to exit after `close` or `terminate`."""
        if self.running:
            raise RuntimeError("pool is still open")

        await self._loop
