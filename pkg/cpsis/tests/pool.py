# Licensed under the MIT license

import asyncio
from unittest import TestCase

import numpy as np

from cpsis.pool import Pool, chunked, get_context, run_worker
from cpsis.stability import bifurcation_sweep, sweep_on_pool, sweep_row
from cpsis.types import WorkerError

from .base import async_test, mapper, raise_fn, trimodal


def start_worker():
    tx = get_context().Queue()
    rx = get_context().Queue()
    worker = get_context().Process(target=run_worker, args=(tx, rx), daemon=True)
    worker.start()
    return worker, tx, rx


class PoolTest(TestCase):
    def test_chunked(self):
        self.assertEqual(chunked(range(7), 3), [[0, 1, 2], [3, 4, 5], [6]])
        self.assertEqual(chunked([], 3), [])

    def test_worker_chunks(self):
        worker, tx, rx = start_worker()
        tx.put_nowait((1, mapper, [(5,), (6,)]))
        self.assertEqual(rx.get(timeout=10), (1, [10, 12], None))
        self.assertTrue(worker.is_alive())

        tx.put(None)
        worker.join(timeout=10)
        self.assertFalse(worker.is_alive())

    def test_worker_exceptions(self):
        worker, tx, rx = start_worker()
        tx.put_nowait((1, raise_fn, [()]))
        tid, result, trace = rx.get(timeout=10)

        self.assertEqual(tid, 1)
        self.assertIsNone(result)
        self.assertIn("RuntimeError: raising", trace)

        tx.put(None)
        worker.join(timeout=10)
        self.assertFalse(worker.is_alive())

    @async_test
    async def test_pool(self):
        values = [(i,) for i in range(10)]
        expected = [mapper(i) for i in range(10)]

        async with Pool(2) as pool:
            self.assertEqual(pool.process_count, 2)
            self.assertEqual(len(pool.processes), 2)

            self.assertEqual(await pool.starmap(mapper, values), expected)
            for chunksize in (1, 3, 10, 50):
                with self.subTest(chunksize=chunksize):
                    results = await pool.starmap(mapper, values, chunksize)
                    self.assertEqual(results, expected)
            self.assertEqual(await pool.starmap(mapper, []), [])
            with self.assertRaises(ValueError):
                await pool.starmap(mapper, values, 0)

    @async_test
    async def test_pool_concurrent_calls(self):
        async with Pool(2) as pool:
            first, second = await asyncio.gather(
                pool.starmap(mapper, [(1,), (2,), (3,)]),
                pool.starmap(mapper, [(4,), (5,)]),
            )
        self.assertEqual(first, [2, 4, 6])
        self.assertEqual(second, [8, 10])

    @async_test
    async def test_pool_exception(self):
        async with Pool(2) as pool:
            with self.assertRaisesRegex(WorkerError, "RuntimeError: raising"):
                await pool.starmap(raise_fn, [()])

    @async_test
    async def test_pool_closed(self):
        pool = Pool(2)
        pool.close()

        with self.assertRaisesRegex(RuntimeError, "pool is closed"):
            await pool.starmap(mapper, [(1,), (2,)])

        pool.terminate()
        await pool.join()

    @async_test
    async def test_pool_early_join(self):
        async with Pool(2) as pool:
            with self.assertRaisesRegex(RuntimeError, "pool is still open"):
                await pool.join()

    @async_test
    async def test_lost_workers(self):
        async with Pool(1) as pool:
            pool.processes[0].terminate()
            pool.processes[0].join(timeout=10)
            with self.assertRaisesRegex(WorkerError, "lost to exited workers"):
                await pool.starmap(mapper, [(1,), (2,)], 1)

    def test_parallel_sweep(self):
        dist = trimodal()
        grid = np.linspace(0.5, 2.0, 8)
        sequential = bifurcation_sweep(dist, 1.0, grid)
        parallel = bifurcation_sweep(dist, 1.0, grid, processes=2)
        self.assertEqual(parallel, sequential)

    @async_test
    async def test_sweep_in_running_loop(self):
        dist = trimodal()
        taus = [0.5, 1.0, 1.5]
        rows = await sweep_on_pool(taus, dist, 1.0, processes=2)
        self.assertEqual(rows, [sweep_row(tau, dist, 1.0) for tau in taus])

        with self.assertRaisesRegex(RuntimeError, "await sweep_on_pool"):
            bifurcation_sweep(dist, 1.0, taus, processes=2)
