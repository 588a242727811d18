import logging
import os
import traceback
from functools import partial

from tqdm import tqdm

from utils.commons.hparams import hparams

_KILL = '<KILL>'


def chunked_worker(worker_id, args_queue=None, results_queue=None, init_ctx_func=None):
    ctx = init_ctx_func(worker_id) if init_ctx_func is not None else None
    while True:
        args = args_queue.get()
        if args == _KILL:
            return
        job_idx, map_func, arg = args
        try:
            map_func_ = partial(map_func, ctx=ctx) if ctx is not None else map_func
            if isinstance(arg, dict):
                res = map_func_(**arg)
            elif isinstance(arg, (list, tuple)):
                res = map_func_(*arg)
            else:
                res = map_func_(arg)
            results_queue.put((job_idx, res, None))
        except Exception as e:
            results_queue.put((job_idx, None, f'{type(e).__name__}: {e}\n{traceback.format_exc()}'))


class WorkerError(RuntimeError):
    pass


class MultiprocessManager:
    def __init__(self, num_workers=None, init_ctx_func=None, multithread=False):
        if multithread:
            from multiprocessing.dummy import Queue, Process
        else:
            from multiprocessing import Queue, Process
        if num_workers is None:
            num_workers = int(os.getenv('N_PROC', os.cpu_count()))
        self.num_workers = num_workers
        self.multithread = multithread
        self.results_queue = Queue()
        self.args_queue = Queue()
        self.total_jobs = 0
        self.workers = []
        for i in range(num_workers):
            if multithread:
                p = Process(target=chunked_worker,
                            args=(i, self.args_queue, self.results_queue, init_ctx_func))
            else:
                p = Process(target=chunked_worker,
                            args=(i, self.args_queue, self.results_queue, init_ctx_func),
                            daemon=True)
            self.workers.append(p)
            p.start()

    def add_job(self, func, args):
        self.args_queue.put((self.total_jobs, func, args))
        self.total_jobs += 1

    def get_results(self):
        for _ in range(self.total_jobs):
            job_id, res, err = self.results_queue.get()
            if err is not None:
                self.close()
                raise WorkerError(f'job {job_id} failed: {err}')
            yield job_id, res
        for _ in range(self.num_workers):
            self.args_queue.put(_KILL)
        for w in self.workers:
            w.join()

    def close(self):
        if not self.multithread:
            for w in self.workers:
                w.terminate()

    def __len__(self):
        return self.total_jobs


def multiprocess_run(map_func, args, num_workers=None, ordered=True, init_ctx_func=None, multithread=False):
    """
    Run ``map_func`` over ``args`` on a worker pool and yield ``(job_idx, result)``.

    With ``ordered=True`` results come back in job order whatever the worker count.
    ``num_workers`` of 0 or 1 runs inline without spawning anything.
    """
    if num_workers is None:
        num_workers = int(os.getenv('N_PROC', os.cpu_count()))
    if num_workers <= 1:
        for i, arg in enumerate(args):
            if isinstance(arg, dict):
                yield i, map_func(**arg)
            elif isinstance(arg, (list, tuple)):
                yield i, map_func(*arg)
            else:
                yield i, map_func(arg)
        return
    manager = MultiprocessManager(num_workers, init_ctx_func, multithread)
    for arg in args:
        manager.add_job(map_func, arg)
    if ordered:
        n_jobs = len(args)
        results = {}
        i_now = 0
        for job_i, res in manager.get_results():
            results[job_i] = res
            while i_now < n_jobs and i_now in results:
                yield i_now, results.pop(i_now)
                i_now += 1
    else:
        for job_i, res in manager.get_results():
            yield job_i, res
    manager.close()


def multiprocess_run_tqdm(map_func, args, num_workers=None, ordered=True, init_ctx_func=None,
                          multithread=False, desc=None, disable=False):
    logging.debug(f'| {desc}: {len(args)} jobs on {num_workers} workers')
    for i, res in tqdm(
            multiprocess_run(map_func, args, num_workers, ordered, init_ctx_func, multithread),
            total=len(args), desc=desc, disable=disable):
        yield i, res


def chunks(n_items, chunk_size):
    return [(lo, min(lo + chunk_size, n_items)) for lo in range(0, n_items, chunk_size)]


def chunked_map(map_func, items, num_workers=None, multithread=None, chunk_size=None, desc=None, progress=None):
    """
    ``[map_func(x) for x in items]`` computed chunk-wise on the pool, in input order.

    ``map_func`` must be picklable (module level, or a ``functools.partial`` of one) unless the
    pool is multithreaded or inline.
    """
    num_workers = hparams.get('num_workers', 1) if num_workers is None else num_workers
    multithread = hparams.get('multithread', False) if multithread is None else multithread
    chunk_size = hparams.get('chunk_size', 4096) if chunk_size is None else chunk_size
    progress = hparams.get('progress', False) if progress is None else progress
    items = list(items)
    if num_workers <= 1 and not progress:
        return [map_func(x) for x in items]
    args = [(partial(_map_chunk, map_func), items[lo:hi]) for lo, hi in chunks(len(items), chunk_size)]
    out = []
    for _, res in multiprocess_run_tqdm(_apply, args, num_workers, ordered=True, multithread=multithread,
                                        desc=desc, disable=not progress):
        out.extend(res)
    return out


def _apply(func, arg):
    return func(arg)


def _map_chunk(map_func, chunk):
    return [map_func(x) for x in chunk]
