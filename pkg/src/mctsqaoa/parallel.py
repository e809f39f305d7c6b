"""Process pool for independently seeded solve tasks.

Workers rebuild the model once at startup and then serve solve requests, so
task payloads stay small.  Every task draws from a stream addressed by its
own index, which makes results identical to the serial path regardless of
scheduling.  Worker BLAS threading is capped to one thread per process to
avoid oversubscription.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from multiprocessing import get_context

from .models import ModelSpec, build
from .reward import NoiseModel, RewardEvaluator
from .rng import Stream

_WORKER_EVALUATOR: RewardEvaluator | None = None

_THREAD_ENV_VARS = ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS")


def _init_worker(spec: ModelSpec, noise: NoiseModel) -> None:
    global _WORKER_EVALUATOR
    _WORKER_EVALUATOR = RewardEvaluator(build(spec), noise)


def _solve_task(args):
    from .npg import inner_solve

    seq, cfg, stream = args
    return inner_solve(_WORKER_EVALUATOR, seq, cfg, stream)


def _landscape_task(args):
    from .baselines import LandscapeRecord
    from .npg import NonFinite
    from .baselines import solve_sequence_ratio

    index, seq, cfg, stream = args
    evaluator = _WORKER_EVALUATOR
    before = evaluator.count
    try:
        try:
            _, ratio = solve_sequence_ratio(evaluator, seq, cfg, stream.child("seq", index))
        except NonFinite:
            _, ratio = solve_sequence_ratio(evaluator, seq, cfg, stream.child("seq_retry", index))
    except NonFinite:
        return None
    return LandscapeRecord(index, seq, ratio, evaluator.count - before)


@contextmanager
def _single_thread_env():
    saved = {k: os.environ.get(k) for k in _THREAD_ENV_VARS}
    for k in _THREAD_ENV_VARS:
        os.environ[k] = "1"
    try:
        yield
    finally:
        for k, v in saved.items():
            if v is None:
                os.environ.pop(k, None)
            else:
                os.environ[k] = v


class WorkerPool:
    """Fixed pool of solver processes bound to one (model, noise) pair."""

    def __init__(self, spec: ModelSpec, noise: NoiseModel, workers: int):
        if workers < 1:
            raise ValueError("workers must be >= 1")
        self.workers = workers
        with _single_thread_env():
            self._executor = ProcessPoolExecutor(
                max_workers=workers,
                mp_context=get_context("spawn"),
                initializer=_init_worker,
                initargs=(spec, noise),
            )

    def map_solves(self, seq, cfg, streams: list[Stream]):
        return list(self._executor.map(_solve_task, [(seq, cfg, s) for s in streams]))

    def map_landscape(self, tasks, cfg, stream: Stream):
        payload = [(i, s, cfg, stream) for i, s in tasks]
        return list(self._executor.map(_landscape_task, payload))

    def shutdown(self) -> None:
        self._executor.shutdown(wait=True)

    def __enter__(self) -> "WorkerPool":
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()


def resolve_workers(cli_value: int | None) -> int:
    """Worker count: CLI flag, then MCTSQAOA_WORKERS, then 1."""
    if cli_value is not None:
        return max(1, int(cli_value))
    env = os.environ.get("MCTSQAOA_WORKERS")
    if env:
        return max(1, int(env))
    return 1
