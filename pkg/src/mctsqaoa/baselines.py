"""Random-search baseline and discrete-landscape profiling.

Both reuse the NPG duration solver, so comparisons against the tree search
differ only in how gate sequences are proposed.  Landscape profiling solves
the continuous problem for many (possibly all) sequences and records each
sequence's exact noiseless energy ratio, the raw material for the ratio
histograms.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .models import sequence_count
from .npg import NonFinite, NpgConfig, best_of_inits, durations_from_draws
from .reward import GateSequence, RewardEvaluator
from .rng import Stream

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LandscapeRecord:
    index: int
    sequence: GateSequence
    ratio: float
    function_evals: int


@dataclass(frozen=True)
class SearchRecord:
    iteration: int
    sequence: GateSequence
    reward: float
    ratio: float
    best_ratio: float
    cumulative_evals: int


@dataclass
class RandomSearchReport:
    best_sequence: GateSequence
    best_ratio: float
    history: list[SearchRecord]
    function_eval_count: int


def enumerate_sequences(pool_size: int, q: int) -> Iterator[GateSequence]:
    """All no-adjacent-repeat sequences in lexicographic order."""
    if pool_size < 2:
        raise ValueError("pool_size must be at least 2")
    prefix: list[int] = []

    def rec() -> Iterator[GateSequence]:
        if len(prefix) == q:
            yield GateSequence(tuple(prefix))
            return
        for action in range(pool_size):
            if prefix and action == prefix[-1]:
                continue
            prefix.append(action)
            yield from rec()
            prefix.pop()

    return rec()


def sample_sequence(pool_size: int, q: int, rng: np.random.Generator) -> GateSequence:
    """One uniform draw from the constrained sequence space."""
    seq = [int(rng.integers(pool_size))]
    for _ in range(q - 1):
        r = int(rng.integers(pool_size - 1))
        seq.append(r + (r >= seq[-1]))
    return GateSequence(tuple(seq))


def sample_sequences(pool_size: int, q: int, count: int, rng: np.random.Generator) -> list[GateSequence]:
    """Uniform i.i.d. sequences; duplicates allowed."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return [sample_sequence(pool_size, q, rng) for _ in range(count)]


def solve_sequence_ratio(
    evaluator: RewardEvaluator,
    seq: GateSequence,
    npg_cfg: NpgConfig,
    stream: Stream,
) -> tuple[float, float]:
    """Solve durations for one sequence; (estimated reward, exact noiseless ratio)."""
    result = best_of_inits(evaluator, seq, npg_cfg, stream)
    durations = durations_from_draws(result.params.mu, evaluator.model.total_duration)
    return result.estimated_reward, evaluator.exact_ratio(seq, durations)


def profile_landscape(
    evaluator: RewardEvaluator,
    npg_cfg: NpgConfig,
    sequences: Iterable[GateSequence],
    stream: Stream,
    skip_indices: frozenset[int] = frozenset(),
    on_record=None,
    worker_pool=None,
) -> list[LandscapeRecord]:
    """Solve every sequence and record its exact ratio.

    Records are emitted through ``on_record`` as they complete, carrying the
    sequence index so interrupted jobs resume by skipping ``skip_indices``.
    A sequence whose solve fails twice is logged and skipped.
    """
    records: list[LandscapeRecord] = []

    def solve_one(index: int, seq: GateSequence) -> LandscapeRecord | None:
        before = evaluator.count
        try:
            try:
                _, ratio = solve_sequence_ratio(evaluator, seq, npg_cfg, stream.child("seq", index))
            except NonFinite:
                _, ratio = solve_sequence_ratio(
                    evaluator, seq, npg_cfg, stream.child("seq_retry", index)
                )
        except NonFinite:
            log.warning("skipping sequence %s: solver failed twice", seq.as_text())
            return None
        return LandscapeRecord(index, seq, ratio, evaluator.count - before)

    tasks = [(i, s) for i, s in enumerate(sequences) if i not in skip_indices]
    if worker_pool is not None:
        results = worker_pool.map_landscape(tasks, npg_cfg, stream)
        for rec in results:
            if rec is not None:
                evaluator.count += rec.function_evals
                records.append(rec)
                if on_record is not None:
                    on_record(rec)
        return records

    for index, seq in tasks:
        rec = solve_one(index, seq)
        if rec is not None:
            records.append(rec)
            if on_record is not None:
                on_record(rec)
    return records


def random_search(
    evaluator: RewardEvaluator,
    q: int,
    npg_cfg: NpgConfig,
    budget: int,
    stream: Stream,
    start_iteration: int = 0,
    prior_best: tuple[float, GateSequence] | None = None,
    on_record=None,
    max_iterations: int | None = None,
) -> RandomSearchReport | None:
    """Uniformly sampled sequences, each solved with the NPG inner loop.

    Stops once ``budget`` objective evaluations are consumed (the final solve
    may overshoot by at most one solve's cost).  Tracks the best exact
    noiseless ratio seen; ``prior_best`` carries that state across resumes.
    ``max_iterations`` behaves as in ``mcts.full_run``.
    """
    if budget < npg_cfg.num_inits * npg_cfg.evals_per_solve:
        raise ValueError("budget smaller than the cost of a single solve")
    history: list[SearchRecord] = []
    best_ratio, best_seq = prior_best if prior_best is not None else (-np.inf, None)
    done = 0
    t = start_iteration
    while evaluator.count < budget:
        if max_iterations is not None and done >= max_iterations:
            return None
        seq = sample_sequence(evaluator.model.pool_size, q, stream.child("draw", t).generator())
        reward, ratio = solve_sequence_ratio(evaluator, seq, npg_cfg, stream.child("solve", t))
        if ratio > best_ratio or best_seq is None:
            best_ratio, best_seq = ratio, seq
        record = SearchRecord(t, seq, reward, ratio, best_ratio, evaluator.count)
        history.append(record)
        if on_record is not None:
            on_record(t, record)
        t += 1
        done += 1
    assert best_seq is not None
    return RandomSearchReport(
        best_sequence=best_seq,
        best_ratio=best_ratio,
        history=history,
        function_eval_count=evaluator.count,
    )


def verify_enumeration(pool_size: int, q: int) -> bool:
    """Exhaustive self-check: enumeration is complete and duplicate-free."""
    seen = set()
    for seq in enumerate_sequences(pool_size, q):
        seen.add(seq.indices)
    return len(seen) == sequence_count(pool_size, q)
