"""Master-worker parallel fitness evaluation.

The master splits the population into contiguous batches, one per worker
in a fixed in-process thread pool, and blocks at a barrier until every
batch is done. Workers only read shared immutable scenario data and
write disjoint result slots, and the compiled kernel releases the GIL,
so batches genuinely run concurrently. Objective values are bit-identical
for any worker count because each individual's evaluation is a pure
function of the individual and the scenario; the master never evaluates
and no randomness is consumed here.
"""
from __future__ import annotations

import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from . import evolution, kernel
from .model import Individual, ObjectiveVector, Scenario


@dataclass(frozen=True)
class EvalBatch:
    """A contiguous population slice assigned to one worker."""

    start: int
    count: int
    worker_id: int


@dataclass
class EvalTimings:
    """Wall time of one evaluation phase and per-worker busy time."""

    wall_s: float
    worker_busy_s: list[float]


class EvaluationError(RuntimeError):
    def __init__(self, index: int, cause: BaseException):
        super().__init__(f"evaluation failed for individual {index}: {cause!r}")
        self.index = index


def partition(n_individuals: int, n_workers: int) -> list[EvalBatch]:
    """Contiguous batches of near-equal size, larger ones first."""
    if n_workers < 1:
        raise ValueError(f"n_workers must be >= 1, got {n_workers}")
    base, rem = divmod(n_individuals, n_workers)
    batches = []
    start = 0
    for w in range(n_workers):
        size = base + (1 if w < rem else 0)
        batches.append(EvalBatch(start=start, count=size, worker_id=w))
        start += size
    return batches


class PopulationEvaluator:
    """Blocking batch-evaluation capability over a persistent worker pool.

    Callable with a sequence of individuals; returns them fully evaluated
    in index order. The timings of the most recent call are kept in
    last_timings.
    """

    def __init__(self, scenario: Scenario, n_workers: int):
        if n_workers < 1:
            raise ValueError(f"n_workers must be >= 1, got {n_workers}")
        self.scenario = scenario
        self.n_workers = n_workers
        self.arrays = kernel.pack_scenario(scenario)
        self.last_timings: EvalTimings | None = None
        self._pool = ThreadPoolExecutor(max_workers=n_workers)

    def __call__(self, individuals: Sequence[Individual]) -> list[Individual]:
        n = len(individuals)
        results: list[ObjectiveVector | None] = [None] * n
        busy = [0.0] * self.n_workers
        arrays = self.arrays

        def work(batch: EvalBatch) -> None:
            t0 = time.perf_counter()
            for i in range(batch.start, batch.start + batch.count):
                try:
                    results[i] = kernel.evaluate_arrays(individuals[i].chromosome, arrays)
                except Exception as exc:
                    raise EvaluationError(i, exc) from exc
            busy[batch.worker_id] = time.perf_counter() - t0

        t_wall = time.perf_counter()
        futures = [self._pool.submit(work, b) for b in partition(n, self.n_workers)]
        errors: list[EvaluationError] = []
        for f in futures:
            exc = f.exception()
            if isinstance(exc, EvaluationError):
                errors.append(exc)
            elif exc is not None:
                raise exc
        self.last_timings = EvalTimings(wall_s=time.perf_counter() - t_wall, worker_busy_s=busy)

        if errors:
            raise min(errors, key=lambda e: e.index)
        out = list(individuals)
        for ind, obj in zip(out, results):
            ind.objectives = obj
        return out

    def close(self) -> None:
        self._pool.shutdown(wait=True)

    def __enter__(self) -> "PopulationEvaluator":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def evaluate_population(
    population: Sequence[Individual], scenario: Scenario, n_workers: int
) -> tuple[list[Individual], EvalTimings]:
    """One-shot parallel evaluation with a full barrier before return."""
    with PopulationEvaluator(scenario, n_workers) as evaluator:
        evaluated = evaluator(population)
        return evaluated, evaluator.last_timings


@dataclass(frozen=True)
class SweepRow:
    workers: int
    run: int
    wall_seconds: float
    speedup: float


@dataclass(frozen=True)
class SweepSummary:
    workers: int
    mean_wall_seconds: float
    speedup: float


@dataclass
class SweepResult:
    rows: list[SweepRow]
    summary: list[SweepSummary]


def speedup_sweep(scenario: Scenario, worker_range: Sequence[int], repeats: int) -> SweepResult:
    """Run the full optimization `repeats` times per worker count.

    Speedup is the mean wall time at the smallest worker count in the
    range (1 in the usual protocol) over the mean wall time at each
    count, repeated on every row of that count.
    """
    if not worker_range:
        raise ValueError("worker_range is empty")
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")

    kernel.warm_up()
    kernel.pack_scenario(scenario)  # JIT and packing paid before any timer starts

    walls: dict[int, list[float]] = {}
    for w in worker_range:
        walls[w] = []
        for _ in range(repeats):
            with PopulationEvaluator(scenario, w) as evaluator:
                t0 = time.perf_counter()
                evolution.run(scenario, evaluator)
                walls[w].append(time.perf_counter() - t0)

    baseline = statistics.fmean(walls[min(worker_range)])
    rows = []
    summary = []
    for w in worker_range:
        mean_wall = statistics.fmean(walls[w])
        speedup = baseline / mean_wall
        summary.append(SweepSummary(workers=w, mean_wall_seconds=mean_wall, speedup=speedup))
        for r, wall in enumerate(walls[w], start=1):
            rows.append(SweepRow(workers=w, run=r, wall_seconds=wall, speedup=speedup))
    return SweepResult(rows=rows, summary=summary)
