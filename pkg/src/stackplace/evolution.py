"""Elitist multi-objective engine: non-dominated sorting, crowding,
tournament selection, permutation operators, and the generation loop.

The engine itself is single-threaded; the only concurrent boundary is
the evaluator capability, which must behave as a pure batch function.
All randomness is drawn from one master generator in a fixed order, and
evaluation never consumes it, so results are independent of how the
evaluator schedules its work.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .model import Chromosome, Individual, ObjectiveVector, Scenario, make_rng, random_chromosome

Population = list[Individual]
Evaluator = Callable[[Sequence[Individual]], list[Individual]]


@dataclass
class PhaseTimings:
    evaluation_s: float = 0.0
    selection_s: float = 0.0
    crossover_s: float = 0.0
    mutation_s: float = 0.0
    reduction_s: float = 0.0

    def total_s(self) -> float:
        return self.evaluation_s + self.selection_s + self.crossover_s + self.mutation_s + self.reduction_s


@dataclass
class GenerationRecord:
    """Objective vectors of feasible (violation-free) individuals plus
    wall-clock phase timings for one generation."""

    feasible: tuple[ObjectiveVector, ...]
    timings: PhaseTimings


@dataclass
class RunArchive:
    """Per-run history: the evaluated initial population plus one record
    per completed generation."""

    initial: GenerationRecord
    generations: list[GenerationRecord] = field(default_factory=list)


def dominates(a: ObjectiveVector, b: ObjectiveVector) -> bool:
    """Pareto dominance, all objectives minimized. Irreflexive."""
    return (
        a.j1 <= b.j1
        and a.j2 <= b.j2
        and a.j3 <= b.j3
        and (a.j1 < b.j1 or a.j2 < b.j2 or a.j3 < b.j3)
    )


def _objective_matrix(population: Sequence[Individual]) -> np.ndarray:
    rows = []
    for ind in population:
        if ind.objectives is None:
            raise ValueError("population must be evaluated before sorting")
        rows.append(ind.objectives)
    return np.asarray(rows, dtype=np.float64)


def fast_nondominated_sort(population: Sequence[Individual]) -> list[list[int]]:
    """Partition indices into fronts and assign each individual's rank."""
    vecs = _objective_matrix(population)
    le = (vecs[:, None, :] <= vecs[None, :, :]).all(axis=2)
    lt = (vecs[:, None, :] < vecs[None, :, :]).any(axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    counts = dom.sum(axis=0).astype(np.int64)

    fronts: list[list[int]] = []
    current = np.flatnonzero(counts == 0)
    rank = 0
    while current.size:
        for i in current:
            population[int(i)].rank = rank
        fronts.append([int(i) for i in current])
        counts[current] = -1
        counts = counts - dom[current].sum(axis=0)
        current = np.flatnonzero(counts == 0)
        rank += 1
    return fronts


def crowding_distance(front: Sequence[Individual]) -> list[float]:
    """Per-objective neighbor gaps, normalized; boundaries are infinite.

    Objectives with zero spread are skipped. Assigns each individual's
    crowding attribute and returns the values in front order.
    """
    k = len(front)
    if k == 0:
        raise ValueError("empty front")
    vecs = _objective_matrix(front)
    dist = np.zeros(k, dtype=np.float64)
    if k <= 2:
        dist[:] = math.inf
    else:
        for obj in range(vecs.shape[1]):
            o = np.argsort(vecs[:, obj], kind="stable")
            vmin = vecs[o[0], obj]
            vmax = vecs[o[-1], obj]
            dist[o[0]] = math.inf
            dist[o[-1]] = math.inf
            if vmax == vmin:
                continue
            for pos in range(1, k - 1):
                if math.isinf(dist[o[pos]]):
                    continue
                dist[o[pos]] += (vecs[o[pos + 1], obj] - vecs[o[pos - 1], obj]) / (vmax - vmin)
    out = [float(d) for d in dist]
    for ind, d in zip(front, out):
        ind.crowding = d
    return out


def tournament_select(population: Sequence[Individual], rng: np.random.Generator) -> Individual:
    """Binary tournament over two distinct indices: lower rank wins, then
    higher crowding, then the first drawn."""
    n = len(population)
    i = int(rng.integers(0, n))
    j = int(rng.integers(0, n - 1))
    if j >= i:
        j += 1
    a, b = population[i], population[j]
    if a.rank is None or b.rank is None or a.crowding is None or b.crowding is None:
        raise ValueError("tournament requires ranked individuals")
    if a.rank != b.rank:
        return a if a.rank < b.rank else b
    if a.crowding != b.crowding:
        return a if a.crowding > b.crowding else b
    return a


def _check_mates(p1: Chromosome, p2: Chromosome) -> None:
    if len(p1) != len(p2):
        raise ValueError(f"parent length mismatch: {len(p1)} vs {len(p2)}")
    if set(p1.order) != set(p2.order) or len(set(p1.order)) != len(p1):
        raise ValueError("parents are not permutations of the same ids")


def cycle_crossover(
    p1: Chromosome, p2: Chromosome, rng: np.random.Generator, prob: float
) -> tuple[Chromosome, Chromosome]:
    """Exchange everything outside the value cycle through position 0.

    The first child keeps the first parent's genes on cycle positions and
    takes the second parent's elsewhere; the second child mirrors that.
    Rotation flags travel with the gene they annotate. With probability
    1 - prob the parents are returned unchanged.
    """
    _check_mates(p1, p2)
    if float(rng.random()) >= prob:
        return p1, p2

    pos_in_p1 = {g: i for i, g in enumerate(p1.order)}
    cycle = {0}
    pos = 0
    while True:
        pos = pos_in_p1[p2.order[pos]]
        if pos == 0:
            break
        cycle.add(pos)

    n = len(p1)
    o1 = [p1.order[i] if i in cycle else p2.order[i] for i in range(n)]
    f1 = [p1.rotated[i] if i in cycle else p2.rotated[i] for i in range(n)]
    o2 = [p2.order[i] if i in cycle else p1.order[i] for i in range(n)]
    f2 = [p2.rotated[i] if i in cycle else p1.rotated[i] for i in range(n)]
    return (
        Chromosome(order=tuple(o1), rotated=tuple(f1)),
        Chromosome(order=tuple(o2), rotated=tuple(f2)),
    )


def swap_mutation(c: Chromosome, rng: np.random.Generator, prob: float) -> Chromosome:
    """Exchange two distinct genes (id and flag together) with probability prob."""
    n = len(c)
    if n < 2:
        return c
    if float(rng.random()) >= prob:
        return c
    i = int(rng.integers(0, n))
    j = int(rng.integers(0, n - 1))
    if j >= i:
        j += 1
    order = list(c.order)
    flags = list(c.rotated)
    order[i], order[j] = order[j], order[i]
    flags[i], flags[j] = flags[j], flags[i]
    return Chromosome(order=tuple(order), rotated=tuple(flags))


def rotation_mutation(c: Chromosome, rng: np.random.Generator, prob: float) -> Chromosome:
    """Toggle one uniformly chosen rotation flag with probability prob."""
    if float(rng.random()) >= prob:
        return c
    i = int(rng.integers(0, len(c)))
    flags = list(c.rotated)
    flags[i] = not flags[i]
    return Chromosome(order=c.order, rotated=tuple(flags))


def environmental_reduce(parents: Population, offspring: Population) -> Population:
    """Elitist (mu + lambda) reduction back to the parent population size.

    Merged fronts fill the next population in order; the last partially
    fitting front is truncated by descending crowding distance, ties by
    lower index in the merged list.
    """
    merged = list(parents) + list(offspring)
    n_keep = len(parents)
    fronts = fast_nondominated_sort(merged)
    result: Population = []
    for front in fronts:
        crowding_distance([merged[i] for i in front])
        if len(result) + len(front) <= n_keep:
            result.extend(merged[i] for i in front)
        else:
            take = n_keep - len(result)
            chosen = sorted(front, key=lambda i: (-merged[i].crowding, i))[:take]
            result.extend(merged[i] for i in chosen)
        if len(result) == n_keep:
            break
    return result


def _snapshot(population: Population, timings: PhaseTimings) -> GenerationRecord:
    feasible = tuple(ind.objectives for ind in population if ind.objectives.j1 == 0)
    return GenerationRecord(feasible=feasible, timings=timings)


def run(scenario: Scenario, evaluator: Evaluator) -> tuple[Population, RunArchive]:
    """Evolve params.generations generations from a random population.

    Evaluation errors propagate; the archive built so far (completed
    generations only) is attached to the exception as `run_archive`.
    """
    params = scenario.params
    rng = make_rng(params.seed)
    n = params.population_size

    t0 = time.perf_counter()
    population = [Individual(random_chromosome(scenario, rng)) for _ in range(n)]
    population = evaluator(population)
    eval_s = time.perf_counter() - t0

    t0 = time.perf_counter()
    for front in fast_nondominated_sort(population):
        crowding_distance([population[i] for i in front])
    rank_s = time.perf_counter() - t0

    archive = RunArchive(
        initial=_snapshot(population, PhaseTimings(evaluation_s=eval_s, reduction_s=rank_s))
    )

    try:
        for _ in range(params.generations):
            timings = PhaseTimings()

            t0 = time.perf_counter()
            parents = [tournament_select(population, rng) for _ in range(n)]
            timings.selection_s = time.perf_counter() - t0

            t0 = time.perf_counter()
            child_chromosomes: list[Chromosome] = []
            for i in range(0, n, 2):
                c1, c2 = cycle_crossover(
                    parents[i].chromosome, parents[i + 1].chromosome, rng, params.crossover_prob
                )
                child_chromosomes.append(c1)
                child_chromosomes.append(c2)
            timings.crossover_s = time.perf_counter() - t0

            t0 = time.perf_counter()
            offspring = []
            for ch in child_chromosomes:
                ch = swap_mutation(ch, rng, params.mutation_prob)
                ch = rotation_mutation(ch, rng, params.rotation_prob)
                offspring.append(Individual(ch))
            timings.mutation_s = time.perf_counter() - t0

            t0 = time.perf_counter()
            offspring = evaluator(offspring)
            timings.evaluation_s = time.perf_counter() - t0

            t0 = time.perf_counter()
            population = environmental_reduce(population, offspring)
            timings.reduction_s = time.perf_counter() - t0

            archive.generations.append(_snapshot(population, timings))
    except Exception as exc:
        exc.run_archive = archive  # completed generations only
        raise

    return population, archive
