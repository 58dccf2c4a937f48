"""Domain model: components, chips, scenarios, chromosomes, individuals.

All model types are immutable after validation and safe to share read-only
across evaluation workers. Every run's randomness flows from the single
seed in EvolutionParams through a numpy PCG64 generator.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np


class ScenarioError(ValueError):
    """A scenario record violates a model invariant."""


class ComponentKind(str, enum.Enum):
    CORE_A = "core_a"
    CORE_B = "core_b"
    MEMORY = "memory"
    CROSSBAR = "crossbar"


@dataclass(frozen=True)
class ComponentSpec:
    """One functional unit: a rectangular block with a power budget."""

    id: int
    kind: ComponentKind
    length_mm: float
    width_mm: float
    power_w: float

    @property
    def area_mm2(self) -> float:
        return self.length_mm * self.width_mm


@dataclass(frozen=True)
class ChipSpec:
    """The bounding volume: a stack of identical rectangular layers."""

    length_mm: float
    width_mm: float
    layers: int
    layer_thickness_mm: float

    @property
    def height_mm(self) -> float:
        return self.layers * self.layer_thickness_mm


@dataclass(frozen=True)
class Netlist:
    """Weighted connectivity between components, as unordered id pairs."""

    edges: tuple[tuple[int, int, float], ...]

    def adjacency(self) -> dict[int, list[tuple[int, float]]]:
        """Neighbor lists keyed by component id, in edge order.

        The order is load-bearing: wirelength deltas are accumulated in
        this order by both the reference decoder and the compiled kernel,
        keeping their floating-point results bit-identical.
        """
        adj: dict[int, list[tuple[int, float]]] = {}
        for a, b, w in self.edges:
            adj.setdefault(a, []).append((b, w))
            adj.setdefault(b, []).append((a, w))
        return adj


@dataclass(frozen=True)
class EvolutionParams:
    population_size: int = 100
    generations: int = 250
    crossover_prob: float = 0.9
    mutation_prob: float = 0.1
    rotation_prob: float = 0.1
    seed: int = 1
    workers: int = 1


@dataclass(frozen=True)
class Scenario:
    chip: ChipSpec
    components: tuple[ComponentSpec, ...]
    netlist: Netlist
    params: EvolutionParams

    def component_map(self) -> dict[int, ComponentSpec]:
        return {c.id: c for c in self.components}


@dataclass(frozen=True)
class Chromosome:
    """Placement order (a permutation of component ids) plus rotation flags."""

    order: tuple[int, ...]
    rotated: tuple[bool, ...]

    def __len__(self) -> int:
        return len(self.order)


class ObjectiveVector(NamedTuple):
    j1: int
    j2: float
    j3: float


@dataclass
class Individual:
    """A chromosome plus evaluation and ranking state.

    objectives is set by evaluation; rank and crowding by non-dominated
    sorting. Both stay None until the corresponding phase has run.
    """

    chromosome: Chromosome
    objectives: Optional[ObjectiveVector] = None
    rank: Optional[int] = None
    crowding: Optional[float] = None


def make_rng(seed: int) -> np.random.Generator:
    """The project-wide RNG: PCG64 seeded from a single 64-bit integer."""
    return np.random.Generator(np.random.PCG64(seed))


def _fits_both_orientations(c: ComponentSpec, chip: ChipSpec) -> bool:
    return (
        c.length_mm <= chip.length_mm
        and c.width_mm <= chip.width_mm
        and c.width_mm <= chip.length_mm
        and c.length_mm <= chip.width_mm
    )


def validate_scenario(raw: Scenario) -> Scenario:
    """Check every model invariant and normalize the netlist.

    Returns an equal-valued scenario whose netlist pairs are in canonical
    (min_id, max_id) order. Idempotent: validating a validated scenario
    returns an identical value. Raises ScenarioError naming the offending
    record otherwise.
    """
    chip = raw.chip
    if chip.length_mm <= 0 or chip.width_mm <= 0:
        raise ScenarioError(f"non-positive chip dimensions: {chip.length_mm} x {chip.width_mm}")
    if chip.layers < 1:
        raise ScenarioError(f"chip must have at least one layer, got {chip.layers}")
    if chip.layer_thickness_mm <= 0:
        raise ScenarioError(f"non-positive layer thickness: {chip.layer_thickness_mm}")

    if not raw.components:
        raise ScenarioError("scenario has no components")
    seen: set[int] = set()
    for c in raw.components:
        if c.length_mm <= 0 or c.width_mm <= 0:
            raise ScenarioError(f"non-positive dimension in component {c}")
        if c.power_w < 0:
            raise ScenarioError(f"negative power in component {c}")
        if c.id in seen:
            raise ScenarioError(f"duplicate component id {c.id}")
        seen.add(c.id)
        # Rotation flags are free genes, so a block must fit in-bounds in
        # both orientations or decoding could not stay in-bounds.
        if not _fits_both_orientations(c, chip):
            raise ScenarioError(
                f"component {c.id} ({c.length_mm} x {c.width_mm} mm) does not fit the "
                f"{chip.length_mm} x {chip.width_mm} mm layer in both orientations"
            )

    total_area = sum(c.area_mm2 for c in raw.components)
    capacity = chip.layers * chip.length_mm * chip.width_mm
    if total_area > capacity:
        raise ScenarioError(
            f"area overflow: components need {total_area} mm^2 but the chip offers {capacity} mm^2"
        )

    normalized: list[tuple[int, int, float]] = []
    pairs: set[tuple[int, int]] = set()
    for a, b, w in raw.netlist.edges:
        if a == b:
            raise ScenarioError(f"self-loop netlist edge ({a}, {b})")
        if a not in seen or b not in seen:
            raise ScenarioError(f"dangling netlist id in edge ({a}, {b})")
        if w <= 0:
            raise ScenarioError(f"non-positive netlist weight in edge ({a}, {b}, {w})")
        key = (min(a, b), max(a, b))
        if key in pairs:
            raise ScenarioError(f"duplicate netlist pair {key}")
        pairs.add(key)
        normalized.append((key[0], key[1], float(w)))

    p = raw.params
    if p.population_size < 2 or p.population_size % 2 != 0:
        raise ScenarioError(f"population_size must be a positive even number, got {p.population_size}")
    if p.generations < 0:
        raise ScenarioError(f"negative generation count {p.generations}")
    for name in ("crossover_prob", "mutation_prob", "rotation_prob"):
        v = getattr(p, name)
        if not 0.0 <= v <= 1.0:
            raise ScenarioError(f"{name} must be in [0, 1], got {v}")
    if not 0 <= p.seed < 2**64:
        raise ScenarioError(f"seed must fit in 64 unsigned bits, got {p.seed}")
    if p.workers < 1:
        raise ScenarioError(f"workers must be >= 1, got {p.workers}")

    return replace(raw, netlist=Netlist(tuple(normalized)))


def random_chromosome(scenario: Scenario, rng: np.random.Generator) -> Chromosome:
    """Uniformly random placement order (Fisher-Yates) with 50/50 rotation flags."""
    ids = [c.id for c in scenario.components]
    n = len(ids)
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        ids[i], ids[j] = ids[j], ids[i]
    flags = tuple(bool(b) for b in rng.integers(0, 2, size=n))
    return Chromosome(order=tuple(ids), rotated=flags)
