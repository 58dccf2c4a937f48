"""Chromosome decoding: sequential corner placement into the 3D stack.

Blocks are placed one at a time in chromosome order. Candidate positions
are the layer origin plus the right and top corners of already-placed
blocks on that layer; among the in-bounds, overlap-free candidates the
one with the lowest normalized wirelength-plus-thermal delta wins. When
no overlap-free candidate exists the block is dropped onto the in-bounds
corner with the least total overlap area and each overlapped block counts
as one violation, so decoding never aborts.

This module is the readable reference; `kernel` compiles the same
procedure for the evaluation hot path, and the two are equality-tested.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .model import Chromosome, ComponentSpec, Scenario

COINCIDENT_EPS_MM = 1e-9


@dataclass(frozen=True)
class PlacedBlock:
    """A block pinned by its left-bottom-back corner, dims post-rotation."""

    id: int
    x_mm: float
    y_mm: float
    layer: int
    eff_length_mm: float
    eff_width_mm: float


@dataclass(frozen=True)
class Floorplan:
    blocks: tuple[PlacedBlock, ...]
    violations: int


def effective_dims(block: ComponentSpec, rotated: bool) -> tuple[float, float]:
    """90-degree in-plane rotation swaps length and width."""
    if rotated:
        return block.width_mm, block.length_mm
    return block.length_mm, block.width_mm


def _footprints_overlap(
    x1: float, y1: float, l1: float, w1: float, x2: float, y2: float, l2: float, w2: float
) -> bool:
    # Open intervals: blocks that merely touch do not overlap.
    return x1 < x2 + l2 and x2 < x1 + l1 and y1 < y2 + w2 and y2 < y1 + w1


def _corner_points(partial: Floorplan, layer: int) -> set[tuple[float, float]]:
    pts = {(0.0, 0.0)}
    for b in partial.blocks:
        if b.layer == layer:
            pts.add((b.x_mm + b.eff_length_mm, b.y_mm))
            pts.add((b.x_mm, b.y_mm + b.eff_width_mm))
    return pts


def candidate_positions(
    partial: Floorplan, block: ComponentSpec, rotated: bool, scenario: Scenario
) -> list[tuple[float, float, int]]:
    """In-bounds, overlap-free corner candidates, sorted by (layer, y, x)."""
    chip = scenario.chip
    eff_l, eff_w = effective_dims(block, rotated)
    out: list[tuple[float, float, int]] = []
    for layer in range(chip.layers):
        for x, y in sorted(_corner_points(partial, layer), key=lambda p: (p[1], p[0])):
            if x + eff_l > chip.length_mm or y + eff_w > chip.width_mm:
                continue
            ok = True
            for b in partial.blocks:
                if b.layer == layer and _footprints_overlap(
                    x, y, eff_l, eff_w, b.x_mm, b.y_mm, b.eff_length_mm, b.eff_width_mm
                ):
                    ok = False
                    break
            if ok:
                out.append((x, y, layer))
    return out


def _placement_deltas(
    candidate: tuple[float, float, int],
    block: ComponentSpec,
    rotated: bool,
    partial: Floorplan,
    scenario: Scenario,
    neighbors: list[tuple[int, float]],
    comp_map: dict[int, ComponentSpec],
) -> tuple[float, float]:
    """Wirelength and thermal-interaction increments of one candidate."""
    x, y, layer = candidate
    thick = scenario.chip.layer_thickness_mm
    z = layer * thick
    placed = {b.id: b for b in partial.blocks}

    d_wire = 0.0
    for nb_id, w in neighbors:
        nb = placed.get(nb_id)
        if nb is not None:
            d_wire += w * (abs(x - nb.x_mm) + abs(y - nb.y_mm) + abs(z - nb.layer * thick))

    eff_l, eff_w = effective_dims(block, rotated)
    dp = block.power_w / (eff_l * eff_w)
    cx = x + eff_l / 2.0
    cy = y + eff_w / 2.0
    cz = z + thick / 2.0
    d_thermal = 0.0
    for b in partial.blocks:
        dp_other = comp_map[b.id].power_w / (b.eff_length_mm * b.eff_width_mm)
        dx = cx - (b.x_mm + b.eff_length_mm / 2.0)
        dy = cy - (b.y_mm + b.eff_width_mm / 2.0)
        dz = cz - (b.layer * thick + thick / 2.0)
        d = math.sqrt(dx * dx + dy * dy + dz * dz)
        if d < COINCIDENT_EPS_MM:
            d = COINCIDENT_EPS_MM
        d_thermal += dp * dp_other / d
    return d_wire, d_thermal


def select_position(
    candidates: list[tuple[float, float, int]],
    block: ComponentSpec,
    partial: Floorplan,
    scenario: Scenario,
    rotated: bool = False,
) -> tuple[float, float, int]:
    """Pick the candidate minimizing normalized d_wire + d_thermal.

    Each delta is normalized by its maximum over the candidates (an
    all-zero column when that maximum is zero). Ties keep the earliest
    candidate in (layer, y, x) order.
    """
    if not candidates:
        raise ValueError("select_position needs at least one candidate")
    adjacency = scenario.netlist.adjacency()
    neighbors = adjacency.get(block.id, [])
    comp_map = scenario.component_map()
    wire = []
    thermal = []
    for cand in candidates:
        dw, dt = _placement_deltas(cand, block, rotated, partial, scenario, neighbors, comp_map)
        wire.append(dw)
        thermal.append(dt)
    max_w = max(wire)
    max_t = max(thermal)
    best = 0
    best_score = math.inf
    for i in range(len(candidates)):
        score = (wire[i] / max_w if max_w > 0.0 else 0.0) + (
            thermal[i] / max_t if max_t > 0.0 else 0.0
        )
        if score < best_score:
            best_score = score
            best = i
    return candidates[best]


def _fallback_position(
    partial: Floorplan, block: ComponentSpec, rotated: bool, scenario: Scenario
) -> tuple[tuple[float, float, int], int]:
    """Least-overlap corner when every candidate collides.

    Scans the same corner set with the overlap filter dropped, minimizes
    total overlap area, and reports how many placed blocks the chosen
    position overlaps (one violation each).
    """
    chip = scenario.chip
    eff_l, eff_w = effective_dims(block, rotated)
    best_pos: tuple[float, float, int] | None = None
    best_area = math.inf
    best_count = 0
    for layer in range(chip.layers):
        for x, y in sorted(_corner_points(partial, layer), key=lambda p: (p[1], p[0])):
            if x + eff_l > chip.length_mm or y + eff_w > chip.width_mm:
                continue
            area = 0.0
            count = 0
            for b in partial.blocks:
                if b.layer == layer and _footprints_overlap(
                    x, y, eff_l, eff_w, b.x_mm, b.y_mm, b.eff_length_mm, b.eff_width_mm
                ):
                    ox = min(x + eff_l, b.x_mm + b.eff_length_mm) - max(x, b.x_mm)
                    oy = min(y + eff_w, b.y_mm + b.eff_width_mm) - max(y, b.y_mm)
                    area += ox * oy
                    count += 1
            if area < best_area:
                best_area = area
                best_pos = (x, y, layer)
                best_count = count
    assert best_pos is not None  # (0, 0) is always in bounds on a validated scenario
    return best_pos, best_count


def decode(chromosome: Chromosome, scenario: Scenario) -> Floorplan:
    """Place every gene in order; a pure function of its inputs."""
    by_id = scenario.component_map()
    blocks: list[PlacedBlock] = []
    violations = 0
    partial = Floorplan(blocks=(), violations=0)
    for gene_id, rot in zip(chromosome.order, chromosome.rotated):
        comp = by_id[gene_id]
        cands = candidate_positions(partial, comp, rot, scenario)
        if cands:
            x, y, layer = select_position(cands, comp, partial, scenario, rotated=rot)
        else:
            (x, y, layer), overlapped = _fallback_position(partial, comp, rot, scenario)
            violations += overlapped
        eff_l, eff_w = effective_dims(comp, rot)
        blocks.append(
            PlacedBlock(id=gene_id, x_mm=x, y_mm=y, layer=layer, eff_length_mm=eff_l, eff_width_mm=eff_w)
        )
        partial = Floorplan(blocks=tuple(blocks), violations=violations)
    return partial
