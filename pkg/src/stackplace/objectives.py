"""The three fitness objectives plus power-density grid export.

j1 counts overlap violations accumulated by the decoder, j2 is weighted
Manhattan wirelength over corner coordinates, j3 is the pairwise
power-density interaction proxy over block centers. The loops here
mirror the compiled kernel's accumulation order so both produce
bit-identical floats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernel
from .decoder import COINCIDENT_EPS_MM, Floorplan
from .model import Chromosome, ComponentSpec, Netlist, ObjectiveVector, Scenario


@dataclass(frozen=True, eq=False)
class PowerGrid:
    """Per-layer W-per-cell matrices; cell (ix, iy) covers the square
    [ix*cell, (ix+1)*cell) x [iy*cell, (iy+1)*cell)."""

    cell_mm: float
    values: np.ndarray  # shape (layers, ny, nx)

    def total_power_w(self) -> float:
        return float(self.values.sum())


def violations_j1(floorplan: Floorplan) -> int:
    return floorplan.violations


def wirelength_j2(floorplan: Floorplan, netlist: Netlist, layer_thickness_mm: float) -> float:
    """Sum of weight * Manhattan distance between connected corners."""
    by_id = {b.id: b for b in floorplan.blocks}
    thick = layer_thickness_mm
    total = 0.0
    for a, b, w in netlist.edges:
        if a not in by_id or b not in by_id:
            raise ValueError(f"netlist edge ({a}, {b}) references an unplaced block")
        ba = by_id[a]
        bb = by_id[b]
        total += w * (
            abs(ba.x_mm - bb.x_mm)
            + abs(ba.y_mm - bb.y_mm)
            + abs(ba.layer * thick - bb.layer * thick)
        )
    return total


def thermal_j3(
    floorplan: Floorplan, components: Sequence[ComponentSpec], layer_thickness_mm: float
) -> float:
    """Pairwise dp_i * dp_j / distance over block centers.

    dp is power over footprint area; centers closer than the coincidence
    guard (reachable only through violating floorplans) are clamped so
    every floorplan stays rankable.
    """
    power = {c.id: c.power_w for c in components}
    thick = layer_thickness_mm
    blocks = floorplan.blocks
    total = 0.0
    for i, bi in enumerate(blocks):
        area_i = bi.eff_length_mm * bi.eff_width_mm
        if area_i <= 0.0:
            raise ValueError(f"zero-area block {bi.id}")
        dp_i = power[bi.id] / area_i
        cx_i = bi.x_mm + bi.eff_length_mm / 2.0
        cy_i = bi.y_mm + bi.eff_width_mm / 2.0
        cz_i = bi.layer * thick + thick / 2.0
        for bj in blocks[i + 1 :]:
            dp_j = power[bj.id] / (bj.eff_length_mm * bj.eff_width_mm)
            dx = cx_i - (bj.x_mm + bj.eff_length_mm / 2.0)
            dy = cy_i - (bj.y_mm + bj.eff_width_mm / 2.0)
            dz = cz_i - (bj.layer * thick + thick / 2.0)
            d = math.sqrt(dx * dx + dy * dy + dz * dz)
            if d < COINCIDENT_EPS_MM:
                d = COINCIDENT_EPS_MM
            total += dp_i * dp_j / d
    return total


def evaluate(chromosome: Chromosome, scenario: Scenario) -> ObjectiveVector:
    """Decode then score; a pure function of its inputs.

    This is the unit of worker work, backed by the compiled kernel.
    """
    return kernel.evaluate_arrays(chromosome, kernel.pack_scenario(scenario))


def _grid_cells(extent_mm: float, cell_mm: float, axis: str) -> int:
    count = extent_mm / cell_mm
    n = round(count)
    if n < 1 or abs(n * cell_mm - extent_mm) > 1e-9 * max(1.0, extent_mm):
        raise ValueError(f"cell size {cell_mm} mm does not divide the chip {axis} extent {extent_mm} mm")
    return n


def power_density_map(floorplan: Floorplan, scenario: Scenario, cell_mm: float) -> PowerGrid:
    """Distribute each block's power over the cells its footprint covers,
    proportional to overlap area; total grid power equals total block power."""
    chip = scenario.chip
    nx = _grid_cells(chip.length_mm, cell_mm, "x")
    ny = _grid_cells(chip.width_mm, cell_mm, "y")
    values = np.zeros((chip.layers, ny, nx), dtype=np.float64)
    power = {c.id: c.power_w for c in scenario.components}

    for b in floorplan.blocks:
        x0, x1 = b.x_mm, b.x_mm + b.eff_length_mm
        y0, y1 = b.y_mm, b.y_mm + b.eff_width_mm
        ix_lo = max(0, int(math.floor(x0 / cell_mm)))
        ix_hi = min(nx, int(math.ceil(x1 / cell_mm)))
        iy_lo = max(0, int(math.floor(y0 / cell_mm)))
        iy_hi = min(ny, int(math.ceil(y1 / cell_mm)))
        ix = np.arange(ix_lo, ix_hi)
        iy = np.arange(iy_lo, iy_hi)
        ox = np.minimum(x1, (ix + 1) * cell_mm) - np.maximum(x0, ix * cell_mm)
        oy = np.minimum(y1, (iy + 1) * cell_mm) - np.maximum(y0, iy * cell_mm)
        ox = np.clip(ox, 0.0, None)
        oy = np.clip(oy, 0.0, None)
        share = np.outer(oy, ox) / (b.eff_length_mm * b.eff_width_mm)
        values[b.layer, iy_lo:iy_hi, ix_lo:ix_hi] += power[b.id] * share

    return PowerGrid(cell_mm=cell_mm, values=values)
