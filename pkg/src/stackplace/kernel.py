"""Compiled evaluation hot path.

`_decode_eval` is a numba translation of decoder.decode plus the two
float objectives, kept statement-for-statement parallel so both paths
produce bit-identical placements and objective values (tests enforce
this). It runs with the GIL released, which is what lets a thread pool
of workers evaluate disjoint population slices truly concurrently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit

from .decoder import Floorplan, PlacedBlock
from .model import Chromosome, ObjectiveVector, Scenario


@dataclass(frozen=True, eq=False)
class ScenarioArrays:
    """Scenario flattened to contiguous arrays, indexed by component position."""

    ids: np.ndarray
    id_to_idx: dict[int, int]
    comp_len: np.ndarray
    comp_wid: np.ndarray
    comp_pow: np.ndarray
    chip_l: float
    chip_w: float
    n_layers: int
    thick: float
    edge_a: np.ndarray
    edge_b: np.ndarray
    edge_w: np.ndarray
    adj_indptr: np.ndarray
    adj_idx: np.ndarray
    adj_w: np.ndarray


@lru_cache(maxsize=32)
def pack_scenario(scenario: Scenario) -> ScenarioArrays:
    ids = np.array([c.id for c in scenario.components], dtype=np.int64)
    id_to_idx = {int(cid): i for i, cid in enumerate(ids)}
    comp_len = np.array([c.length_mm for c in scenario.components], dtype=np.float64)
    comp_wid = np.array([c.width_mm for c in scenario.components], dtype=np.float64)
    comp_pow = np.array([c.power_w for c in scenario.components], dtype=np.float64)

    edges = scenario.netlist.edges
    edge_a = np.array([id_to_idx[a] for a, _, _ in edges], dtype=np.int64)
    edge_b = np.array([id_to_idx[b] for _, b, _ in edges], dtype=np.int64)
    edge_w = np.array([w for _, _, w in edges], dtype=np.float64)

    # Neighbor order must match Netlist.adjacency() so wirelength deltas
    # accumulate in the same order as the reference decoder.
    adj = scenario.netlist.adjacency()
    indptr = [0]
    idx: list[int] = []
    ws: list[float] = []
    for c in scenario.components:
        for nb_id, w in adj.get(c.id, []):
            idx.append(id_to_idx[nb_id])
            ws.append(w)
        indptr.append(len(idx))

    return ScenarioArrays(
        ids=ids,
        id_to_idx=id_to_idx,
        comp_len=comp_len,
        comp_wid=comp_wid,
        comp_pow=comp_pow,
        chip_l=scenario.chip.length_mm,
        chip_w=scenario.chip.width_mm,
        n_layers=scenario.chip.layers,
        thick=scenario.chip.layer_thickness_mm,
        edge_a=edge_a,
        edge_b=edge_b,
        edge_w=edge_w,
        adj_indptr=np.array(indptr, dtype=np.int64),
        adj_idx=np.array(idx, dtype=np.int64),
        adj_w=np.array(ws, dtype=np.float64),
    )


def chromosome_arrays(chromosome: Chromosome, arrays: ScenarioArrays) -> tuple[np.ndarray, np.ndarray]:
    order = np.array([arrays.id_to_idx[g] for g in chromosome.order], dtype=np.int64)
    rotated = np.array(chromosome.rotated, dtype=np.bool_)
    return order, rotated


@njit(cache=True, nogil=True)
def _decode_eval(
    order,
    rotated,
    comp_len,
    comp_wid,
    comp_pow,
    chip_l,
    chip_w,
    n_layers,
    thick,
    edge_a,
    edge_b,
    edge_w,
    adj_indptr,
    adj_idx,
    adj_w,
):
    n = order.size
    px = np.zeros(n, np.float64)
    py = np.zeros(n, np.float64)
    pl = np.full(n, -1, np.int64)
    pel = np.zeros(n, np.float64)
    pew = np.zeros(n, np.float64)
    placed = np.zeros(n, np.bool_)
    violations = 0

    max_pts = 2 * n + 1
    lx = np.empty(max_pts, np.float64)
    ly = np.empty(max_pts, np.float64)
    max_cand = n_layers * max_pts
    cand_x = np.empty(max_cand, np.float64)
    cand_y = np.empty(max_cand, np.float64)
    cand_l = np.empty(max_cand, np.int64)
    cand_ok = np.empty(max_cand, np.bool_)
    d_wire = np.empty(max_cand, np.float64)
    d_therm = np.empty(max_cand, np.float64)

    for k in range(n):
        c = order[k]
        if rotated[k]:
            el = comp_wid[c]
            ew = comp_len[c]
        else:
            el = comp_len[c]
            ew = comp_wid[c]

        # Corner candidates per layer: origin plus right/top corners of
        # placed blocks, deduped and walked in (layer, y, x) order.
        m = 0
        n_valid = 0
        for layer in range(n_layers):
            t = 0
            lx[t] = 0.0
            ly[t] = 0.0
            t += 1
            for k2 in range(k):
                c2 = order[k2]
                if pl[c2] == layer:
                    lx[t] = px[c2] + pel[c2]
                    ly[t] = py[c2]
                    t += 1
                    lx[t] = px[c2]
                    ly[t] = py[c2] + pew[c2]
                    t += 1
            o1 = np.argsort(lx[:t], kind="mergesort")
            sy = ly[:t][o1]
            o2 = np.argsort(sy, kind="mergesort")
            prev_x = 0.0
            prev_y = 0.0
            have_prev = False
            for ii in range(t):
                src = o1[o2[ii]]
                x = lx[src]
                y = ly[src]
                if have_prev and x == prev_x and y == prev_y:
                    continue
                prev_x = x
                prev_y = y
                have_prev = True
                if x + el > chip_l or y + ew > chip_w:
                    continue
                ok = True
                for k2 in range(k):
                    c2 = order[k2]
                    if (
                        pl[c2] == layer
                        and x < px[c2] + pel[c2]
                        and px[c2] < x + el
                        and y < py[c2] + pew[c2]
                        and py[c2] < y + ew
                    ):
                        ok = False
                        break
                cand_x[m] = x
                cand_y[m] = y
                cand_l[m] = layer
                cand_ok[m] = ok
                if ok:
                    n_valid += 1
                m += 1

        best_x = 0.0
        best_y = 0.0
        best_layer = 0
        if n_valid > 0:
            dp_new = comp_pow[c] / (el * ew)
            max_w = 0.0
            max_t = 0.0
            for i in range(m):
                if not cand_ok[i]:
                    continue
                x = cand_x[i]
                y = cand_y[i]
                z = cand_l[i] * thick
                dw = 0.0
                for r in range(adj_indptr[c], adj_indptr[c + 1]):
                    nb = adj_idx[r]
                    if placed[nb]:
                        dw += adj_w[r] * (abs(x - px[nb]) + abs(y - py[nb]) + abs(z - pl[nb] * thick))
                ccx = x + el / 2.0
                ccy = y + ew / 2.0
                ccz = z + thick / 2.0
                dt = 0.0
                for k2 in range(k):
                    c2 = order[k2]
                    dp2 = comp_pow[c2] / (pel[c2] * pew[c2])
                    dx = ccx - (px[c2] + pel[c2] / 2.0)
                    dy = ccy - (py[c2] + pew[c2] / 2.0)
                    dz = ccz - (pl[c2] * thick + thick / 2.0)
                    d = math.sqrt(dx * dx + dy * dy + dz * dz)
                    if d < 1e-9:
                        d = 1e-9
                    dt += dp_new * dp2 / d
                d_wire[i] = dw
                d_therm[i] = dt
                if dw > max_w:
                    max_w = dw
                if dt > max_t:
                    max_t = dt
            best_score = np.inf
            for i in range(m):
                if not cand_ok[i]:
                    continue
                s = (d_wire[i] / max_w if max_w > 0.0 else 0.0) + (
                    d_therm[i] / max_t if max_t > 0.0 else 0.0
                )
                if s < best_score:
                    best_score = s
                    best_x = cand_x[i]
                    best_y = cand_y[i]
                    best_layer = cand_l[i]
        else:
            # Least-overlap fallback; one violation per overlapped block.
            best_area = np.inf
            best_count = 0
            for i in range(m):
                x = cand_x[i]
                y = cand_y[i]
                layer = cand_l[i]
                area = 0.0
                cnt = 0
                for k2 in range(k):
                    c2 = order[k2]
                    if (
                        pl[c2] == layer
                        and x < px[c2] + pel[c2]
                        and px[c2] < x + el
                        and y < py[c2] + pew[c2]
                        and py[c2] < y + ew
                    ):
                        ox = min(x + el, px[c2] + pel[c2]) - max(x, px[c2])
                        oy = min(y + ew, py[c2] + pew[c2]) - max(y, py[c2])
                        area += ox * oy
                        cnt += 1
                if area < best_area:
                    best_area = area
                    best_count = cnt
                    best_x = x
                    best_y = y
                    best_layer = layer
            violations += best_count

        px[c] = best_x
        py[c] = best_y
        pl[c] = best_layer
        pel[c] = el
        pew[c] = ew
        placed[c] = True

    j2 = 0.0
    for e in range(edge_a.size):
        a = edge_a[e]
        b = edge_b[e]
        j2 += edge_w[e] * (
            abs(px[a] - px[b]) + abs(py[a] - py[b]) + abs(pl[a] * thick - pl[b] * thick)
        )

    j3 = 0.0
    for i in range(n):
        c1 = order[i]
        dp1 = comp_pow[c1] / (pel[c1] * pew[c1])
        cx1 = px[c1] + pel[c1] / 2.0
        cy1 = py[c1] + pew[c1] / 2.0
        cz1 = pl[c1] * thick + thick / 2.0
        for j in range(i + 1, n):
            c2 = order[j]
            dp2 = comp_pow[c2] / (pel[c2] * pew[c2])
            dx = cx1 - (px[c2] + pel[c2] / 2.0)
            dy = cy1 - (py[c2] + pew[c2] / 2.0)
            dz = cz1 - (pl[c2] * thick + thick / 2.0)
            d = math.sqrt(dx * dx + dy * dy + dz * dz)
            if d < 1e-9:
                d = 1e-9
            j3 += dp1 * dp2 / d

    return px, py, pl, pel, pew, violations, j2, j3


def _run_kernel(chromosome: Chromosome, arrays: ScenarioArrays):
    order, rotated = chromosome_arrays(chromosome, arrays)
    return _decode_eval(
        order,
        rotated,
        arrays.comp_len,
        arrays.comp_wid,
        arrays.comp_pow,
        arrays.chip_l,
        arrays.chip_w,
        arrays.n_layers,
        arrays.thick,
        arrays.edge_a,
        arrays.edge_b,
        arrays.edge_w,
        arrays.adj_indptr,
        arrays.adj_idx,
        arrays.adj_w,
    )


def evaluate_arrays(chromosome: Chromosome, arrays: ScenarioArrays) -> ObjectiveVector:
    _, _, _, _, _, violations, j2, j3 = _run_kernel(chromosome, arrays)
    return ObjectiveVector(j1=int(violations), j2=float(j2), j3=float(j3))


def decode_fast(chromosome: Chromosome, scenario: Scenario) -> Floorplan:
    """Kernel-backed decode producing the same Floorplan as decoder.decode."""
    arrays = pack_scenario(scenario)
    px, py, pl, pel, pew, violations, _, _ = _run_kernel(chromosome, arrays)
    blocks = []
    for gene_id in chromosome.order:
        c = arrays.id_to_idx[gene_id]
        blocks.append(
            PlacedBlock(
                id=gene_id,
                x_mm=float(px[c]),
                y_mm=float(py[c]),
                layer=int(pl[c]),
                eff_length_mm=float(pel[c]),
                eff_width_mm=float(pew[c]),
            )
        )
    return Floorplan(blocks=tuple(blocks), violations=int(violations))


def warm_up() -> None:
    """Force JIT compilation so timing-sensitive callers pay it up front."""
    from .model import ChipSpec, ComponentKind, ComponentSpec, EvolutionParams, Netlist, validate_scenario

    scenario = validate_scenario(
        Scenario(
            chip=ChipSpec(length_mm=2.0, width_mm=2.0, layers=2, layer_thickness_mm=0.5),
            components=(
                ComponentSpec(id=0, kind=ComponentKind.CORE_A, length_mm=1.0, width_mm=1.0, power_w=1.0),
                ComponentSpec(id=1, kind=ComponentKind.MEMORY, length_mm=1.0, width_mm=1.0, power_w=0.5),
            ),
            netlist=Netlist(((0, 1, 1.0),)),
            params=EvolutionParams(population_size=2, generations=0),
        )
    )
    evaluate_arrays(Chromosome(order=(0, 1), rotated=(False, True)), pack_scenario(scenario))
