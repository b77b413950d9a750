"""Centerline-tube collision table with a uniform spatial grid.

The lumen is modeled as the union of capsules around every branch polyline
segment, with linearly interpolated radii. The grid maps a query point to
candidate segments; a query whose best candidate is farther than ``slack``
falls back to an exhaustive scan, so the nearest segment is always exact.
Both rod-solver backends consume the same table, in the same candidate
order, which keeps their results bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..vessel.types import VesselTree

GRID_CELL = 12.0
GRID_SLACK = 15.0


@dataclass
class TubeTable:
    seg_a: np.ndarray  # (m, 3) segment start
    seg_d: np.ndarray  # (m, 3) segment delta (end - start)
    seg_len2: np.ndarray  # (m,)
    seg_r0: np.ndarray  # (m,) radius at start
    seg_dr: np.ndarray  # (m,) radius delta
    origin: np.ndarray  # (3,) grid origin
    dims: np.ndarray  # (3,) int cell counts
    cell: float
    cell_start: np.ndarray  # (ncells + 1,) CSR offsets
    cell_items: np.ndarray  # (k,) segment indices
    slack: float

    @property
    def n_segments(self) -> int:
        return len(self.seg_a)

    def max_radius(self) -> float:
        return float(np.max(self.seg_r0 + np.maximum(self.seg_dr, 0.0)))


def build_tube_table(tree: VesselTree, cell: float = GRID_CELL, slack: float = GRID_SLACK) -> TubeTable:
    seg_a, seg_b, r0, r1 = [], [], [], []
    for branch in tree.branches:
        pts, radii = branch.points, branch.radii
        seg_a.append(pts[:-1])
        seg_b.append(pts[1:])
        r0.append(radii[:-1])
        r1.append(radii[1:])
    a = np.vstack(seg_a)
    b = np.vstack(seg_b)
    r0 = np.concatenate(r0)
    r1 = np.concatenate(r1)
    d = b - a
    len2 = np.einsum("ij,ij->i", d, d)

    # Correctness of the fast path only needs reach >= slack (a segment
    # absent from a cell is then farther than slack, so any candidate within
    # slack is the true nearest). Adding the local radius keeps in-lumen
    # queries on the fast path; cap it so huge radii cannot blow up the grid.
    reach = np.minimum(np.maximum(r0, r1), 2.0 * slack) + slack
    lo = np.minimum(a, b) - reach[:, None]
    hi = np.maximum(a, b) + reach[:, None]
    origin = lo.min(axis=0)
    dims = np.maximum(1, np.ceil((hi.max(axis=0) - origin) / cell).astype(np.int64))
    ncells = int(dims.prod())

    lo_cell = np.clip(np.floor((lo - origin) / cell).astype(np.int64), 0, dims - 1)
    hi_cell = np.clip(np.floor((hi - origin) / cell).astype(np.int64), 0, dims - 1)

    counts = np.zeros(ncells, dtype=np.int64)
    entries: list[tuple[int, int]] = []
    for s in range(len(a)):
        for ix in range(lo_cell[s, 0], hi_cell[s, 0] + 1):
            for iy in range(lo_cell[s, 1], hi_cell[s, 1] + 1):
                for iz in range(lo_cell[s, 2], hi_cell[s, 2] + 1):
                    c = (ix * dims[1] + iy) * dims[2] + iz
                    entries.append((int(c), s))
                    counts[c] += 1
    cell_start = np.zeros(ncells + 1, dtype=np.int64)
    np.cumsum(counts, out=cell_start[1:])
    fill = cell_start[:-1].copy()
    cell_items = np.empty(len(entries), dtype=np.int64)
    for c, s in entries:  # entries are in ascending segment order per cell
        cell_items[fill[c]] = s
        fill[c] += 1

    return TubeTable(
        seg_a=np.ascontiguousarray(a),
        seg_d=np.ascontiguousarray(d),
        seg_len2=np.ascontiguousarray(len2),
        seg_r0=np.ascontiguousarray(r0),
        seg_dr=np.ascontiguousarray(r1 - r0),
        origin=origin,
        dims=dims,
        cell=float(cell),
        cell_start=cell_start,
        cell_items=cell_items,
        slack=float(slack),
    )
