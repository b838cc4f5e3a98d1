"""Grid partitionings of a lat/lon bounding box.

Cells are numbered row-major (``cell = row * cols + col``).  Two distinct
cells are externally connected when they share an edge or a corner, i.e. the
8-neighbourhood; a cell is equal only to itself and disconnected from
everything that is not an 8-neighbour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

RegionId = int


class OutOfBoxError(ValueError):
    def __init__(self, index: int, lat: float, lon: float):
        super().__init__(f"point {index} at ({lat}, {lon}) is outside the grid bounding box")
        self.index = index
        self.lat = lat
        self.lon = lon


class GapError(ValueError):
    def __init__(self, index: int):
        super().__init__(f"regions at positions ({index}, {index + 1}) are not externally connected")
        self.index = index


@dataclass(frozen=True)
class GridSpec:
    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float
    rows: int
    cols: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lat_min) and math.isfinite(self.lat_max)
                and math.isfinite(self.lon_min) and math.isfinite(self.lon_max)):
            raise ValueError("grid bounds must be finite")
        if self.lat_min >= self.lat_max or self.lon_min >= self.lon_max:
            raise ValueError("grid bounding box must have positive extent")
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid must have at least one row and one column")

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols

    def cell_id(self, row: int, col: int) -> RegionId:
        return row * self.cols + col

    def row_col(self, cell: RegionId) -> tuple[int, int]:
        return divmod(cell, self.cols)

    def contains(self, lat: float, lon: float) -> bool:
        return (self.lat_min <= lat <= self.lat_max) and (self.lon_min <= lon <= self.lon_max)

    def cell_at(self, lat: float, lon: float) -> RegionId:
        """Cell of an in-box point; points exactly on the max edge land in the last row/col."""
        row = int((lat - self.lat_min) / (self.lat_max - self.lat_min) * self.rows)
        col = int((lon - self.lon_min) / (self.lon_max - self.lon_min) * self.cols)
        row = min(max(row, 0), self.rows - 1)
        col = min(max(col, 0), self.cols - 1)
        return self.cell_id(row, col)

    @cached_property
    def _neighbors(self) -> tuple[tuple[RegionId, ...], ...]:
        out = []
        for r in range(self.rows):
            for c in range(self.cols):
                cell_neighbors = []
                for dr in (-1, 0, 1):
                    for dc in (-1, 0, 1):
                        if dr == 0 and dc == 0:
                            continue
                        rr, cc = r + dr, c + dc
                        if 0 <= rr < self.rows and 0 <= cc < self.cols:
                            cell_neighbors.append(self.cell_id(rr, cc))
                cell_neighbors.sort()
                out.append(tuple(cell_neighbors))
        return tuple(out)

    def neighbors(self, cell: RegionId) -> tuple[RegionId, ...]:
        return self._neighbors[cell]

    def externally_connected(self, a: RegionId, b: RegionId) -> bool:
        if a == b:
            return False
        ra, ca = self.row_col(a)
        rb, cb = self.row_col(b)
        return abs(ra - rb) <= 1 and abs(ca - cb) <= 1


@dataclass(frozen=True)
class RawPoint:
    object_id: str
    timestamp: float
    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValueError(f"point for {self.object_id!r} has non-finite coordinates")


def regionize(points: Sequence[RawPoint], grid: GridSpec, clamp: bool = False) -> list[RegionId]:
    """Map a timestamp-sorted point sequence of one object to a region sequence.

    Consecutive duplicate cells are collapsed.  Points outside the bounding
    box raise :class:`OutOfBoxError` unless ``clamp`` pulls them to the
    nearest cell.
    """
    if not points:
        raise ValueError("regionize needs at least one point")
    cells: list[RegionId] = []
    for i, p in enumerate(points):
        if not clamp and not grid.contains(p.lat, p.lon):
            raise OutOfBoxError(i, p.lat, p.lon)
        cell = grid.cell_at(p.lat, p.lon)
        if not cells or cells[-1] != cell:
            cells.append(cell)
    return cells


def line_cells(start: tuple[int, int], end: tuple[int, int]) -> list[tuple[int, int]]:
    """8-connected raster line between two cells, both endpoints included.

    Deterministic Bresenham walk; consecutive cells differ by at most one in
    each axis, so the result is an externally-connected chain.
    """
    r0, c0 = start
    r1, c1 = end
    cells = [(r0, c0)]
    dr = abs(r1 - r0)
    dc = abs(c1 - c0)
    sr = 1 if r1 > r0 else -1
    sc = 1 if c1 > c0 else -1
    err = dc - dr
    r, c = r0, c0
    while (r, c) != (r1, c1):
        e2 = 2 * err
        if e2 > -dr:
            err -= dr
            c += sc
        if e2 < dc:
            err += dc
            r += sr
        cells.append((r, c))
    return cells


def bridge_gaps(seq: Sequence[RegionId], grid: GridSpec, policy: str = "reject") -> list[RegionId]:
    """Repair or reject jumps between non-adjacent consecutive regions.

    ``reject`` raises :class:`GapError` at the first offending index pair;
    ``rasterize`` splices in the raster line between the two cells.  The
    result always satisfies the externally-connected chain invariant.
    """
    if policy not in ("reject", "rasterize"):
        raise ValueError(f"unknown gap policy {policy!r}")
    if not seq:
        raise ValueError("empty region sequence")
    for cell in seq:
        if not 0 <= cell < grid.n_cells:
            raise ValueError(f"region {cell} outside grid with {grid.n_cells} cells")

    out: list[RegionId] = [seq[0]]
    for i in range(len(seq) - 1):
        a, b = seq[i], seq[i + 1]
        if grid.externally_connected(a, b):
            out.append(b)
            continue
        if policy == "reject":
            raise GapError(i)
        if a == b:
            continue
        for rc in line_cells(grid.row_col(a), grid.row_col(b))[1:]:
            cell = grid.cell_id(*rc)
            if out[-1] != cell:
                out.append(cell)
    return out
