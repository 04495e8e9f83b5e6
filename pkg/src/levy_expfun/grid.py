"""Measures on uniform grids."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch


@dataclass
class GridMeasure:
    """Cell masses on ``[lo, hi)`` split into ``n_cells`` equal cells, plus point atoms.

    Cell ``k`` is ``[lo + k*width, lo + (k+1)*width)``.  Atoms are kept apart
    from the cells as a list of ``(location, mass)`` pairs.
    """

    lo: float
    hi: float
    n_cells: int
    masses: np.ndarray
    atoms: list = field(default_factory=list)

    def __post_init__(self):
        self.masses = np.asarray(self.masses, dtype=float)
        if self.masses.shape != (self.n_cells,):
            raise ValueError("masses must have one entry per cell")
        if not self.hi > self.lo:
            raise ValueError("need hi > lo")

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.n_cells

    @property
    def edges(self) -> np.ndarray:
        return self.lo + self.width * np.arange(self.n_cells + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.lo + self.width * (np.arange(self.n_cells) + 0.5)

    @property
    def density(self) -> np.ndarray:
        return self.masses / self.width

    def atom_mass(self) -> float:
        return float(sum(m for _, m in self.atoms))

    def total(self) -> float:
        return float(self.masses.sum()) + self.atom_mass()

    def mean(self) -> float:
        s = float(self.masses @ self.centers)
        s += sum(x * m for x, m in self.atoms)
        return s / self.total()

    def same_grid(self, other: "GridMeasure") -> bool:
        return (
            self.n_cells == other.n_cells
            and np.isclose(self.lo, other.lo)
            and np.isclose(self.hi, other.hi)
        )

    def to_cells(self) -> np.ndarray:
        """Cell masses with every atom inside the grid folded into its cell."""
        out = self.masses.copy()
        for x, m in self.atoms:
            k = int(np.floor((x - self.lo) / self.width))
            if 0 <= k < self.n_cells:
                out[k] += m
        return out

    def tv_distance(self, other: "GridMeasure") -> float:
        """Total variation distance, taken as half the l1 distance of cell masses."""
        if not self.same_grid(other):
            raise GridMismatch("grids differ")
        return 0.5 * float(np.abs(self.to_cells() - other.to_cells()).sum())

    def scaled(self, c: float) -> "GridMeasure":
        return GridMeasure(self.lo, self.hi, self.n_cells, c * self.masses,
                           [(x, c * m) for x, m in self.atoms])


def parse_grid(grid) -> tuple[float, float, int]:
    """Accept ``(lo, hi, n)`` or a string ``"lo,hi,n"``."""
    if isinstance(grid, str):
        lo, hi, n = grid.split(",")
        return float(lo), float(hi), int(n)
    lo, hi, n = grid
    return float(lo), float(hi), int(n)
