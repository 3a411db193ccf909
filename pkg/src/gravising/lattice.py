"""Lattice geometry and slowly varying magnetic fields.

The simulation box is ``{0, ..., N-1}^d``.  A coarse grid of cells of side
``a`` (``a`` divides ``N``) partitions the box; each cell is labelled by its
anchor corner ``x`` in ``{0, a, 2a, ..., N-a}^d``.  Mesoscopic quantities
(profiles, cell field values) live on this coarse grid, microscopic ones
(spins, per-site fields) on the full box.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class LatticeGeometry:
    """Box of side ``n_side``, dimension ``d``, cell side ``a``."""

    n_side: int
    d: int
    a: int

    def __post_init__(self):
        if self.n_side < 1 or self.d < 1 or self.a < 1:
            raise ValueError("n_side, d and a must be positive")
        if self.n_side % self.a != 0:
            raise ValueError(f"cell side a={self.a} must divide n_side={self.n_side}")

    @property
    def cells_per_axis(self) -> int:
        return self.n_side // self.a

    @property
    def n_cells(self) -> int:
        return self.cells_per_axis ** self.d

    @property
    def n_sites(self) -> int:
        return self.n_side ** self.d

    @property
    def cell_shape(self) -> tuple[int, ...]:
        return (self.cells_per_axis,) * self.d

    @property
    def site_shape(self) -> tuple[int, ...]:
        return (self.n_side,) * self.d

    def cell_anchors(self):
        """Iterate anchor coordinates of all cells (lexicographic)."""
        axis = range(0, self.n_side, self.a)
        return itertools.product(*([axis] * self.d))


class FieldSpec:
    """Base class for slowly varying magnetic fields on a geometry.

    Concrete fields provide per-site values (used by the Monte Carlo
    Hamiltonian), per-cell values (used by the mesoscopic variational
    problem) and the slow-variation witness ``b_n`` bounding the field
    variation over any window of sup-diameter below the cell side.
    """

    geometry: LatticeGeometry

    def site_values(self) -> np.ndarray:
        """Field evaluated at every site; shape ``(n_side,)*d``."""
        raise NotImplementedError

    def cell_values(self) -> np.ndarray:
        """Field value of every cell; shape ``(cells_per_axis,)*d``."""
        raise NotImplementedError

    def cell_levels(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct cell field values and their multiplicities."""
        values, counts = np.unique(self.cell_values(), return_counts=True)
        return values, counts

    @property
    def b_n(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class GravitationalField(FieldSpec):
    """Linear-in-height field ``h(i) = (g / n_side**exponent) * i_d``.

    ``exponent=1`` makes the field compete with the bulk interaction
    energy (height-dependent density profiles); ``exponent=2`` makes it a
    surface-order perturbation (droplet-shape regime).

    Cell values are evaluated at the cell's midheight ``(anchor + a/2)``
    rather than at its anchor corner.  The two conventions differ by less
    than ``b_n``, but the midpoint one makes the coarse field exactly
    symmetric under height reflection, so that e.g. the zero-magnetization
    interface sits exactly at midheight on the coarse grid as well.
    """

    geometry: LatticeGeometry
    g: float
    exponent: int = 1

    def __post_init__(self):
        if self.exponent not in (1, 2):
            raise ValueError("exponent must be 1 or 2")
        if not np.isfinite(self.g):
            raise ValueError("g must be finite")

    @property
    def _scale(self) -> float:
        return self.g / float(self.geometry.n_side) ** self.exponent

    def site_values(self) -> np.ndarray:
        geo = self.geometry
        heights = self._scale * np.arange(geo.n_side)
        out = np.broadcast_to(heights, geo.site_shape)  # varies along last axis
        return np.ascontiguousarray(out)

    def height_levels(self) -> np.ndarray:
        """Cell field value per height layer (midpoint convention)."""
        geo = self.geometry
        anchors = np.arange(geo.cells_per_axis) * geo.a
        return self._scale * (anchors + geo.a / 2.0)

    def cell_values(self) -> np.ndarray:
        geo = self.geometry
        out = np.broadcast_to(self.height_levels(), geo.cell_shape)
        return np.ascontiguousarray(out)

    def cell_levels(self) -> tuple[np.ndarray, np.ndarray]:
        geo = self.geometry
        levels = self.height_levels()
        counts = np.full(levels.size, geo.cells_per_axis ** (geo.d - 1), dtype=np.int64)
        if self.g == 0.0:  # all layers collapse onto a single value
            return np.array([0.0]), np.array([geo.n_cells], dtype=np.int64)
        return levels, counts

    @property
    def b_n(self) -> float:
        return abs(self.g) * self.geometry.a / float(self.geometry.n_side) ** self.exponent


@dataclass(frozen=True)
class ExplicitField(FieldSpec):
    """Field given cell by cell; constant inside each cell."""

    geometry: LatticeGeometry
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.geometry.cell_shape:
            raise ValueError(
                f"values shape {vals.shape} does not match cell grid {self.geometry.cell_shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", vals)

    def site_values(self) -> np.ndarray:
        out = self.values
        for axis in range(self.geometry.d):
            out = np.repeat(out, self.geometry.a, axis=axis)
        return out

    def cell_values(self) -> np.ndarray:
        return self.values

    @property
    def b_n(self) -> float:
        # Sites closer than the cell side can only lie in adjacent cells,
        # so the witness is the largest jump between neighbouring cells
        # (diagonal neighbours included).
        vals = self.values
        worst = 0.0
        for offset in itertools.product((-1, 0, 1), repeat=self.geometry.d):
            if all(o == 0 for o in offset):
                continue
            src = tuple(slice(max(o, 0), vals.shape[k] + min(o, 0)) for k, o in enumerate(offset))
            dst = tuple(slice(max(-o, 0), vals.shape[k] + min(-o, 0)) for k, o in enumerate(offset))
            if any(s.start >= s.stop for s in src):
                continue
            diff = np.abs(vals[src] - vals[dst])
            if diff.size:
                worst = max(worst, float(diff.max()))
        return worst * (1.0 + 1e-12) + 1e-300
