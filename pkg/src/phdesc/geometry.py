"""Periodic point clouds in orthorhombic cells and the minimum-image metric."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigurationError, DegenerateGeometryError, InputError

# g/cm^3 -> amu/A^3
AMU_GRAMS = 1.66053906660e-24
CARBON_MASS = 12.011


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PeriodicStructure:
    """Atoms in an orthorhombic periodic cell.

    ``positions`` is ``(n, 3)`` in Angstrom, ``cell`` the three edge lengths.
    Construction wraps nothing; call :func:`wrap` for the canonical form.
    """

    positions: np.ndarray
    cell: np.ndarray
    species: tuple = ()
    label: Optional[float] = None
    id: str = ""
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 3 or len(pos) < 1:
            raise InputError(f"positions must be a non-empty (n, 3) array, got shape {pos.shape}")
        cell = np.asarray(self.cell, dtype=float)
        if cell.shape == (3, 3):
            if np.any(np.abs(cell - np.diag(np.diag(cell))) > 1e-10):
                raise ConfigurationError("only orthorhombic cells are supported (off-diagonal lattice entries found)")
            cell = np.diag(cell).copy()
        if cell.shape != (3,):
            raise InputError(f"cell must have 3 edge lengths, got shape {cell.shape}")
        if not np.all(np.isfinite(cell)) or np.any(cell <= 0):
            raise ConfigurationError(f"cell lengths must be finite and > 0, got {cell.tolist()}")
        if not np.all(np.isfinite(pos)):
            bad = int(np.nonzero(~np.isfinite(pos).all(axis=1))[0][0])
            raise InputError(f"non-finite coordinate for atom {bad}")
        if self.label is not None and not np.isfinite(self.label):
            raise InputError(f"label must be finite, got {self.label}")
        species = tuple(self.species) if len(self.species) else ("C",) * len(pos)
        if len(species) != len(pos):
            raise InputError(f"{len(species)} species labels for {len(pos)} atoms")
        object.__setattr__(self, "positions", _frozen(pos))
        object.__setattr__(self, "cell", _frozen(cell))
        object.__setattr__(self, "species", species)
        if self.label is not None:
            object.__setattr__(self, "label", float(self.label))

    @property
    def n_atoms(self) -> int:
        return len(self.positions)

    @property
    def volume(self) -> float:
        return float(np.prod(self.cell))

    @property
    def density(self) -> float:
        """Mass density in g/cm^3, assuming every atom is carbon."""
        return self.n_atoms * CARBON_MASS * AMU_GRAMS / (self.volume * 1e-24)

    def replace(self, **changes) -> "PeriodicStructure":
        kw = dict(positions=self.positions, cell=self.cell, species=self.species,
                  label=self.label, id=self.id, info=dict(self.info))
        kw.update(changes)
        return PeriodicStructure(**kw)


def cell_length_for_density(n_atoms, density):
    """Edge of the cubic cell holding ``n_atoms`` carbon atoms at ``density`` g/cm^3."""
    volume = n_atoms * CARBON_MASS * AMU_GRAMS / density * 1e24
    return volume ** (1.0 / 3.0)


def minimum_image_vector(p, q, cell):
    """Displacement from ``p`` to the nearest periodic image of ``q``."""
    cell = np.asarray(cell, dtype=float)
    d = np.asarray(q, dtype=float) - np.asarray(p, dtype=float)
    return d - cell * np.round(d / cell)


def minimum_image_distance(p, q, cell) -> float:
    return float(np.linalg.norm(minimum_image_vector(p, q, cell)))


def wrap(structure: PeriodicStructure) -> PeriodicStructure:
    """Map every coordinate into ``[0, cell_i)``."""
    cell = structure.cell
    pos = np.mod(structure.positions, cell)
    # mod of a tiny negative number can round up to the cell length itself
    pos = np.where(pos >= cell, 0.0, pos)
    return structure.replace(positions=pos)


def bond_angle(a, vertex, b, cell) -> float:
    """Angle in degrees at ``vertex`` between the minimum-image bonds to ``a`` and ``b``."""
    u = minimum_image_vector(vertex, a, cell)
    v = minimum_image_vector(vertex, b, cell)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise DegenerateGeometryError("bond angle undefined for a zero-length bond")
    c = float(np.dot(u, v) / (nu * nv))
    return float(np.degrees(np.arccos(min(1.0, max(-1.0, c)))))


class MetricView:
    """Pairwise minimum-image distances of a structure, computed on demand."""

    def __init__(self, structure: PeriodicStructure):
        self.structure = structure
        self.n = structure.n_atoms
        self._matrix = None

    def __call__(self, i, j) -> float:
        s = self.structure
        return minimum_image_distance(s.positions[i], s.positions[j], s.cell)

    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            pos, cell = self.structure.positions, self.structure.cell
            d = pos[None, :, :] - pos[:, None, :]
            d -= cell * np.round(d / cell)
            m = np.sqrt(np.einsum("ijk,ijk->ij", d, d))
            np.fill_diagonal(m, 0.0)
            m.setflags(write=False)
            self._matrix = m
        return self._matrix


def check_cutoff(structure: PeriodicStructure, cutoff: float) -> None:
    """Raise unless ``0 < cutoff < min(cell)/2``, the minimum-image validity bound."""
    if not (cutoff > 0 and np.isfinite(cutoff)):
        raise ConfigurationError(f"cutoff must be positive, got {cutoff}")
    axis = int(np.argmin(structure.cell))
    half = structure.cell[axis] / 2.0
    if cutoff >= half:
        raise ConfigurationError(
            f"cutoff {cutoff} must be < half the cell length along axis {'xyz'[axis]} "
            f"({structure.cell[axis]:.6g} / 2 = {half:.6g})"
        )


def neighbor_pairs(structure: PeriodicStructure, cutoff: float):
    """All pairs ``i < j`` with minimum-image distance ``<= cutoff``.

    Returns ``(i, j, d)`` arrays sorted by ``(i, j)``. The periodic k-d tree only
    nominates candidates; distances are recomputed with the minimum-image rule
    so the result does not depend on how the tree rounds.
    """
    check_cutoff(structure, cutoff)
    s = wrap(structure)
    pos, cell = s.positions, s.cell
    if s.n_atoms < 2:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty.copy(), np.zeros(0)
    tree = cKDTree(pos, boxsize=cell)
    cand = tree.query_pairs(cutoff * (1.0 + 1e-9) + 1e-12, output_type="ndarray")
    if len(cand) == 0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty.copy(), np.zeros(0)
    i = np.minimum(cand[:, 0], cand[:, 1]).astype(np.int64)
    j = np.maximum(cand[:, 0], cand[:, 1]).astype(np.int64)
    order = np.lexsort((j, i))
    i, j = i[order], j[order]
    d = _pair_distances(structure.positions, cell, i, j)
    keep = d <= cutoff
    return i[keep], j[keep], d[keep]


def _pair_distances(pos, cell, i, j):
    # unwrapped input positions; rounding handles any image offset
    d = pos[j] - pos[i]
    d -= cell * np.round(d / cell)
    return np.sqrt(np.einsum("ij,ij->i", d, d))
