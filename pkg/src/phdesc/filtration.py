"""Vietoris-Rips filtrations (dimensions 0-2) over the minimum-image metric."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, StructuralError
from .geometry import PeriodicStructure, neighbor_pairs


class Convention(str, enum.Enum):
    """How an edge of length ``d`` is mapped to a filtration scale."""

    RADIUS = "radius"
    SQUARED_RADIUS = "squared_radius"

    @classmethod
    def parse(cls, value) -> "Convention":
        if isinstance(value, cls):
            return value
        if value == "squared":
            return cls.SQUARED_RADIUS
        try:
            return cls(value)
        except ValueError:
            raise ConfigurationError(f"unknown convention {value!r}; expected radius or squared_radius") from None

    def scale(self, d):
        """Filtration value for edge length(s) ``d``."""
        r = np.asarray(d, dtype=float) / 2.0
        return r if self is Convention.RADIUS else r * r

    def length(self, value):
        """Inverse of :meth:`scale`: the edge length entering at ``value``."""
        v = np.asarray(value, dtype=float)
        return 2.0 * v if self is Convention.RADIUS else 2.0 * np.sqrt(v)


DEFAULT_CONVENTION = Convention.SQUARED_RADIUS


class Simplex(NamedTuple):
    vertices: tuple

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1


@dataclass(frozen=True, eq=False)
class Filtration:
    """Simplices sorted by ``(value, dim, vertex tuple)``.

    Stored column-wise: ``vertices`` is ``(m, 3)`` padded with -1.
    """

    values: np.ndarray
    dims: np.ndarray
    vertices: np.ndarray
    convention: Convention
    cutoff: float
    n_vertices: int

    def __len__(self):
        return len(self.values)

    def simplex(self, k) -> Simplex:
        d = int(self.dims[k])
        return Simplex(tuple(int(v) for v in self.vertices[k, : d + 1]))

    @property
    def simplices(self):
        return [(self.simplex(k), float(self.values[k])) for k in range(len(self))]

    def count(self, dim) -> int:
        return int(np.count_nonzero(self.dims == dim))

    def validate(self) -> None:
        """Raise :class:`StructuralError` unless every face precedes its cofaces."""
        seen = {}
        for k in range(len(self)):
            s = self.simplex(k)
            v = float(self.values[k])
            if s.dim == 0:
                if v != 0.0:
                    raise StructuralError(f"vertex {s.vertices} has nonzero value {v}")
            else:
                for drop in range(len(s.vertices)):
                    face = s.vertices[:drop] + s.vertices[drop + 1:]
                    if face not in seen:
                        raise StructuralError(f"simplex {s.vertices} at position {k} precedes its face {face}")
                    if seen[face] > v:
                        raise StructuralError(f"face {face} enters after coface {s.vertices}")
            if s.vertices in seen:
                raise StructuralError(f"duplicate simplex {s.vertices}")
            seen[s.vertices] = v


def _triangles(n, ei, ej, chunk=4096):
    """Vertex triples ``i < j < k`` whose three edges are all present."""
    if len(ei) == 0:
        return np.zeros((0, 3), dtype=np.int64)
    adj = np.zeros((n, n), dtype=bool)
    adj[ei, ej] = True
    adj[ej, ei] = True
    cols = np.arange(n)
    out = []
    for start in range(0, len(ei), chunk):
        i, j = ei[start:start + chunk], ej[start:start + chunk]
        common = adj[i] & adj[j] & (cols[None, :] > j[:, None])
        e, k = np.nonzero(common)
        out.append(np.stack([i[e], j[e], k], axis=1))
    return np.concatenate(out)


def build_rips(structure: PeriodicStructure, cutoff: float, convention=DEFAULT_CONVENTION) -> Filtration:
    """Rips filtration of ``structure`` truncated at edge length ``cutoff``.

    Vertices enter at 0, edges at ``f(d)`` and triangles at the largest value of
    their edges, where ``f`` is ``d/2`` or ``(d/2)**2`` depending on
    ``convention``.
    """
    convention = Convention.parse(convention)
    n = structure.n_atoms
    ei, ej, d = neighbor_pairs(structure, cutoff)
    evals = convention.scale(d)

    tri = _triangles(n, ei, ej)
    if len(tri):
        keys = ei * n + ej  # sorted, as neighbor_pairs orders by (i, j)
        def lookup(a, b):
            return evals[np.searchsorted(keys, a * n + b)]
        tvals = np.maximum(np.maximum(lookup(tri[:, 0], tri[:, 1]), lookup(tri[:, 0], tri[:, 2])),
                           lookup(tri[:, 1], tri[:, 2]))
    else:
        tvals = np.zeros(0)

    m = n + len(ei) + len(tri)
    verts = np.full((m, 3), -1, dtype=np.int64)
    verts[:n, 0] = np.arange(n)
    verts[n:n + len(ei), 0] = ei
    verts[n:n + len(ei), 1] = ej
    verts[n + len(ei):] = tri
    dims = np.concatenate([np.zeros(n, np.int8), np.ones(len(ei), np.int8), np.full(len(tri), 2, np.int8)])
    values = np.concatenate([np.zeros(n), evals, tvals])

    order = np.lexsort((verts[:, 2], verts[:, 1], verts[:, 0], dims, values))
    values, dims, verts = values[order], dims[order], verts[order]
    for a in (values, dims, verts):
        a.setflags(write=False)
    return Filtration(values, dims, verts, convention, float(cutoff), n)


def edge_count_bound(structure: PeriodicStructure, cutoff: float) -> int:
    """Number of edges :func:`build_rips` emits for this cutoff."""
    return len(neighbor_pairs(structure, cutoff)[0])
