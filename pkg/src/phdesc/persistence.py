"""Persistence pairs by GF(2) column reduction, plus representative cycles.

Columns are Python integers used as bit sets over the simplices one dimension
down, so adding two columns is a single XOR and the pivot of a column is its
highest set bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import ParameterError, StructuralError, UnsupportedOperationError
from .filtration import Convention, Filtration, Simplex

INF = math.inf
DEFAULT_CYCLE_BUDGET = 10_000


@dataclass(frozen=True)
class PersistencePair:
    dim: int
    birth: float
    death: float
    birth_simplex: Simplex
    death_simplex: Optional[Simplex] = None
    birth_index: int = -1
    death_index: int = -1

    @property
    def essential(self) -> bool:
        return self.death == INF

    @property
    def zero_persistence(self) -> bool:
        return self.birth == self.death

    @property
    def persistence(self) -> float:
        return self.death - self.birth


@dataclass(eq=False)
class PersistenceDiagram:
    pairs: list
    convention: Convention
    structure_id: str = ""
    cutoff: float = math.nan
    _reduction: Optional["_Reduction"] = field(default=None, repr=False)

    def select(self, dim=None, finite=None, nonzero=None):
        out = []
        for p in self.pairs:
            if dim is not None and p.dim != dim:
                continue
            if finite is not None and p.essential == finite:
                continue
            if nonzero is not None and p.zero_persistence == nonzero:
                continue
            out.append(p)
        return out

    def without_zero_persistence(self) -> "PersistenceDiagram":
        return PersistenceDiagram([p for p in self.pairs if not p.zero_persistence], self.convention,
                                  self.structure_id, self.cutoff, self._reduction)

    def as_array(self, dim=None, include_zero=False) -> np.ndarray:
        """``(k, 3)`` array of ``(dim, birth, death)`` rows."""
        rows = [(p.dim, p.birth, p.death) for p in self.pairs
                if (dim is None or p.dim == dim) and (include_zero or not p.zero_persistence)]
        return np.array(rows, dtype=float).reshape(-1, 3)


class _Reduction:
    """Reduced triangle columns kept alive for cycle extraction."""

    def __init__(self, filtration, edge_global, edge_verts, edge_values, tri_global, pivot_of, columns):
        self.filtration = filtration
        self.edge_global = edge_global
        self.edge_verts = edge_verts
        self.edge_values = edge_values
        self.tri_global = tri_global
        self.pivot_of = pivot_of  # edge rank -> triangle rank
        self.columns = columns  # triangle rank -> reduced column (edge bit set)
        self.edge_rank = {int(g): r for r, g in enumerate(edge_global)}
        self.tri_rank = {int(g): r for r, g in enumerate(tri_global)}

    def edges_of(self, bits):
        out = []
        while bits:
            low = bits.bit_length() - 1
            out.append(low)
            bits ^= 1 << low
        return sorted(out)

    def is_boundary_by(self, bits, tri_rank_limit) -> bool:
        """Whether the edge chain ``bits`` bounds within triangles of rank <= limit."""
        while bits:
            low = bits.bit_length() - 1
            o = self.pivot_of.get(low)
            if o is None or o > tri_rank_limit:
                return False
            bits ^= self.columns[o]
        return True


def _split(filtration):
    dims = filtration.dims
    vert_global = np.nonzero(dims == 0)[0]
    edge_global = np.nonzero(dims == 1)[0]
    tri_global = np.nonzero(dims == 2)[0]
    n = filtration.n_vertices
    if len(vert_global) != n:
        raise StructuralError(f"expected {n} vertices, found {len(vert_global)}")
    verts = filtration.vertices
    if np.any(np.diff(filtration.values) < 0):
        raise StructuralError("filtration values are not sorted")
    vrank = np.empty(n, dtype=np.int64)
    vrank[verts[vert_global, 0]] = np.arange(n)

    ev = verts[edge_global, :2]
    if len(ev) and np.any(ev[:, 0] >= ev[:, 1]):
        raise StructuralError("edge vertices must be strictly increasing")
    ekeys = ev[:, 0] * n + ev[:, 1]
    korder = np.argsort(ekeys, kind="stable")
    sorted_keys = ekeys[korder]
    if len(sorted_keys) > 1 and np.any(np.diff(sorted_keys) == 0):
        raise StructuralError("duplicate edge in filtration")

    tv = verts[tri_global]
    tri_edges = np.zeros((len(tv), 3), dtype=np.int64)
    for c, (a, b) in enumerate(((0, 1), (0, 2), (1, 2))):
        keys = tv[:, a] * n + tv[:, b]
        pos = np.searchsorted(sorted_keys, keys)
        pos = np.minimum(pos, max(len(sorted_keys) - 1, 0))
        if len(keys) and (len(sorted_keys) == 0 or np.any(sorted_keys[pos] != keys)):
            raise StructuralError("triangle with a missing edge")
        tri_edges[:, c] = korder[pos]
    if len(tv):
        face_global = edge_global[tri_edges]
        if np.any(face_global.max(axis=1) > tri_global):
            raise StructuralError("triangle precedes one of its edges")
        if np.any(filtration.values[face_global].max(axis=1) > filtration.values[tri_global]):
            raise StructuralError("triangle value below one of its edges")
    edge_vrank = vrank[ev] if len(ev) else np.zeros((0, 2), np.int64)
    if len(ev):
        vg = vert_global[edge_vrank]
        if np.any(vg.max(axis=1) > edge_global):
            raise StructuralError("edge precedes one of its vertices")
    return vert_global, edge_global, tri_global, edge_vrank, tri_edges


def reduce(filtration: Filtration, structure_id: str = "") -> PersistenceDiagram:
    """Persistence pairs in dimensions 0 and 1.

    Triangle columns are reduced first; every edge that becomes a pivot there
    is positive, so its own column is skipped (clearing). Zero-persistence
    pairs are kept and can be dropped with
    :meth:`PersistenceDiagram.without_zero_persistence`.
    """
    vert_global, edge_global, tri_global, edge_vrank, tri_edges = _split(filtration)
    values = filtration.values

    pivot_of = {}
    columns = {}
    for t, (a, b, c) in enumerate(tri_edges.tolist()):
        col = (1 << a) | (1 << b) | (1 << c)
        low = max(a, b, c)
        while True:
            o = pivot_of.get(low)
            if o is None:
                break
            col ^= columns[o]
            if not col:
                break
            low = col.bit_length() - 1
        if col:
            pivot_of[low] = t
            columns[t] = col

    pairs = []
    vpivot = {}
    vcols = {}
    for e, (a, b) in enumerate(edge_vrank.tolist()):
        if e in pivot_of:
            continue
        col = (1 << a) | (1 << b)
        low = max(a, b)
        while True:
            o = vpivot.get(low)
            if o is None:
                break
            col ^= vcols[o]
            if not col:
                break
            low = col.bit_length() - 1
        if col:
            vpivot[low] = e
            vcols[e] = col
            g = int(edge_global[e])
            pairs.append(PersistencePair(0, 0.0, float(values[g]), filtration.simplex(int(vert_global[low])),
                                         filtration.simplex(g), int(vert_global[low]), g))
        else:
            g = int(edge_global[e])
            pairs.append(PersistencePair(1, float(values[g]), INF, filtration.simplex(g), None, g, -1))

    for v in range(len(vert_global)):
        if v not in vpivot:
            g = int(vert_global[v])
            pairs.append(PersistencePair(0, 0.0, INF, filtration.simplex(g), None, g, -1))
    for e, t in pivot_of.items():
        ge, gt = int(edge_global[e]), int(tri_global[t])
        pairs.append(PersistencePair(1, float(values[ge]), float(values[gt]), filtration.simplex(ge),
                                     filtration.simplex(gt), ge, gt))

    pairs.sort(key=lambda p: (p.dim, p.birth_index))
    edge_verts = filtration.vertices[edge_global, :2]
    red = _Reduction(filtration, edge_global, edge_verts, values[edge_global], tri_global, pivot_of, columns)
    return PersistenceDiagram(pairs, filtration.convention, structure_id, filtration.cutoff, red)


class CycleExtraction(NamedTuple):
    edges: list
    method: str  # "tightened" or "reduced_column"


def extract_cycle(diagram: PersistenceDiagram, pair: PersistencePair, tighten=True,
                  budget=DEFAULT_CYCLE_BUDGET) -> CycleExtraction:
    """Representative cycle for a finite H1 pair, plus how it was obtained.

    The reduced death column is a cycle whose youngest edge is the birth edge.
    When ``tighten`` is set, the shortest path closing the birth edge through
    older edges is searched for (fewest edges, then smallest total scale); a
    candidate is accepted only if it differs from the reduced column by a
    boundary of triangles entering no later than the death simplex.
    """
    if pair.dim != 1:
        raise UnsupportedOperationError("representative cycles exist only for dimension-1 pairs")
    if pair.essential:
        raise UnsupportedOperationError("essential classes have no death column to read a cycle from")
    red = diagram._reduction
    if red is None:
        raise UnsupportedOperationError("diagram was not produced by reduce(); no reduction data attached")
    b = red.edge_rank.get(pair.birth_index)
    t = red.tri_rank.get(pair.death_index)
    if b is None or t is None or red.pivot_of.get(b) != t:
        raise ParameterError("pair does not belong to this diagram")
    raw = red.columns[t]

    def as_edges(bits):
        return [tuple(int(x) for x in red.edge_verts[r]) for r in red.edges_of(bits)]

    if tighten:
        found = _tighten(red, b, t, raw, budget)
        if found is not None:
            return CycleExtraction(as_edges(found), "tightened")
    return CycleExtraction(as_edges(raw), "reduced_column")


def representative_cycle(diagram, pair, tighten=True, budget=DEFAULT_CYCLE_BUDGET):
    """Edges ``(i, j)`` of a cycle representing ``pair``."""
    return extract_cycle(diagram, pair, tighten, budget).edges


def _tighten(red, b, t, raw, budget):
    u, v = (int(x) for x in red.edge_verts[b])
    raw_len = bin(raw).count("1")
    # graph of edges strictly older than the birth edge
    adj = {}
    for r in range(b):
        x, y = (int(q) for q in red.edge_verts[r])
        adj.setdefault(x, []).append((y, r))
        adj.setdefault(y, []).append((x, r))
    for lst in adj.values():
        lst.sort()

    dist = {v: 0}
    frontier = [v]
    while frontier:
        nxt = []
        for x in frontier:
            for y, _ in adj.get(x, ()):
                if y not in dist:
                    dist[y] = dist[x] + 1
                    nxt.append(y)
        frontier = nxt
    if u not in dist:
        return None
    values = red.edge_values
    expanded = 0
    # a path of raw_len - 1 edges is no tighter than the raw column itself
    for length in range(dist[u], raw_len - 1):
        found = []
        stack = [(u, 0, (u,), 0)]
        while stack:
            node, bits, path, depth = stack.pop()
            expanded += 1
            if expanded > budget:
                return None
            if depth == length:
                if node == v:
                    found.append(bits)
                continue
            remaining = length - depth - 1
            for y, r in adj.get(node, ()):
                if y in path or (y == v and remaining > 0):
                    continue
                if dist.get(y, length + 1) > remaining:
                    continue
                stack.append((y, bits | (1 << r), path + (y,), depth + 1))
        if found:
            def weight(bits):
                return (float(sum(values[r] for r in red.edges_of(bits))), bits)
            for bits in sorted(set(found), key=weight):
                cand = bits | (1 << b)
                if red.is_boundary_by(cand ^ raw, t):
                    return cand
    return None


def betti_at(diagram: PersistenceDiagram, t: float):
    """``(b0, b1)`` of the complex at scale ``t``: classes born at or before ``t`` still alive."""
    b = [0, 0]
    for p in diagram.pairs:
        if p.dim in (0, 1) and p.birth <= t < p.death:
            b[p.dim] += 1
    return b[0], b[1]


def compute_diagram(structure, cutoff, convention=None) -> PersistenceDiagram:
    """Filtration and reduction in one call."""
    from .filtration import DEFAULT_CONVENTION, build_rips

    filt = build_rips(structure, cutoff, convention or DEFAULT_CONVENTION)
    return reduce(filt, structure_id=structure.id)
