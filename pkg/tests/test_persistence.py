import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import BIG, random_structure, regular_hexagon
from oracles import all_simple_cycles, betti_by_rank, brute_distance_matrix, gf2_rank, kruskal_mst_lengths, naive_pairs
from phdesc.errors import ParameterError, StructuralError, UnsupportedOperationError
from phdesc.filtration import Convention, Filtration, build_rips
from phdesc.geometry import PeriodicStructure
from phdesc.persistence import betti_at, compute_diagram, extract_cycle, reduce, representative_cycle


def multiset(diagram):
    return sorted((p.dim, p.birth, p.death) for p in diagram.pairs)


class TestUnitSquare:
    def test_pairs(self, unit_square):
        dg = reduce(build_rips(unit_square, 1.5, "radius"))
        h1 = dg.select(dim=1, finite=True, nonzero=True)
        assert len(h1) == 1
        assert h1[0].birth == pytest.approx(0.5, abs=1e-7)
        assert h1[0].death == pytest.approx(0.7071068, abs=1e-7)
        assert len(dg.select(dim=0, finite=False)) == 1
        assert [p.death for p in dg.select(dim=0, finite=True)] == [0.5] * 3

    def test_cycle_is_the_four_sides(self, unit_square):
        dg = reduce(build_rips(unit_square, 1.5, "radius"))
        ext = extract_cycle(dg, dg.select(dim=1, finite=True, nonzero=True)[0])
        assert ext.method in ("tightened", "reduced_column")
        assert sorted(ext.edges) == [(0, 1), (0, 3), (1, 2), (2, 3)]

    def test_without_zero_persistence(self, unit_square):
        dg = reduce(build_rips(unit_square, 1.5, "radius"))
        assert all(not p.zero_persistence for p in dg.without_zero_persistence().pairs)
        assert dg.as_array(dim=1).shape == (1, 3)


class TestHexagon:
    def test_pair_and_cycle(self, hexagon):
        dg = compute_diagram(hexagon, 3.5, "radius")
        (p,) = dg.select(dim=1, finite=True, nonzero=True)
        assert p.birth == pytest.approx(0.75)
        assert p.death == pytest.approx(1.5 * math.sqrt(3) / 2)
        edges = representative_cycle(dg, p)
        assert len(edges) == 6
        assert sorted(edges) == sorted(tuple(sorted((k, (k + 1) % 6))) for k in range(6))


class TestOracleEquivalence:
    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.integers(1, 9), st.sampled_from(list(Convention)))
    def test_matches_dense_reduction(self, seed, n, conv):
        s = random_structure(np.random.default_rng(seed), n, 6.0)
        f = build_rips(s, 2.9, conv)
        assert multiset(reduce(f)) == naive_pairs([(tuple(x.vertices), v) for x, v in f.simplices])

    def test_lattice_ties(self):
        # many equal edge values stress the tie ordering
        g = np.stack(np.meshgrid(*[np.arange(3.0)] * 3, indexing="ij"), -1).reshape(-1, 3)
        s = PeriodicStructure(g * 1.5, [4.5] * 3)
        f = build_rips(s, 2.2)
        assert multiset(reduce(f)) == naive_pairs([(tuple(x.vertices), v) for x, v in f.simplices])


class TestH0:
    def test_deaths_are_mst(self, rng):
        for trial in range(10):
            s = random_structure(rng, 40, 8.0)
            dm = brute_distance_matrix(s.positions, s.cell)
            mst = np.array(kruskal_mst_lengths(dm))
            if mst.max() > 3.9:
                continue
            dg = compute_diagram(s, 3.9, "radius")
            deaths = sorted(p.death for p in dg.select(dim=0, finite=True))
            np.testing.assert_allclose(deaths, np.sort(mst / 2), atol=1e-10, rtol=0)

    def test_single_essential_class_when_connected(self, rng):
        dg = compute_diagram(random_structure(rng, 30, 6.0), 2.9)
        b0, _ = betti_at(dg, 1e9)
        assert b0 == len(dg.select(dim=0, finite=False))


class TestBetti:
    def test_matches_rank_oracle(self, rng):
        for trial in range(5):
            s = random_structure(rng, 10, 6.0)
            f = build_rips(s, 2.9)
            dg = reduce(f)
            simp = [(tuple(x.vertices), v) for x, v in f.simplices]
            for t in sorted({v for _, v in simp})[::3] + [1e9]:
                b0, b1, _ = betti_by_rank(simp, t)
                assert betti_at(dg, t) == (b0, b1)

    def test_euler_characteristic(self, rng):
        s = random_structure(rng, 12, 6.0)
        f = build_rips(s, 2.9)
        simp = [(tuple(x.vertices), v) for x, v in f.simplices]
        b0, b1, b2 = betti_by_rank(simp, math.inf)
        chi = f.count(0) - f.count(1) + f.count(2)
        assert chi == b0 - b1 + b2

    def test_cubic_lattice_essential_loops(self):
        g = np.stack(np.meshgrid(*[np.arange(4.0)] * 3, indexing="ij"), -1).reshape(-1, 3)
        dg = compute_diagram(PeriodicStructure(g, [4.0] * 3), 1.0)
        # only nearest-neighbor bonds, no triangles: b1 = E - V + 1
        assert betti_at(dg, 1.0) == (1, 192 - 64 + 1)


def _valid(f, death_index, chain, raw):
    """Whether chain + raw bounds using triangles entering no later than death_index."""
    simp = [tuple(x.vertices) for x, _ in f.simplices]
    edges = [s for s in simp if len(s) == 2]
    eidx = {e: k for k, e in enumerate(edges)}
    tris = [s for k, s in enumerate(simp) if len(s) == 3 and k <= death_index]
    B = np.zeros((len(edges), len(tris)), dtype=np.uint8)
    for j, (a, b, c) in enumerate(tris):
        for e in ((a, b), (a, c), (b, c)):
            B[eidx[e], j] = 1
    z = np.zeros(len(edges), dtype=np.uint8)
    for e in set(chain) ^ set(raw):
        z[eidx[e]] = 1
    return gf2_rank(B) == gf2_rank(np.column_stack([B, z]))


class TestCycles:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_tightened_cycle_is_minimal_and_homologous(self, seed):
        s = random_structure(np.random.default_rng(seed), 8, 6.0)
        f = build_rips(s, 2.9)
        dg = reduce(f)
        simp = f.simplices
        for p in dg.select(dim=1, finite=True, nonzero=True):
            raw = extract_cycle(dg, p, tighten=False)
            assert raw.method == "reduced_column"
            ext = extract_cycle(dg, p)
            birth_edge = tuple(p.birth_simplex.vertices)
            assert birth_edge in ext.edges
            assert _valid(f, p.death_index, ext.edges, raw.edges)
            # every vertex of the chain has even degree
            deg = {}
            for a, b in ext.edges:
                deg[a] = deg.get(a, 0) + 1
                deg[b] = deg.get(b, 0) + 1
            assert all(d % 2 == 0 for d in deg.values())
            older = [tuple(x.vertices) for k, (x, _) in enumerate(simp)
                     if x.dim == 1 and k <= p.birth_index]
            candidates = [c for c in all_simple_cycles(older)
                          if birth_edge in c and _valid(f, p.death_index, c, raw.edges)]
            best = min(len(c) for c in candidates) if candidates else math.inf
            if ext.method == "tightened":
                assert len(ext.edges) == best
            else:
                assert len(ext.edges) <= best

    def test_budget_exhaustion_falls_back(self, hexagon):
        dg = compute_diagram(hexagon, 3.5)
        (p,) = dg.select(dim=1, finite=True, nonzero=True)
        ext = extract_cycle(dg, p, budget=0)
        assert ext.method == "reduced_column"
        assert len(ext.edges) == 6

    def test_essential_pair_rejected(self):
        g = np.stack(np.meshgrid(*[np.arange(4.0)] * 3, indexing="ij"), -1).reshape(-1, 3)
        dg = compute_diagram(PeriodicStructure(g, [4.0] * 3), 1.0)
        with pytest.raises(UnsupportedOperationError):
            extract_cycle(dg, dg.select(dim=1, finite=False)[0])

    def test_h0_pair_rejected(self, unit_square):
        dg = compute_diagram(unit_square, 1.5)
        with pytest.raises(UnsupportedOperationError):
            extract_cycle(dg, dg.select(dim=0)[0])

    def test_foreign_pair_rejected(self, unit_square, hexagon):
        a = compute_diagram(unit_square, 1.5)
        b = compute_diagram(hexagon, 3.5)
        with pytest.raises(ParameterError):
            extract_cycle(a, b.select(dim=1, finite=True, nonzero=True)[0])


class TestStructuralErrors:
    def test_missing_face(self, unit_square):
        f = build_rips(unit_square, 1.5)
        keep = np.array([not (d == 1 and v == 0.25 and tuple(x[:2]) == (0, 1))
                         for d, v, x in zip(f.dims, f.values, f.vertices)])
        bad = Filtration(f.values[keep], f.dims[keep], f.vertices[keep], f.convention, f.cutoff, f.n_vertices)
        with pytest.raises(StructuralError):
            reduce(bad)

    def test_unsorted_values(self, unit_square):
        f = build_rips(unit_square, 1.5)
        vals = f.values.copy()
        vals[-1] = 0.0
        with pytest.raises(StructuralError):
            reduce(Filtration(vals, f.dims, f.vertices, f.convention, f.cutoff, f.n_vertices))

    def test_empty_edges(self):
        s = PeriodicStructure([[0, 0, 0], [5, 5, 5]], BIG)
        dg = compute_diagram(s, 2.0)
        assert sorted((p.dim, p.death) for p in dg.pairs) == [(0, math.inf), (0, math.inf)]
