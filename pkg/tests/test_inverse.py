import numpy as np
import pytest

from phdesc.descriptor import GridSpec
from phdesc.errors import ConfigurationError, ParameterError, ShapeError
from phdesc.geometry import PeriodicStructure
from phdesc.inverse import (CoefficientMap, CycleRecord, CycleReport, _hist1d, assign_cycles, coefficient_map,
                            cycle_angles, geometry_histograms, induced_bonds, select_regions)
from phdesc.model import RidgeModel
from phdesc.persistence import compute_diagram

SPEC = GridSpec()


class TestCoefficientMap:
    def test_layout(self):
        w = np.zeros(128 * 128)
        w[8 * 128 + 11] = 1.0  # birth row 8, death column 11
        cmap = coefficient_map(RidgeModel(w, 0.0, spec=SPEC))
        assert cmap.grid[8, 11] == 1.0
        np.testing.assert_array_equal(cmap.flatten(), w)

    def test_shape_checked(self):
        with pytest.raises(ShapeError):
            CoefficientMap(np.zeros((4, 4)), SPEC)

    def test_thresholds(self):
        g = np.zeros((128, 128))
        g[1, 2], g[3, 4], g[5, 6] = 0.004, -0.005, 0.003
        high, low = select_regions(CoefficientMap(g, SPEC))
        assert high == {(1, 2)}  # strictly above 0.003
        assert low == {(3, 4)}

    def test_threshold_signs(self):
        with pytest.raises(ParameterError):
            select_regions(CoefficientMap(np.zeros((128, 128)), SPEC), -0.1, -0.2)


def hexagon_in_box(edge=1.5):
    ang = np.arange(6) * np.pi / 3
    pos = 10 + edge * np.stack([np.cos(ang), np.sin(ang), np.zeros(6)], axis=1)
    return PeriodicStructure(pos, [20.0] * 3, id="hex")


class TestAssign:
    def test_hexagon_cycle(self):
        s = hexagon_in_box()
        dg = compute_diagram(s, 3.5)
        (p,) = dg.select(dim=1, finite=True, nonzero=True)
        cell = (int(SPEC.bin_index(p.birth)), int(SPEC.bin_index(p.death)))
        report = assign_cycles(s, dg, (set(), {cell}), SPEC, "squared_radius")
        (rec,) = report.cycles
        assert rec.region == "low" and rec.extraction in ("tightened", "reduced_column")
        np.testing.assert_allclose(rec.bond_lengths, [1.5] * 6, atol=1e-12)
        np.testing.assert_allclose(rec.bond_angles, [120.0] * 6, atol=1e-9)
        assert report.atom_regions(7, "hex") == ["low"] * 6 + ["none"]

    def test_induced_scope(self):
        s = hexagon_in_box()
        dg = compute_diagram(s, 3.5)
        (p,) = dg.select(dim=1, finite=True, nonzero=True)
        cell = (int(SPEC.bin_index(p.birth)), int(SPEC.bin_index(p.death)))
        a = assign_cycles(s, dg, (set(), {cell}), SPEC, bond_scope="cycle").cycles[0]
        b = assign_cycles(s, dg, (set(), {cell}), SPEC, bond_scope="induced").cycles[0]
        # no chord of a regular hexagon is as short as its side
        assert sorted(a.bond_lengths) == pytest.approx(sorted(b.bond_lengths))
        with pytest.raises(ParameterError):
            assign_cycles(s, dg, (set(), {cell}), SPEC, bond_scope="all")

    def test_induced_bonds_add_chords(self):
        s = PeriodicStructure([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], [20.0] * 3)
        square = [(0, 1), (1, 2), (2, 3), (0, 3)]
        assert sorted(induced_bonds(square, s, 1.0)) == [(0, 1), (0, 3), (1, 2), (2, 3)]
        assert len(induced_bonds(square, s, 1.5)) == 6

    def test_unselected_bins_give_nothing(self):
        s = hexagon_in_box()
        dg = compute_diagram(s, 3.5)
        assert assign_cycles(s, dg, ({(0, 0)}, {(1, 1)}), SPEC).cycles == []

    def test_convention_mismatch(self):
        s = hexagon_in_box()
        with pytest.raises(ConfigurationError):
            assign_cycles(s, compute_diagram(s, 3.5, "radius"), (set(), {(1, 1)}), SPEC, "squared_radius")

    def test_both_tag(self):
        rep = CycleReport([CycleRecord("high", 0, 1, (0, 0), [(0, 1)], [1.0], [], "tightened", "a"),
                           CycleRecord("low", 0, 1, (0, 0), [(1, 2)], [1.0], [], "tightened", "a")])
        assert rep.atom_regions(3) == ["high", "both", "low"]


class TestGeometryHistograms:
    def test_bonds(self):
        rep = CycleReport([CycleRecord("low", 0, 1, (0, 0), [], [1.5, 1.5, 1.6], [], "tightened")])
        h = geometry_histograms(rep)
        low = h["bonds"]["low"]
        assert low.counts[30] == 2 and low.counts[32] == 1
        assert low.peak == pytest.approx(1.5)
        assert h["bonds"]["high"].empty

    def test_angle_bins_are_fixed(self):
        h = _hist1d([0.0, 120.0, 180.0], 5.0, 180.0)
        assert len(h.counts) == 36
        assert h.counts[24] == 1 and h.counts[35] == 1 and h.counts[0] == 1

    def test_square_angles(self):
        s = PeriodicStructure([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], [20.0] * 3)
        np.testing.assert_allclose(cycle_angles([(0, 1), (1, 2), (2, 3), (0, 3)], s), [90.0] * 4)

    def test_widths(self):
        with pytest.raises(ParameterError):
            geometry_histograms(CycleReport(), 0.0)
