import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phdesc.descriptor import (DescriptorHistogram, GridSpec, destandardize, feature_matrix, fit_standardization,
                               histogram, histogram_channels, standardize)
from phdesc.errors import ParameterError, ShapeError
from phdesc.filtration import Convention
from phdesc.persistence import PersistenceDiagram, PersistencePair


def diagram(points, dim=1):
    pairs = [PersistencePair(dim, b, d, None) for b, d in points]
    return PersistenceDiagram(pairs, Convention.SQUARED_RADIUS, "test")


class TestGridSpec:
    def test_defaults(self):
        spec = GridSpec()
        assert (spec.bins, spec.lo, spec.hi, spec.width) == (128, 0.0, 8.0, 0.0625)

    def test_bin_index(self):
        spec = GridSpec()
        assert spec.bin_index(0.5) == 8
        assert spec.bin_index(0.7071068) == 11
        assert spec.bin_index(0.0) == 0
        assert spec.bin_index(8.0) == 127
        assert spec.bin_index(8.0000001) == -1
        assert spec.bin_index(-1e-9) == -1

    @pytest.mark.parametrize("bad", [dict(bins=0), dict(bins=2.5), dict(lo=1, hi=1), dict(hi=math.inf)])
    def test_invalid(self, bad):
        with pytest.raises(ParameterError):
            GridSpec(**bad)

    def test_edges(self):
        e = GridSpec(4, 0, 2).edges()
        np.testing.assert_allclose(e, [0, 0.5, 1, 1.5, 2])


class TestHistogram:
    def test_single_pair(self):
        h = histogram(diagram([(0.5, 0.7071068)]))
        assert h.grid[8, 11] == 1.0
        assert h.grid.sum() == 1.0
        assert h.in_window == 1 and h.dropped == 0 and not h.empty

    def test_skips_essential_and_zero_persistence(self):
        h = histogram(diagram([(0.5, math.inf), (0.3, 0.3), (1.0, 2.0)]))
        assert h.in_window == 1
        assert h.grid[16, 32] == 1.0

    def test_drops_outside_window(self):
        h = histogram(diagram([(1.0, 9.0), (1.0, 2.0), (1.0, 3.0)]))
        assert h.dropped == 1 and h.in_window == 2
        assert h.grid.sum() == pytest.approx(1.0)

    def test_empty(self):
        h = histogram(diagram([(1.0, 10.0)]))
        assert h.empty
        assert not h.grid.any()

    def test_unnormalized_counts(self):
        h = histogram(diagram([(1.0, 2.0), (1.01, 2.01), (3.0, 4.0)]), normalize=False)
        assert h.grid[16, 32] == 2 and h.grid.sum() == 3

    def test_dims_filter(self):
        pairs = [PersistencePair(0, 0.0, 1.0, None), PersistencePair(1, 1.0, 2.0, None)]
        dg = PersistenceDiagram(pairs, Convention.SQUARED_RADIUS)
        h1, h0 = histogram_channels(dg)
        assert h1.grid[16, 32] == 1 and h0.grid[0, 16] == 1

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.tuples(st.floats(0, 7.9), st.floats(0.01, 5)), min_size=1, max_size=50))
    def test_normalized_sums_to_one_and_is_order_free(self, pts):
        pts = [(b, min(b + d, 8.0)) for b, d in pts]
        pts = [(b, d) for b, d in pts if d > b]
        if not pts:
            return
        a = histogram(diagram(pts))
        b = histogram(diagram(pts[::-1]))
        assert a.grid.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(a.grid >= 0)
        np.testing.assert_array_equal(a.grid, b.grid)

    def test_grid_shape_checked(self):
        with pytest.raises(ShapeError):
            DescriptorHistogram(np.zeros((3, 3)), GridSpec(4))


class TestStandardization:
    def _hists(self, rng, n=20, spec=GridSpec(8, 0, 4)):
        out = []
        for _ in range(n):
            pts = [(b, b + d) for b, d in rng.uniform([0, 0.1], [2, 1.9], (10, 2))]
            out.append(histogram(diagram(pts), spec))
        return out

    def test_training_features_are_zscored(self, rng):
        hs = self._hists(rng)
        stats = fit_standardization(hs)
        z = feature_matrix([standardize(h, stats) for h in hs])
        live = stats.std > 1e-12
        np.testing.assert_allclose(z.mean(axis=0), 0, atol=1e-12)
        np.testing.assert_allclose(z.std(axis=0)[live.reshape(-1)], 1, atol=1e-12)

    def test_constant_bins_floor(self, rng):
        stats = fit_standardization(self._hists(rng))
        assert np.all(stats.std >= 1e-12)
        assert stats.std[7, 0] == 1e-12  # birth 3.5..4, death 0..0.5 is always empty

    def test_round_trip(self, rng):
        hs = self._hists(rng)
        stats = fit_standardization(hs)
        back = destandardize(standardize(hs[0], stats), stats)
        np.testing.assert_allclose(back.grid, hs[0].grid, atol=1e-12)
        assert not back.standardized

    def test_needs_two(self, rng):
        with pytest.raises(ParameterError):
            fit_standardization(self._hists(rng, 1))

    def test_rejects_standardized_input(self, rng):
        hs = self._hists(rng)
        stats = fit_standardization(hs)
        with pytest.raises(ParameterError):
            fit_standardization([standardize(h, stats) for h in hs])
        with pytest.raises(ParameterError):
            standardize(standardize(hs[0], stats), stats)

    def test_spec_mismatch(self, rng):
        stats = fit_standardization(self._hists(rng))
        other = self._hists(rng, 2, GridSpec(16, 0, 4))[0]
        with pytest.raises(ShapeError):
            standardize(other, stats)
        with pytest.raises(ShapeError):
            feature_matrix([other, self._hists(rng, 2)[0]])


class TestSupercell:
    def test_isolated_rings_are_size_independent(self):
        # no edge chain wraps the cell, so every class is local and simply repeats
        from conftest import regular_hexagon
        from phdesc.geometry import PeriodicStructure
        from phdesc.persistence import compute_diagram

        pos = np.vstack([regular_hexagon(1.5, (4, 4, 4)), [[1.0, 8.0, 8.0], [2.4, 8.3, 8.0], [1.7, 9.4, 8.2]]])
        base = PeriodicStructure(pos, [12.0] * 3)
        shifts = np.array([(i, j, k) for i in range(2) for j in range(2) for k in range(2)], dtype=float)
        big = PeriodicStructure((pos[None] + shifts[:, None] * 12.0).reshape(-1, 3), [24.0] * 3)
        a = histogram(compute_diagram(base, 3.5)).grid
        b = histogram(compute_diagram(big, 3.5)).grid
        np.testing.assert_allclose(a, b, atol=1e-12)
        assert a.sum() == pytest.approx(1.0)
