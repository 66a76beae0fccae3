import xml.etree.ElementTree as ET

import numpy as np
import pytest

from phdesc.errors import ParameterError
from phdesc.svg import coeff_heatmap, emit_svg, hist1d, pca_scatter, pd_scatter

NS = "{http://www.w3.org/2000/svg}"


def parse(text):
    return ET.fromstring(text)


class TestFigures:
    def test_pd_scatter(self):
        root = parse(pd_scatter([(0.5, 0.7), (1.0, float("inf")), (0.2, 1.1)]))
        circles = [c for c in root.iter(NS + "circle") if c.get("class") == "pair"]
        assert len(circles) == 2
        assert any(l.get("class") == "diagonal" for l in root.iter(NS + "line"))

    def test_pd_scatter_empty(self):
        assert "no pairs" in pd_scatter([])

    def test_heatmap_symmetric_scale(self):
        g = np.zeros((4, 4))
        g[0, 1], g[2, 3] = -2.0, 1.0
        root = parse(coeff_heatmap(g, 0, 8))
        fills = sorted(r.get("fill") for r in root.iter(NS + "rect") if r.get("fill") != "white")
        assert fills == ["#0000ff", "#ff8080"]
        assert "-2" in root.find(NS + "desc").text

    def test_pca_and_hist(self):
        parse(pca_scatter(np.arange(10.0).reshape(5, 2), [1, 2, 3, 4, 5]))
        root = parse(hist1d(np.array([0, 1, 2.0]), np.array([3, 0]), "x", "t", [("low", [1, 2])]))
        assert len([r for r in root.iter(NS + "rect") if r.get("fill") == "steelblue"]) == 1

    def test_emit_deterministic(self, tmp_path):
        a = emit_svg("pd_scatter", tmp_path / "a.svg", [(0.1, 0.3)])
        b = emit_svg("pd_scatter", tmp_path / "b.svg", [(0.1, 0.3)])
        assert open(a).read() == open(b).read()
        with pytest.raises(ParameterError):
            emit_svg("pie", tmp_path / "c.svg")
