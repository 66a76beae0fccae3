"""Which rings does the model care about?

Planted hexagons lower the label; the most negative coefficients should point
at their (birth, death) bin and the cycles there should have 1.5 A bonds.
"""
import logging

import numpy as np

from phdesc import PeriodicStructure, GridSpec, compute_diagram, histogram
from phdesc.descriptor import fit_standardization, standardize
from phdesc.inverse import CycleReport, assign_cycles, coefficient_map, geometry_histograms, select_regions
from phdesc.model import fit_ridge

# empty backgrounds are expected here; silence the per-structure warning
logging.getLogger("phdesc").setLevel(logging.ERROR)

L, N = 16.0, 70
rng = np.random.default_rng(1)


def mi(a, b):
    d = b - a
    d -= L * np.round(d / L)
    return np.sqrt((d * d).sum(-1))


def planted(k):
    ang = np.arange(6) * np.pi / 3
    ring = 1.5 * np.stack([np.cos(ang), np.sin(ang), 0 * ang], 1)
    pts = []
    while len(pts) < 6 * k:
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        h = rng.uniform(0, L, 3) + ring @ q.T
        if all(mi(p, h).min() > 4.0 for p in pts):
            pts.extend(h)
    while len(pts) < N:
        p = rng.uniform(0, L, 3)
        d = mi(p, np.array(pts)) if pts else np.array([])
        if np.all(d[:6 * k] > 3.6) and np.all(d[6 * k:] > 2.0):
            pts.append(p)
    return PeriodicStructure(np.mod(pts, L), [L] * 3, label=-k / N + rng.normal(0, 0.002))


structures = [planted(int(rng.integers(0, 5))) for _ in range(150)]
spec = GridSpec()
diagrams = [compute_diagram(s, 3.5) for s in structures]
hists = [histogram(d, spec) for d in diagrams]
stats = fit_standardization(hists)
model = fit_ridge([standardize(h, stats) for h in hists], [s.label for s in structures], 200.0, stats)

cmap = coefficient_map(model)
g = cmap.grid
print("most negative bin:", np.unravel_index(np.argmin(g), g.shape), g.min())
print("hexagon pair would sit at", spec.bin_index(0.75 ** 2), spec.bin_index((1.5 * np.sqrt(3) / 2) ** 2))

# thresholds relative to this model's scale
regions = select_regions(cmap, 0.5 * g.max(), 0.5 * g.min())
report = CycleReport.merge(assign_cycles(s, d, regions, spec) for s, d in zip(structures, diagrams))
h = geometry_histograms(report)
print(len(report.cycles), "cycles in the selected regions")
print("low region: bond peak", h["bonds"]["low"].peak, "A, angle peak", h["angles"]["low"].peak, "deg")
