"""From atoms to a persistence diagram, and back to the ring behind each loop."""
import numpy as np

from phdesc import PeriodicStructure, build_rips, reduce
from phdesc.persistence import betti_at, extract_cycle

box = [20.0, 20.0, 20.0]

# Unit square, radius convention: sides enter at 0.5, diagonals at sqrt(2)/2
square = PeriodicStructure([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], box)
filt = build_rips(square, 1.5, "radius")
for simplex, value in filt.simplices:
    print(simplex.vertices, round(value, 4))

dg = reduce(filt)
for p in dg.select(dim=1):
    print("H1", p.birth, p.death, "(zero persistence)" if p.zero_persistence else "")

loop = dg.select(dim=1, finite=True, nonzero=True)[0]
print("cycle:", extract_cycle(dg, loop).edges)

# Betti numbers along the filtration: one component, then a loop, then nothing
for t in (0.0, 0.5, 0.6, 0.8):
    print(t, betti_at(dg, t))

# A regular hexagon of side 1.5 A (squared-radius convention, the default)
ang = np.arange(6) * np.pi / 3
hexagon = PeriodicStructure(10 + 1.5 * np.stack([np.cos(ang), np.sin(ang), 0 * ang], 1), box)
hdg = reduce(build_rips(hexagon, 3.5))
(ring,) = hdg.select(dim=1, finite=True, nonzero=True)
print("hexagon pair", ring.birth, ring.death)
print("hexagon cycle", extract_cycle(hdg, ring).edges)
