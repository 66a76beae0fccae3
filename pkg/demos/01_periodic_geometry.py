"""Distances and angles in a periodic box."""
import numpy as np

from phdesc import PeriodicStructure, minimum_image_distance, wrap
from phdesc.geometry import MetricView, bond_angle, neighbor_pairs

cell = [10.0, 10.0, 10.0]

# Two atoms near opposite faces are close through the boundary
print(minimum_image_distance((1, 0, 0), (9, 0, 0), cell))  # 2.0

# The farthest any two atoms can be is half the box diagonal
print(minimum_image_distance((0, 0, 0), (5, 5, 5), cell))  # sqrt(75)

# Coordinates outside the box are folded back in; distances do not change
s = PeriodicStructure([[11.0, -1.0, 5.0], [3.0, 3.0, 3.0]], cell)
w = wrap(s)
print(w.positions)
print(MetricView(s).matrix() - MetricView(w).matrix())

# Angles also use the nearest image of each neighbor
print(bond_angle((9, 0, 0), (0, 0, 0), (0, 9, 0), cell))  # 90 degrees

# Neighbor lists come from a periodic k-d tree
rng = np.random.default_rng(0)
gas = PeriodicStructure(rng.uniform(0, 10, (200, 3)), cell)
i, j, d = neighbor_pairs(gas, 2.0)
print(f"{len(d)} pairs within 2 A, mean distance {d.mean():.3f} A")
