"""Persistent-homology descriptors for machine-learning energy models of amorphous structures.

Periodic structure -> Rips filtration -> H1 persistence diagram -> normalized
128x128 histogram -> Ridge regression, with inverse analysis back to cycles.
"""

from .descriptor import GridSpec, fit_standardization, histogram, standardize
from .filtration import Convention, build_rips
from .geometry import PeriodicStructure, minimum_image_distance, wrap
from .model import fit_pca, fit_ridge, predict, rmse
from .persistence import compute_diagram, reduce, representative_cycle

__version__ = "0.1.0"

__all__ = [
    "Convention", "GridSpec", "PeriodicStructure", "build_rips", "compute_diagram", "fit_pca", "fit_ridge",
    "fit_standardization", "histogram", "minimum_image_distance", "predict", "reduce", "representative_cycle",
    "rmse", "standardize", "wrap",
]
