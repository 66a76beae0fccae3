"""Inverse analysis: from Ridge coefficients back to the atoms that carry them."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .descriptor import GridSpec
from .errors import ConfigurationError, ParameterError, ShapeError
from .filtration import Convention
from .geometry import PeriodicStructure, bond_angle, minimum_image_distance
from .persistence import DEFAULT_CYCLE_BUDGET, extract_cycle

HIGH_THRESHOLD = 0.003
LOW_THRESHOLD = -0.0045
BOND_BIN_WIDTH = 0.05
ANGLE_BIN_WIDTH = 5.0
BOND_SCOPES = ("cycle", "induced")


@dataclass(eq=False)
class CoefficientMap:
    grid: np.ndarray
    spec: GridSpec

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        if self.grid.shape != self.spec.shape:
            raise ShapeError(f"coefficient grid {self.grid.shape} does not match spec {self.spec.shape}")
        if not np.all(np.isfinite(self.grid)):
            raise ShapeError("coefficient map has non-finite entries")

    def flatten(self) -> np.ndarray:
        return self.grid.reshape(-1)


def coefficient_map(model) -> CoefficientMap:
    """Ridge weights laid out on the (birth row, death column) histogram mesh."""
    return CoefficientMap(model.weights.reshape(model.spec.shape).copy(), model.spec)


def select_regions(cmap: CoefficientMap, hi_threshold=HIGH_THRESHOLD, lo_threshold=LOW_THRESHOLD):
    """``(high, low)`` sets of ``(row, col)`` bins with coefficient above / below the thresholds."""
    if not hi_threshold > 0 > lo_threshold:
        raise ParameterError(f"need hi_threshold > 0 > lo_threshold, got {hi_threshold}, {lo_threshold}")
    high = {(int(r), int(c)) for r, c in zip(*np.nonzero(cmap.grid > hi_threshold))}
    low = {(int(r), int(c)) for r, c in zip(*np.nonzero(cmap.grid < lo_threshold))}
    return high, low


@dataclass
class CycleRecord:
    region: str
    birth: float
    death: float
    bin: tuple
    edges: list
    bond_lengths: list
    bond_angles: list
    extraction: str
    structure_id: str = ""


@dataclass
class CycleReport:
    cycles: list = field(default_factory=list)

    def values(self, region, what):
        """All raw ``bond_lengths`` or ``bond_angles`` of one region, concatenated."""
        out = []
        for c in self.cycles:
            if c.region == region:
                out.extend(getattr(c, what))
        return out

    def extend(self, other: "CycleReport") -> "CycleReport":
        self.cycles.extend(other.cycles)
        return self

    @classmethod
    def merge(cls, reports) -> "CycleReport":
        out = cls()
        for r in reports:
            out.extend(r)
        return out

    def atom_regions(self, n_atoms, structure_id=None):
        """Per-atom tag: ``none``, ``high``, ``low`` or ``both``."""
        tags = [set() for _ in range(n_atoms)]
        for c in self.cycles:
            if structure_id is not None and c.structure_id != structure_id:
                continue
            for i, j in c.edges:
                tags[i].add(c.region)
                tags[j].add(c.region)
        return ["both" if len(t) > 1 else (next(iter(t)) if t else "none") for t in tags]

    def to_dict(self):
        return {"cycles": [c.__dict__ | {"bin": list(c.bin), "edges": [list(e) for e in c.edges]}
                           for c in self.cycles]}


def induced_bonds(edges, structure: PeriodicStructure, max_length):
    """All atom pairs on the cycle no longer than ``max_length``, cycle edges included."""
    atoms = sorted({v for e in edges for v in e})
    pos, cell = structure.positions, structure.cell
    out = []
    for a in range(len(atoms)):
        for b in range(a + 1, len(atoms)):
            i, j = atoms[a], atoms[b]
            if (i, j) in edges or (j, i) in edges or minimum_image_distance(pos[i], pos[j], cell) <= max_length:
                out.append((i, j))
    return out


def cycle_angles(edges, structure: PeriodicStructure):
    """Angle at each cycle vertex between every two cycle edges meeting there."""
    incident = defaultdict(list)
    for i, j in edges:
        incident[i].append(j)
        incident[j].append(i)
    pos, cell = structure.positions, structure.cell
    angles = []
    for v in sorted(incident):
        nb = incident[v]
        for a in range(len(nb)):
            for b in range(a + 1, len(nb)):
                angles.append(bond_angle(pos[nb[a]], pos[v], pos[nb[b]], cell))
    return angles


def assign_cycles(structure: PeriodicStructure, diagram, regions, spec: GridSpec, convention=None,
                  tighten=True, budget=DEFAULT_CYCLE_BUDGET, bond_scope="cycle") -> CycleReport:
    """Cycles of the finite H1 pairs whose histogram bin lies in a selected region.

    ``regions`` is the ``(high, low)`` pair from :func:`select_regions`.
    ``convention``, when given, must match the one the diagram was built with.
    With ``bond_scope="cycle"`` bond lengths and angles come from the cycle
    edges only; ``"induced"`` also counts every pair of cycle atoms already
    joined when the loop is born (length up to the birth edge).
    """
    if bond_scope not in BOND_SCOPES:
        raise ParameterError(f"bond_scope must be one of {BOND_SCOPES}, got {bond_scope!r}")
    if convention is not None and Convention.parse(convention) != diagram.convention:
        raise ConfigurationError(f"diagram convention {diagram.convention.value} does not match "
                                 f"model convention {Convention.parse(convention).value}")
    high, low = regions
    report = CycleReport()
    if not high and not low:
        return report
    pos, cell = structure.positions, structure.cell
    for p in diagram.pairs:
        if p.dim != 1 or p.essential or p.zero_persistence:
            continue
        r, c = int(spec.bin_index(p.birth)), int(spec.bin_index(p.death))
        if r < 0 or c < 0:
            continue
        if (r, c) in high:
            region = "high"
        elif (r, c) in low:
            region = "low"
        else:
            continue
        ext = extract_cycle(diagram, p, tighten=tighten, budget=budget)
        bonds = ext.edges
        if bond_scope == "induced":
            bonds = induced_bonds(ext.edges, structure, float(diagram.convention.length(p.birth)) + 1e-9)
        lengths = [minimum_image_distance(pos[i], pos[j], cell) for i, j in bonds]
        report.cycles.append(CycleRecord(region, p.birth, p.death, (r, c), ext.edges, lengths,
                                         cycle_angles(bonds, structure), ext.method, structure.id))
    return report


@dataclass
class Histogram1D:
    edges: np.ndarray
    counts: np.ndarray
    empty: bool

    @property
    def peak(self) -> float:
        """Left edge of the most populated bin."""
        return float(self.edges[int(np.argmax(self.counts))])


def _hist1d(values, width, top=None):
    """Counts on bins ``[k*width, (k+1)*width)``; a fixed ``top`` closes the last bin."""
    values = np.asarray(values, dtype=float)
    if top is None:
        top_val = float(values.max()) if values.size else 0.0
        nbins = int(np.floor(np.round(top_val / width, 9))) + 1
    else:
        nbins = int(np.ceil(np.round(top / width, 9)))
    edges = np.arange(nbins + 1) * width
    counts = np.zeros(nbins, dtype=np.int64)
    if values.size:
        idx = np.floor(np.round(values / width, 9)).astype(np.int64)
        np.add.at(counts, np.clip(idx, 0, nbins - 1), 1)
    return Histogram1D(edges, counts, values.size == 0)


def geometry_histograms(report: CycleReport, bond_bin_width=BOND_BIN_WIDTH, angle_bin_width=ANGLE_BIN_WIDTH):
    """Bond-length and bond-angle count histograms per region, bins starting at 0.

    Returns ``{"bonds": {"high": h, "low": h}, "angles": {...}}``.
    """
    if bond_bin_width <= 0 or angle_bin_width <= 0:
        raise ParameterError("bin widths must be positive")
    out = {"bonds": {}, "angles": {}}
    for region in ("high", "low"):
        out["bonds"][region] = _hist1d(report.values(region, "bond_lengths"), bond_bin_width)
        out["angles"][region] = _hist1d(report.values(region, "bond_angles"), angle_bin_width, 180.0)
    return out
