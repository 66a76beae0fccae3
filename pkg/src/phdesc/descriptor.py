"""Persistence diagrams -> normalized, standardized 2D histograms."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError

log = logging.getLogger(__name__)

STD_FLOOR = 1e-12


@dataclass(frozen=True)
class GridSpec:
    """Square birth x death mesh; both axes share ``bins`` and ``window``."""

    bins: int = 128
    lo: float = 0.0
    hi: float = 8.0

    def __post_init__(self):
        if int(self.bins) != self.bins or self.bins < 1:
            raise ParameterError(f"bins must be a positive integer, got {self.bins}")
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or self.hi <= self.lo:
            raise ParameterError(f"window must satisfy lo < hi, got [{self.lo}, {self.hi}]")
        object.__setattr__(self, "bins", int(self.bins))
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.bins

    @property
    def shape(self):
        return (self.bins, self.bins)

    def bin_index(self, values):
        """Bin of each value, or -1 outside ``[lo, hi]``; ``hi`` itself maps to the last bin."""
        v = np.asarray(values, dtype=float)
        idx = np.floor((v - self.lo) / self.width).astype(np.int64)
        idx = np.where(v == self.hi, self.bins - 1, idx)
        inside = (v >= self.lo) & (v <= self.hi) & (idx >= 0) & (idx < self.bins)
        return np.where(inside, idx, -1)

    def edges(self):
        return np.linspace(self.lo, self.hi, self.bins + 1)


@dataclass(eq=False)
class DescriptorHistogram:
    """``grid[row, col]`` counts pairs with birth in bin ``row`` and death in bin ``col``."""

    grid: np.ndarray
    spec: GridSpec
    normalized: bool = False
    standardized: bool = False
    in_window: int = 0
    dropped: int = 0
    empty: bool = False

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        if self.grid.shape != self.spec.shape:
            raise ShapeError(f"grid shape {self.grid.shape} does not match spec {self.spec.shape}")

    @property
    def vector(self) -> np.ndarray:
        return self.grid.reshape(-1)


@dataclass(eq=False)
class StandardizationStats:
    mean: np.ndarray
    std: np.ndarray
    spec: GridSpec
    epsilon: float = STD_FLOOR

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.std = np.asarray(self.std, dtype=float)
        if self.mean.shape != self.spec.shape or self.std.shape != self.spec.shape:
            raise ShapeError("standardization stats do not match their grid spec")
        if np.any(self.std < self.epsilon):
            raise ParameterError("std entries must be >= epsilon")


def histogram(diagram, spec: GridSpec = GridSpec(), dims=(1,), normalize=True) -> DescriptorHistogram:
    """Bin the finite, nonzero-persistence pairs of ``diagram`` in dimensions ``dims``.

    Essential pairs are skipped; pairs outside the window are dropped and
    counted in ``dropped``. With ``normalize`` the grid sums to one (or stays
    all zero, with ``empty`` set, when nothing fell inside the window).
    """
    rows = [(p.birth, p.death) for p in diagram.pairs
            if p.dim in dims and not p.essential and not p.zero_persistence]
    bd = np.array(rows, dtype=float).reshape(-1, 2)
    r, c = spec.bin_index(bd[:, 0]), spec.bin_index(bd[:, 1])
    ok = (r >= 0) & (c >= 0)
    grid = np.zeros(spec.shape)
    np.add.at(grid, (r[ok], c[ok]), 1.0)
    total = int(ok.sum())
    dropped = len(bd) - total
    if dropped:
        log.info("%s: %d pair(s) outside [%g, %g] dropped", diagram.structure_id or "diagram",
                 dropped, spec.lo, spec.hi)
    empty = total == 0
    if empty:
        log.warning("%s: no pairs inside the histogram window", diagram.structure_id or "diagram")
    elif normalize:
        grid /= total
    return DescriptorHistogram(grid, spec, normalized=normalize, in_window=total, dropped=dropped, empty=empty)


def histogram_channels(diagram, spec: GridSpec = GridSpec(), dims=(1, 0)):
    """One normalized histogram per homology dimension, e.g. H1 plus an H0 channel."""
    return [histogram(diagram, spec, dims=(d,)) for d in dims]


def _stack(histograms):
    if not histograms:
        raise ShapeError("no histograms given")
    spec = histograms[0].spec
    for h in histograms:
        if h.spec != spec:
            raise ShapeError(f"mixed grid specs: {spec} vs {h.spec}")
    return spec, np.stack([h.grid for h in histograms])


def fit_standardization(histograms) -> StandardizationStats:
    """Per-bin mean and population std over a training set, std floored at 1e-12."""
    if len(histograms) < 2:
        raise ParameterError("standardization needs at least 2 histograms")
    spec, x = _stack(histograms)
    if not all(h.normalized and not h.standardized for h in histograms):
        raise ParameterError("standardization statistics must be fit on normalized, unstandardized histograms")
    mean = x.mean(axis=0)
    std = np.sqrt(((x - mean) ** 2).mean(axis=0))
    return StandardizationStats(mean, np.maximum(std, STD_FLOOR), spec)


def standardize(hist: DescriptorHistogram, stats: StandardizationStats) -> DescriptorHistogram:
    if hist.spec != stats.spec:
        raise ShapeError(f"histogram spec {hist.spec} does not match stats spec {stats.spec}")
    if hist.standardized:
        raise ParameterError("histogram is already standardized")
    z = (hist.grid - stats.mean) / stats.std
    return DescriptorHistogram(z, hist.spec, normalized=hist.normalized, standardized=True,
                               in_window=hist.in_window, dropped=hist.dropped, empty=hist.empty)


def destandardize(hist: DescriptorHistogram, stats: StandardizationStats) -> DescriptorHistogram:
    if hist.spec != stats.spec:
        raise ShapeError(f"histogram spec {hist.spec} does not match stats spec {stats.spec}")
    x = hist.grid * stats.std + stats.mean
    return DescriptorHistogram(x, hist.spec, normalized=hist.normalized, standardized=False,
                               in_window=hist.in_window, dropped=hist.dropped, empty=hist.empty)


def feature_matrix(histograms) -> np.ndarray:
    """Stack histograms into an ``(n_samples, bins*bins)`` design matrix."""
    _, x = _stack(histograms)
    return x.reshape(len(histograms), -1)
