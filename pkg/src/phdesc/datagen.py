"""Synthetic labeled structures: cubic lattices, perturbed lattices and Monte Carlo quenches.

Labels are Lennard-Jones energies per atom. They stand in for ab initio
energies so that the descriptor and regression pipeline can be exercised end
to end without DFT.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, InfeasibleError, ParameterError
from .geometry import PeriodicStructure, cell_length_for_density, check_cutoff, neighbor_pairs, wrap

PAPER_DENSITIES = (1.5, 1.7, 2.0, 2.2, 2.4, 2.6, 2.8, 3.0, 3.2, 3.4, 3.5)
KINDS = ("lattice", "perturbed_lattice", "mc_quench")
DEFAULT_SCHEDULE = ((1.0, 20), (0.5, 20), (0.2, 20), (0.05, 20))


@dataclass(frozen=True)
class PairPotential:
    """Truncated and shifted Lennard-Jones 12-6; energies in eV, lengths in Angstrom.

    The default ``sigma_lj`` puts the pair minimum at about 1.54 A.
    """

    epsilon: float = 1.0
    sigma_lj: float = 1.372
    cutoff: float = 3.5

    def __post_init__(self):
        if self.epsilon <= 0 or self.sigma_lj <= 0 or self.cutoff <= 0:
            raise ParameterError("epsilon, sigma_lj and cutoff must be positive")

    def raw(self, r):
        sr6 = (self.sigma_lj / np.asarray(r, dtype=float)) ** 6
        return 4.0 * self.epsilon * (sr6 * sr6 - sr6)

    @property
    def shift(self) -> float:
        return float(self.raw(self.cutoff))

    def __call__(self, r):
        """Shifted pair energy, zero at and beyond the cutoff."""
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            v = self.raw(r) - self.shift
        return np.where(r < self.cutoff, v, 0.0)

    @property
    def r_min(self) -> float:
        return 2.0 ** (1.0 / 6.0) * self.sigma_lj


@dataclass(frozen=True)
class GeneratorConfig:
    kind: str = "lattice"
    n_atoms: int = 216
    density: float = 2.0
    sigma: float = 0.0
    schedule: tuple = DEFAULT_SCHEDULE
    seed: int = 0
    potential: PairPotential = field(default_factory=PairPotential)
    target_acceptance: float = 0.4

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown generator kind {self.kind!r}; expected one of {KINDS}")
        if self.n_atoms < 1:
            raise ParameterError("n_atoms must be >= 1")
        if not self.density > 0:
            raise ParameterError("density must be > 0")
        if self.sigma < 0:
            raise ParameterError("sigma must be >= 0")
        if any(t <= 0 or s < 0 for t, s in self.schedule):
            raise ParameterError("schedule temperatures must be > 0 and sweep counts >= 0")


def energy_per_atom(structure: PeriodicStructure, potential: PairPotential = PairPotential()) -> float:
    """Mean pair energy per atom over minimum-image pairs within the potential cutoff."""
    try:
        check_cutoff(structure, potential.cutoff)
    except ConfigurationError as exc:
        raise ConfigurationError(f"potential cutoff violates the minimum-image bound: {exc}") from None
    if structure.n_atoms < 2:
        return 0.0
    _, _, d = neighbor_pairs(structure, potential.cutoff)
    return float(np.sum(potential(d)) / structure.n_atoms)


def lattice_sites(n_atoms, length, rng=None):
    """Sites of the smallest ``k**3`` simple cubic lattice holding ``n_atoms``.

    When ``n_atoms`` is not a cube, a seeded random subset of sites is kept
    (the rest are vacancies).
    """
    k = round(n_atoms ** (1.0 / 3.0))
    if k ** 3 < n_atoms:
        k += 1
    spacing = length / k
    if spacing < 0.5:
        raise InfeasibleError(f"lattice spacing {spacing:.3g} A < 0.5 A; density too high for {n_atoms} atoms")
    g = np.arange(k) * spacing
    sites = np.stack(np.meshgrid(g, g, g, indexing="ij"), axis=-1).reshape(-1, 3)
    if len(sites) > n_atoms:
        rng = rng if rng is not None else np.random.default_rng(0)
        sites = sites[np.sort(rng.choice(len(sites), n_atoms, replace=False))]
    return sites, spacing


def _structure_id(config):
    return f"{config.kind}-n{config.n_atoms}-rho{config.density:g}-s{config.seed}"


def _initial(config, rng):
    length = cell_length_for_density(config.n_atoms, config.density)
    sites, _ = lattice_sites(config.n_atoms, length, rng)
    pos = sites
    if config.kind in ("perturbed_lattice", "mc_quench") and config.sigma > 0:
        pos = sites + rng.normal(0.0, config.sigma, sites.shape)
    s = PeriodicStructure(pos, [length] * 3, id=_structure_id(config))
    check_cutoff(s, config.potential.cutoff)
    return wrap(s)


def _info(config, **extra):
    info = {"kind": config.kind, "density": config.density, "seed": config.seed}
    info.update(extra)
    return info


def generate(config: GeneratorConfig) -> PeriodicStructure:
    """One labeled, wrapped structure; identical seeds give identical output."""
    if config.kind == "mc_quench":
        return mc_quench(config)[-1]
    rng = np.random.default_rng(config.seed)
    s = _initial(config, rng)
    return s.replace(label=energy_per_atom(s, config.potential), info=_info(config))


def mc_quench(config: GeneratorConfig, snapshot_every: int = 0):
    """Metropolis cooling through ``config.schedule``.

    Temperatures are ``k_B T`` in eV. Single-atom moves are uniform in a cube
    whose edge adapts after every sweep toward the target acceptance rate.
    Returns snapshots taken every ``snapshot_every`` sweeps (0: at the end of
    each schedule stage), the final structure last.
    """
    rng = np.random.default_rng(config.seed)
    s = _initial(config, rng)
    pot = config.potential
    cell = s.cell
    pos = np.array(s.positions)
    n = len(pos)
    step = 0.1
    snapshots = []
    sweep = 0

    def snapshot(stage_t):
        w = wrap(PeriodicStructure(pos, cell, id=f"{s.id}-t{len(snapshots)}"))
        snapshots.append(w.replace(label=energy_per_atom(w, pot), info=_info(config, temperature=stage_t, sweep=sweep)))

    for temperature, sweeps in config.schedule:
        for _ in range(sweeps):
            accepted = 0
            for _ in range(n):
                i = int(rng.integers(n))
                trial = pos[i] + rng.uniform(-step, step, 3)
                d_old = pos - pos[i]
                d_old -= cell * np.round(d_old / cell)
                d_new = pos - trial
                d_new -= cell * np.round(d_new / cell)
                r_old = np.sqrt(np.einsum("ij,ij->i", d_old, d_old))
                r_new = np.sqrt(np.einsum("ij,ij->i", d_new, d_new))
                r_old[i] = r_new[i] = np.inf
                de = float(np.sum(pot(r_new)) - np.sum(pot(r_old)))
                u = rng.random()
                if de <= 0 or u < math.exp(-de / temperature):
                    pos[i] = np.mod(trial, cell)
                    accepted += 1
            rate = accepted / n
            step *= 1.1 if rate > config.target_acceptance else 0.9
            step = min(max(step, 1e-3), float(cell.min()) / 4)
            sweep += 1
            if snapshot_every and sweep % snapshot_every == 0:
                snapshot(temperature)
        if not snapshot_every:
            snapshot(temperature)
    if not snapshots:
        snapshot(config.schedule[-1][0] if config.schedule else math.nan)
    final = snapshots[-1]
    snapshots[-1] = final.replace(id=s.id)
    return snapshots


def mean_nearest_neighbor_distance(structure: PeriodicStructure) -> float:
    from .geometry import MetricView

    m = np.array(MetricView(structure).matrix())
    np.fill_diagonal(m, np.inf)
    return float(m.min(axis=1).mean())


def dataset_configs(n_structures, n_atoms=64, seed=0, kinds=("perturbed_lattice", "mc_quench"),
                    densities=PAPER_DENSITIES, sigma_range=(0.02, 0.18), final_temperatures=(0.05, 0.1, 0.2, 0.4, 0.8)):
    """Configs cycling over densities and kinds with per-structure seeds ``seed + index``.

    Perturbed lattices draw ``sigma`` from ``sigma_range``; quenches cool from
    1.0 eV to one of ``final_temperatures``, giving a spread of disorder at every
    density.
    """
    rng = np.random.default_rng(seed)
    out = []
    for idx in range(n_structures):
        kind = kinds[idx % len(kinds)]
        density = densities[(idx // len(kinds)) % len(densities)]
        cfg = GeneratorConfig(kind=kind, n_atoms=n_atoms, density=density, seed=seed + idx)
        if kind == "perturbed_lattice":
            cfg = replace(cfg, sigma=float(rng.uniform(*sigma_range)))
        elif kind == "mc_quench":
            t_end = float(final_temperatures[rng.integers(len(final_temperatures))])
            cfg = replace(cfg, sigma=0.05, schedule=((1.0, 10), ((1.0 + t_end) / 2, 10), (t_end, 10)))
        out.append(cfg)
    return out
