"""Cubic lattice geometry and disorder realizations (dilution + on-site energies).

Sites of the N x N x N lattice are addressed by a row-major linear index
``index = x + N*y + N**2*z``.  A disorder realization keeps exactly
``round(p * N**3)`` occupied sites (exact-count dilution, not per-site
Bernoulli) and draws one uniform on-site energy in ``[-w/2, +w/2]`` per
occupied site.  Realizations used for wavepacket dynamics are conditioned on
the central site being occupied, which requires odd N; statistics that do not
reference the center (e.g. eigenstate IPR ensembles) may sample
unconditioned realizations on any N.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class LatticeSpec:
    """Static geometry and model parameters of one system.

    Energies are measured in units of the nearest-neighbour amplitude,
    distances in units of the lattice constant (a = 1).
    """

    n_per_dim: int
    occupation: float
    disorder_width: float
    alpha: float = 3.0
    nn_amplitude: float = 1.0
    boundary: str = "open"

    def __post_init__(self):
        if self.n_per_dim < 2:
            raise DomainError(f"n_per_dim must be >= 2, got {self.n_per_dim}")
        if not self.alpha > 0:
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if not self.nn_amplitude > 0:
            raise DomainError(f"nn_amplitude must be positive, got {self.nn_amplitude}")
        if not 0.0 <= self.occupation <= 1.0:
            raise DomainError(f"occupation must lie in [0, 1], got {self.occupation}")
        if self.disorder_width < 0:
            raise DomainError(f"disorder_width must be >= 0, got {self.disorder_width}")
        if self.boundary != "open":
            raise DomainError(f"only open boundaries are supported, got {self.boundary!r}")

    @property
    def n_sites(self) -> int:
        return self.n_per_dim**3

    @property
    def n_occupied(self) -> int:
        """Exact occupied-site count of every realization."""
        return int(round(self.occupation * self.n_sites))

    @property
    def coupling_constant(self) -> float:
        """gamma = t_nn * a**alpha; equals nn_amplitude with a = 1."""
        return self.nn_amplitude

    @property
    def center_index(self) -> int:
        """Linear index of the central site; defined for odd N only."""
        n = self.n_per_dim
        if n % 2 == 0:
            raise DomainError(
                f"center site is undefined for even N (N={n}); use odd N for dynamics"
            )
        c = (n - 1) // 2
        return c + n * c + n * n * c


def site_coordinates(spec: LatticeSpec, index) -> np.ndarray:
    """Invert the row-major linear index into integer (x, y, z)."""
    n = spec.n_per_dim
    idx = np.asarray(index)
    if np.any(idx < 0) or np.any(idx >= n**3):
        raise DomainError(f"site index out of range [0, {n**3}) for N={n}")
    x = idx % n
    y = (idx // n) % n
    z = idx // (n * n)
    return np.stack([x, y, z], axis=-1)


def pair_distance(a, b) -> float:
    """Euclidean distance between two sites; open boundary, no periodic images."""
    return float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))


@dataclass(frozen=True)
class DisorderRealization:
    """One sampled dilution mask plus on-site energies.

    ``site_map`` lists the occupied linear indices in ascending order;
    ``onsite_energy[k]`` belongs to site ``site_map[k]``.  ``center_row`` is
    the position of the central site inside ``site_map`` (None when the
    realization was sampled without center conditioning).
    """

    seed: int
    occupied: np.ndarray
    site_map: np.ndarray
    onsite_energy: np.ndarray
    center_row: int | None = None
    center_index: int | None = field(default=None)

    @property
    def n_occupied(self) -> int:
        return len(self.site_map)


def sample_realization(
    spec: LatticeSpec, seed: int, condition_center: bool = True
) -> DisorderRealization:
    """Sample one disorder realization, deterministic in (spec, seed).

    The occupied subset is uniform among size-M subsets (M = round(p*N^3));
    with ``condition_center`` it is uniform among subsets containing the
    central site.  The RNG is numpy's PCG64 seeded with ``seed``.
    """
    m = spec.n_occupied
    if m == 0:
        raise DomainError("occupation too small: realization would have no sites")
    rng = np.random.Generator(np.random.PCG64(seed))
    n_sites = spec.n_sites

    if condition_center:
        center = spec.center_index
        others = np.delete(np.arange(n_sites), center)
        chosen = rng.choice(others, size=m - 1, replace=False) if m > 1 else np.empty(0, int)
        site_map = np.sort(np.append(chosen, center)).astype(np.int64)
    else:
        center = None
        site_map = np.sort(rng.choice(n_sites, size=m, replace=False)).astype(np.int64)

    occupied = np.zeros(n_sites, dtype=bool)
    occupied[site_map] = True
    half = spec.disorder_width / 2.0
    energy = rng.uniform(-half, half, size=m) if half > 0 else np.zeros(m)
    center_row = int(np.searchsorted(site_map, center)) if center is not None else None
    return DisorderRealization(
        seed=int(seed),
        occupied=occupied,
        site_map=site_map,
        onsite_energy=energy,
        center_row=center_row,
        center_index=center,
    )


def occupied_positions(spec: LatticeSpec, real: DisorderRealization) -> np.ndarray:
    """Integer coordinates of the occupied sites, in site_map order."""
    return site_coordinates(spec, real.site_map).astype(float)
