import numpy as np
import pytest

from dipoloc import LatticeSpec, sample_realization, build, decompose
from dipoloc.lattice import DisorderRealization


@pytest.fixture
def two_site_clean():
    """Two occupied nearest-neighbour sites on an N=5 lattice, w = 0."""
    spec = LatticeSpec(n_per_dim=5, occupation=2 / 125, disorder_width=0.0)
    site_map = np.array([62, 63])  # center and its +x neighbour
    occ = np.zeros(125, dtype=bool)
    occ[site_map] = True
    real = DisorderRealization(
        seed=0,
        occupied=occ,
        site_map=site_map,
        onsite_energy=np.zeros(2),
        center_row=0,
        center_index=62,
    )
    return spec, real


def six_site_case(seed, w=10.0):
    """Random 6-site realization on an N=5 lattice."""
    spec = LatticeSpec(n_per_dim=5, occupation=6 / 125, disorder_width=w)
    real = sample_realization(spec, seed)
    ham = build(spec, real)
    return spec, real, ham


@pytest.fixture
def six_site():
    return six_site_case(seed=123)
