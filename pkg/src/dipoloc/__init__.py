"""Single-particle localization on finite 3D diluted lattices with dipolar hopping.

Core pipeline: sample a diluted disordered lattice, build the dense
single-particle Hamiltonian with 1/r^alpha hopping, diagonalize it, and
propagate a site-localized wavepacket out to extreme times.  Observables
(wavepacket size, inverse participation ratios, shell-resolved log-amplitude
statistics) are aggregated over disorder ensembles, and a resonance-counting
model predicts how the localization-diffusion crossover moves with lattice
size.
"""

__version__ = "0.1.0"

RNG_ID = "numpy.random.PCG64"

from .errors import DomainError, NumericError, UnconvergedError
from .lattice import LatticeSpec, DisorderRealization, sample_realization
from .hamiltonian import HamiltonianMatrix, SpectralDecomposition, build, decompose

__all__ = [
    "DomainError",
    "NumericError",
    "UnconvergedError",
    "LatticeSpec",
    "DisorderRealization",
    "sample_realization",
    "HamiltonianMatrix",
    "SpectralDecomposition",
    "build",
    "decompose",
    "RNG_ID",
    "__version__",
]
