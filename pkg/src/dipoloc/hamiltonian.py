"""Dense single-particle Hamiltonian on the occupied sites and its spectrum.

The matrix lives on the occupied (P) subset only: diagonal entries are the
on-site energies, off-diagonal entries gamma / r^alpha for every occupied
pair, with no distance cutoff.  Everything is real symmetric, so the full
spectral decomposition is obtained with a dense symmetric eigensolver
(LAPACK via scipy).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DomainError, NumericError
from .lattice import DisorderRealization, LatticeSpec, occupied_positions

_BLOCK_ROWS = 2048  # limits the temporary distance blocks to ~0.5 GB at M ~ 30k


@dataclass(frozen=True)
class HamiltonianMatrix:
    """Real symmetric Hamiltonian restricted to the occupied sites."""

    entries: np.ndarray
    site_map: np.ndarray
    seed: int

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class SpectralDecomposition:
    """Full eigensystem; eigenvalues ascending, eigenvectors in columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    site_map: np.ndarray
    seed: int

    @property
    def dimension(self) -> int:
        return len(self.eigenvalues)


def build(spec: LatticeSpec, real: DisorderRealization) -> HamiltonianMatrix:
    """Assemble the dense Hamiltonian of one realization."""
    m = real.n_occupied
    if m == 0:
        raise DomainError("empty realization: Hamiltonian has dimension 0")
    pos = occupied_positions(spec, real)
    gamma = spec.coupling_constant
    h = np.empty((m, m), dtype=np.float64)
    for start in range(0, m, _BLOCK_ROWS):
        stop = min(start + _BLOCK_ROWS, m)
        diff = pos[start:stop, None, :] - pos[None, :, :]
        r2 = np.einsum("ijk,ijk->ij", diff, diff)
        with np.errstate(divide="ignore"):
            h[start:stop] = gamma * r2 ** (-spec.alpha / 2.0)
    idx = np.arange(m)
    h[idx, idx] = real.onsite_energy
    # enforce exact symmetry without large temporaries
    for i in range(m - 1):
        h[i + 1 :, i] = h[i, i + 1 :]
    return HamiltonianMatrix(entries=h, site_map=real.site_map, seed=real.seed)


def decompose(ham: HamiltonianMatrix) -> SpectralDecomposition:
    """Full symmetric eigendecomposition, eigenvalues sorted ascending."""
    try:
        evals, evecs = scipy.linalg.eigh(ham.entries, check_finite=False)
    except Exception as exc:  # pragma: no cover - LAPACK failures are rare
        raise NumericError(f"eigensolver failed: {exc}", seed=ham.seed) from exc
    return SpectralDecomposition(
        eigenvalues=evals, eigenvectors=evecs, site_map=ham.site_map, seed=ham.seed
    )


def heisenberg_time(dec: SpectralDecomposition) -> float:
    """2*pi over the mean nearest-neighbour level spacing of the full spectrum."""
    m = dec.dimension
    if m < 2:
        raise DomainError("Heisenberg time needs at least 2 levels")
    width = dec.eigenvalues[-1] - dec.eigenvalues[0]
    if width <= 0:
        raise DomainError("degenerate spectrum: zero spectral width")
    return 2.0 * np.pi * (m - 1) / width


_MAGIC = b"DPLC"
_VERSION = 1


def save_decomposition(path, spec: LatticeSpec, dec: SpectralDecomposition) -> None:
    """Checkpoint one decomposition: versioned header, then little-endian
    float64 eigenvalues followed by the eigenvector matrix column-major."""
    m = dec.dimension
    header = struct.pack(
        "<4sIIddQQ",
        _MAGIC,
        _VERSION,
        spec.n_per_dim,
        spec.occupation,
        spec.disorder_width,
        dec.seed,
        m,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(dec.eigenvalues.astype("<f8").tobytes())
        fh.write(np.asfortranarray(dec.eigenvectors.astype("<f8")).tobytes(order="F"))
        fh.write(dec.site_map.astype("<i8").tobytes())


def load_decomposition(path):
    """Read a checkpoint written by save_decomposition.

    Returns (header_dict, SpectralDecomposition).
    """
    hdr_size = struct.calcsize("<4sIIddQQ")
    with open(path, "rb") as fh:
        raw = fh.read(hdr_size)
        magic, version, n, p, w, seed, m = struct.unpack("<4sIIddQQ", raw)
        if magic != _MAGIC:
            raise DomainError(f"bad checkpoint magic {magic!r}")
        if version != _VERSION:
            raise DomainError(f"unsupported checkpoint version {version}")
        evals = np.frombuffer(fh.read(8 * m), dtype="<f8").copy()
        evecs = np.frombuffer(fh.read(8 * m * m), dtype="<f8").copy()
        evecs = evecs.reshape((m, m), order="F")
        site_map = np.frombuffer(fh.read(8 * m), dtype="<i8").copy()
    header = {"n_per_dim": n, "occupation": p, "disorder_width": w, "seed": seed, "dimension": m}
    dec = SpectralDecomposition(
        eigenvalues=evals, eigenvectors=evecs, site_map=site_map, seed=seed
    )
    return header, dec
