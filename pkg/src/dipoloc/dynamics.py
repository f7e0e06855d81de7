"""Wavepacket propagation in the eigenbasis, plus verification oracles.

propagate() evaluates psi_i(t) = sum_k phi_k(i) exp(-i E_k t) phi_k(i0)
exactly in the eigenbasis; the phases are reduced modulo 2*pi with
compensated arithmetic so that times up to 1e17 (in units of the inverse
nearest-neighbour amplitude) remain meaningful.  direct_integrate_oracle()
integrates the Schroedinger equation with an adaptive high-order ODE solver
and is used only to cross-check propagate() on small systems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, NumericError
from .hamiltonian import HamiltonianMatrix, SpectralDecomposition
from .phases import phase_mod_2pi

ORACLE_TIME_LIMIT = 1e3


@dataclass(frozen=True)
class Wavepacket:
    """State over the occupied sites at one time; unit norm."""

    amplitudes: np.ndarray
    time: float
    initial_index: int

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def propagate(dec: SpectralDecomposition, initial: int, t: float) -> Wavepacket:
    """Exact eigenbasis propagation of a site-localized initial state."""
    if t < 0:
        raise DomainError(f"time must be >= 0, got {t}")
    if not 0 <= initial < dec.dimension:
        raise DomainError(f"initial row {initial} out of range for M={dec.dimension}")
    v = dec.eigenvectors
    c0 = v[initial, :]
    phase = phase_mod_2pi(dec.eigenvalues, t)
    psi = v @ (np.exp(-1j * phase) * c0)
    return Wavepacket(amplitudes=psi, time=float(t), initial_index=int(initial))


def propagate_density(dec: SpectralDecomposition, initial: int, t: float) -> np.ndarray:
    """Per-site probability density of the propagated state."""
    return propagate(dec, initial, t).density


def direct_integrate_oracle(ham: HamiltonianMatrix, initial: int, t: float) -> Wavepacket:
    """Brute-force integration of i dpsi/dt = H psi (verification oracle only)."""
    if t < 0:
        raise DomainError(f"time must be >= 0, got {t}")
    if t > ORACLE_TIME_LIMIT:
        raise DomainError(
            f"oracle integration limited to t <= {ORACLE_TIME_LIMIT:g}, got {t:g}"
        )
    m = ham.dimension
    if not 0 <= initial < m:
        raise DomainError(f"initial row {initial} out of range for M={m}")
    psi0 = np.zeros(m, dtype=complex)
    psi0[initial] = 1.0
    if t == 0:
        return Wavepacket(amplitudes=psi0, time=0.0, initial_index=int(initial))
    h = ham.entries

    def rhs(_t, y):
        return -1j * (h @ y)

    sol = solve_ivp(rhs, (0.0, t), psi0, method="DOP853", rtol=1e-11, atol=1e-13)
    if not sol.success:
        raise NumericError(f"ODE oracle failed: {sol.message}", seed=ham.seed)
    psi = sol.y[:, -1]
    drift = abs(np.linalg.norm(psi) - 1.0)
    if drift > 1e-9:
        raise NumericError(f"ODE oracle norm drift {drift:.2e} exceeds 1e-9", seed=ham.seed)
    return Wavepacket(amplitudes=psi, time=float(t), initial_index=int(initial))


@dataclass(frozen=True)
class InfiniteTimeAverage:
    """Diagonal-ensemble mean densities; flagged when near-degeneracies make
    the cross terms non-negligible."""

    density: np.ndarray
    near_degenerate: bool


def infinite_time_average(dec: SpectralDecomposition, initial: int) -> InfiniteTimeAverage:
    """Diagonal-ensemble density: n_i = sum_k |phi_k(i)|^2 |phi_k(i0)|^2."""
    if not 0 <= initial < dec.dimension:
        raise DomainError(f"initial row {initial} out of range for M={dec.dimension}")
    gaps = np.diff(dec.eigenvalues)
    near_degenerate = bool(dec.dimension > 1 and np.min(gaps) <= 1e-12)
    v2 = dec.eigenvectors**2
    density = v2 @ v2[initial, :]
    return InfiniteTimeAverage(density=density, near_degenerate=near_degenerate)


def default_time_grid(t_min: float = 1e-1, t_max: float = 1e17, points: int = 60) -> np.ndarray:
    """Logarithmically spaced time grid used for L(t) curves."""
    if not (t_min > 0 and t_max > t_min and points >= 2):
        raise DomainError("time grid needs 0 < t_min < t_max and >= 2 points")
    return np.logspace(np.log10(t_min), np.log10(t_max), points)
