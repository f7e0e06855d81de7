"""Observables: wavepacket size, IPR statistics, log-amplitude shell data,
and the log-normal collapse fit for the localization length.

All functions are pure; ensemble pooling of shell samples is a plain
concatenation keyed by shell radius, so it can be merged in any order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import DomainError, NumericError
from .hamiltonian import SpectralDecomposition
from .lattice import LatticeSpec

DENSITY_FLOOR = 1e-300


def wavepacket_size(density, positions, center, coverage: float = 0.9) -> float:
    """Diameter of the smallest sphere around `center` holding >= `coverage`
    of the probability.  Sites are scanned in order of distance."""
    density = np.asarray(density, dtype=float)
    if not 0.0 < coverage < 1.0:
        raise DomainError(f"coverage must lie in (0, 1), got {coverage}")
    total = density.sum()
    if abs(total - 1.0) > 1e-6:
        raise DomainError(f"density must sum to 1 within 1e-6, got {total}")
    dist = np.linalg.norm(np.asarray(positions, dtype=float) - np.asarray(center, dtype=float), axis=1)
    order = np.argsort(dist, kind="stable")
    csum = np.cumsum(density[order])
    hit = np.searchsorted(csum, coverage - 1e-12)
    assert hit < len(csum), "coverage unreachable although density sums to 1"
    return 2.0 * float(dist[order][hit])


def ipr(state) -> float:
    """Inverse participation ratio sum_i |psi_i|^4 of a normalized state."""
    amps = np.asarray(state)
    dens = np.abs(amps) ** 2
    if abs(dens.sum() - 1.0) > 1e-8:
        raise DomainError("state is not normalized within 1e-8")
    return float(np.sum(dens**2))


@dataclass(frozen=True)
class IprDistribution:
    """IPR of every eigenstate of one realization plus the delocalized
    reference i_d = 1/M (realized occupied count)."""

    values: np.ndarray
    i_d: float
    i_min: float

    @property
    def min_ratio(self) -> float:
        return self.i_min / self.i_d


def ipr_distribution(dec: SpectralDecomposition, spec: LatticeSpec) -> IprDistribution:
    """IPR of all eigenvectors; columns of the decomposition are unit norm."""
    values = np.sum(dec.eigenvectors**4, axis=0)
    i_d = 1.0 / dec.dimension
    return IprDistribution(values=values, i_d=i_d, i_min=float(values.min()))


def shell_log_amplitudes(density, positions, shell_width: float = 0.5) -> dict:
    """ln|psi| samples binned into spherical shells around the site of
    maximum density.  Keys are the shell lower edges (k * shell_width)."""
    density = np.asarray(density, dtype=float)
    positions = np.asarray(positions, dtype=float)
    if shell_width <= 0:
        raise DomainError(f"shell_width must be positive, got {shell_width}")
    ref = positions[int(np.argmax(density))]
    dist = np.linalg.norm(positions - ref, axis=1)
    keep = density >= DENSITY_FLOOR
    log_amp = 0.5 * np.log(density[keep])
    bins = np.floor(dist[keep] / shell_width).astype(int)
    shells = {}
    for b in np.unique(bins):
        shells[float(b * shell_width)] = log_amp[bins == b]
    return shells


def merge_shells(*shell_maps) -> dict:
    """Order-independent pooling of shell samples across realizations."""
    pooled: dict = {}
    for shells in shell_maps:
        for r, samples in shells.items():
            r = float(r)
            pooled[r] = np.concatenate([pooled.get(r, np.empty(0)), np.asarray(samples, float)])
    return {r: pooled[r] for r in sorted(pooled)}


@dataclass(frozen=True)
class CollapseFit:
    """Result of scaling the shell histograms onto exp(-x^2)."""

    loc_length: float
    sigma: float
    goodness: float
    shells_used: tuple


def _shell_moment_guess(radii, samples):
    means = np.array([s.mean() for s in samples])
    variances = np.array([s.var() for s in samples])
    r = np.asarray(radii)
    inv_lam = max(-np.sum(r * means) / np.sum(r * r), 1e-6)
    lam = 1.0 / inv_lam
    sigma = max(2.0 * lam * np.sum(r * variances) / np.sum(r * r), 1e-6)
    return lam, sigma


def _scaled(samples, r, lam, sigma):
    return (samples + r / lam) / np.sqrt(sigma * r / lam)


def _fd_edges(x):
    """Freedman-Diaconis binning for one shell's scaled samples."""
    q75, q25 = np.percentile(x, [75, 25])
    width = 2.0 * (q75 - q25) / len(x) ** (1.0 / 3.0)
    lo, hi = x.min(), x.max()
    if width <= 0:
        width = (hi - lo) / 10 or 1.0
    nbins = max(int(np.ceil((hi - lo) / width)), 4)
    return np.linspace(lo, hi, nbins + 1)


def lognormal_collapse_fit(
    shells: dict, radii=None, min_samples: int = 100, min_shells: int = 3
) -> CollapseFit:
    """Fit (localization length, width parameter) by collapsing the shell
    histograms of ln|psi| onto the Gaussian target exp(-x^2)/sqrt(pi).

    ln|psi| at radius r is centred at -r/loc_length (amplitudes decay), so the
    scaling variable is x = (ln|psi| + r/loc_length)/sqrt(sigma*r/loc_length).

    ``radii`` optionally restricts the fit to a selected subset of shells,
    e.g. to exclude short distances where direct single-hop amplitudes
    dominate over the exponential envelope.
    """
    candidates = sorted(shells) if radii is None else sorted(radii)
    radii = [
        r
        for r in candidates
        if r > 0 and r in shells and len(shells[r]) >= min_samples
    ]
    if len(radii) < min_shells:
        raise DomainError(
            f"collapse fit needs >= {min_shells} shells with >= {min_samples} samples; "
            f"got {len(radii)}"
        )
    samples = [np.asarray(shells[r], dtype=float) for r in radii]
    lam0, sig0 = _shell_moment_guess(radii, samples)

    # bin edges frozen in x-space from the moment-based initial transform,
    # so the optimizer sees a stable objective
    edges = [_fd_edges(_scaled(s, r, lam0, sig0)) for r, s in zip(radii, samples)]

    def residuals(lam, sigma):
        dev, hists, targets, widths = 0.0, [], [], []
        for r, s, e in zip(radii, samples, edges):
            x = _scaled(s, r, lam, sigma)
            h, _ = np.histogram(x, bins=e, density=True)
            centers = 0.5 * (e[:-1] + e[1:])
            f = np.exp(-(centers**2)) / np.sqrt(np.pi)
            w = np.diff(e)
            dev += float(np.sum((h - f) ** 2 * w))
            hists.append(h)
            targets.append(f)
            widths.append(w)
        return dev, hists, targets, widths

    def objective(params):
        lam, sigma = np.exp(params)
        return residuals(lam, sigma)[0]

    res = minimize(
        objective,
        x0=np.log([lam0, sig0]),
        method="Nelder-Mead",
        options={"xatol": 1e-5, "fatol": 1e-10, "maxiter": 2000},
    )
    if not res.success and res.status != 1:  # status 1 = maxiter, still usable
        raise NumericError(f"collapse fit did not converge: {res.message}")
    lam, sigma = np.exp(res.x)

    _, hists, targets, widths = residuals(lam, sigma)
    h_all = np.concatenate(hists)
    f_all = np.concatenate(targets)
    w_all = np.concatenate(widths)
    ss_res = np.sum(w_all * (h_all - f_all) ** 2)
    h_mean = np.sum(w_all * h_all) / np.sum(w_all)
    ss_tot = np.sum(w_all * (h_all - h_mean) ** 2)
    goodness = float(np.clip(1.0 - ss_res / ss_tot, 0.0, 1.0)) if ss_tot > 0 else 0.0
    return CollapseFit(
        loc_length=float(lam),
        sigma=float(sigma),
        goodness=goodness,
        shells_used=tuple(radii),
    )
