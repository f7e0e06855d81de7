"""Localization-diffusion crossover grid and the resonance-counting scaling
theory for its lattice-size dependence.

A pair of sites is resonant when the hopping amplitude gamma/r^3 exceeds
their on-site energy difference.  The probability that the central site has
no resonance anywhere in the lattice, P_tilde, is monotone in w; its
isocontours in the (p, w) plane track the crossover and follow
w = p * t_nn * (A + B ln N).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, UnconvergedError

LEVITOV_PREFACTOR = 28.0 * np.pi / 3.0
DEFAULT_TARGET = 1.2e-2


def classify_point(summary, spec, lo: float = 0.1, hi: float = 0.9,
                   require_converged: bool = True) -> str:
    """Classify one (p, w) ensemble: diffusive when nearly all realizations
    reach the lattice edge, localized when nearly none do."""
    if require_converged and not summary.converged:
        raise UnconvergedError(
            f"ensemble at p={spec.occupation}, w={spec.disorder_width} is not converged"
        )
    if not 0 <= lo < hi <= 1:
        raise DomainError(f"thresholds must satisfy 0 <= lo < hi <= 1, got {lo}, {hi}")
    ef = summary.edge_fraction
    if ef >= hi:
        return "diffusive"
    if ef <= lo:
        return "localized"
    return "crossover"


def energy_gap_pdf(delta: float, w: float) -> float:
    """Density of |w_i - w_j| for independent uniforms on [-w/2, w/2]."""
    if w <= 0:
        raise DomainError(f"w must be positive, got {w}")
    if not 0 <= delta <= w:
        raise DomainError(f"delta must lie in [0, w], got {delta}")
    return (2.0 / w) * (1.0 - delta / w)


def resonance_probability(p: float, gamma: float, w: float, r) -> np.ndarray | float:
    """Probability that a site at distance r is occupied and resonant with a
    given site: p * Prob(|w_i - w_j| <= gamma/r^3), clamped at p once the
    hopping amplitude exceeds w."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("distances must be positive")
    if not 0 <= p <= 1:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    if w < 0:
        raise DomainError(f"w must be >= 0, got {w}")
    t = gamma / r**3
    if w == 0:
        out = np.full_like(t, p)
    else:
        u = np.minimum(t / w, 1.0)
        out = p * (2.0 * u - u * u)
    return out if out.ndim else float(out)


@lru_cache(maxsize=8)
def _center_shell_table(n: int):
    """Distances from the center over the full cubic lattice, grouped into
    shells of equal squared distance: (r, multiplicity) with r sorted.

    Built from 1D squared-offset histograms convolved twice, so N = 1001 is
    still cheap; exact integer multiplicities.
    """
    if n % 2 == 0:
        raise DomainError(f"center shells need odd N, got {n}")
    k = (n - 1) // 2
    m1 = k * k
    h1 = np.zeros(m1 + 1, dtype=np.int64)
    h1[0] = 1
    for d in range(1, k + 1):
        h1[d * d] = 2
    h2 = np.zeros(2 * m1 + 1, dtype=np.int64)
    for d in range(0, k + 1):
        mult = 1 if d == 0 else 2
        h2[d * d : d * d + m1 + 1] += mult * h1
    h3 = np.zeros(3 * m1 + 1, dtype=np.int64)
    for d in range(0, k + 1):
        mult = 1 if d == 0 else 2
        h3[d * d : d * d + 2 * m1 + 1] += mult * h2
    h3[0] -= 1  # drop the center itself
    r2 = np.nonzero(h3)[0]
    return np.sqrt(r2.astype(float)), h3[r2].astype(float)


def no_resonance_probability(n: int, p: float, gamma: float, w: float) -> float:
    """P_tilde: probability that the central site is resonant with no other
    site of the N^3 lattice.  Product over distance shells, in log space."""
    radii, counts = _center_shell_table(n)
    prob = resonance_probability(p, gamma, w, radii)
    if np.any(prob >= 1.0):
        return 0.0
    log_p = float(np.dot(counts, np.log1p(-prob)))
    return float(np.exp(log_p))


@dataclass(frozen=True)
class CrossoverLine:
    """Isoprobability line of P_tilde at one lattice size."""

    n_per_dim: int
    target_probability: float
    p_values: tuple
    w_values: tuple
    fit_a: float | None = None
    fit_b: float | None = None


def isoprobability_line(
    n: int,
    target: float,
    p_grid,
    gamma: float = 1.0,
    w_max: float = 1e3,
) -> CrossoverLine:
    """Solve P_tilde(p, w; N) = target for w at each p by root bracketing.

    P_tilde is monotone increasing in w, so the root is unique; points where
    the target is unreachable below w_max are omitted.
    """
    if not 0.0 < target < 1.0:
        raise DomainError(f"target probability must lie in (0, 1), got {target}")
    ps, ws = [], []
    for p in p_grid:
        if p <= 0:
            continue

        def f(w):
            return no_resonance_probability(n, p, gamma, w) - target

        w_lo = 1e-9
        if f(w_max) < 0 or f(w_lo) > 0:
            continue  # unreachable within (0, w_max]: flagged by omission
        w_star = brentq(f, w_lo, w_max, xtol=1e-12, rtol=1e-12)
        ps.append(float(p))
        ws.append(float(w_star))
    return CrossoverLine(
        n_per_dim=int(n), target_probability=float(target),
        p_values=tuple(ps), w_values=tuple(ws),
    )


@dataclass(frozen=True)
class CrossoverFit:
    """Least-squares coefficients of w = p * t_nn * (A + B ln N)."""

    fit_a: float
    fit_b: float
    rms_residual: float
    n_list: tuple
    target: float

    def predict_w(self, p, n, t_nn: float = 1.0):
        return np.asarray(p) * t_nn * (self.fit_a + self.fit_b * np.log(n))


def fit_crossover_line(lines, t_nn: float = 1.0) -> CrossoverFit:
    """Fit (A, B) over the pooled points of isoprobability lines at
    several lattice sizes."""
    n_set = sorted({line.n_per_dim for line in lines})
    if len(n_set) < 2:
        raise DomainError("fit needs isoprobability lines for >= 2 distinct N")
    rows, rhs = [], []
    for line in lines:
        if len(line.p_values) < 3:
            raise DomainError(f"line at N={line.n_per_dim} has fewer than 3 points")
        for p, w in zip(line.p_values, line.w_values):
            rows.append([p * t_nn, p * t_nn * np.log(line.n_per_dim)])
            rhs.append(w)
    design = np.asarray(rows)
    rhs = np.asarray(rhs)
    coef, *_ = np.linalg.lstsq(design, rhs, rcond=None)
    resid = rhs - design @ coef
    rms = float(np.sqrt(np.mean(resid**2)))
    targets = {line.target_probability for line in lines}
    if len(targets) != 1:
        raise DomainError("all lines must share the same target probability")
    return CrossoverFit(
        fit_a=float(coef[0]), fit_b=float(coef[1]), rms_residual=rms,
        n_list=tuple(n_set), target=targets.pop(),
    )


def levitov_parameter(p: float, w: float, kappa: int = 1, t_nn: float = 1.0) -> float:
    """Resonance-counting delocalization parameter (28*pi/3) * kappa * t_nn*p/w."""
    if w <= 0:
        raise DomainError("levitov_parameter diverges at w = 0 (delocalized by convention)")
    if kappa < 1:
        raise DomainError(f"kappa must be >= 1, got {kappa}")
    return LEVITOV_PREFACTOR * kappa * t_nn * p / w
