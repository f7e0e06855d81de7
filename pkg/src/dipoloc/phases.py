"""Compensated computation of E*t modulo 2*pi for extreme times.

At t = 1e17 the product E*t reaches ~1e19, where a plain double carries an
absolute error of order 1e3 radians: the phases would be garbage.  Here the
product is formed exactly as a double-double (Dekker two-product) and reduced
modulo 2*pi with a double-double representation of 2*pi, leaving a residual
phase error below ~1e-12 radians for |E| <= 1e2, t <= 1e17.
"""

from __future__ import annotations

import numpy as np

_SPLIT = 134217729.0  # 2**27 + 1, Dekker splitting constant

TWO_PI_HI = 6.283185307179586
TWO_PI_MID = 2.4492935982947064e-16
TWO_PI_LO = -5.989539619436679e-33  # residual of 2*pi beyond hi+mid
INV_TWO_PI = 0.15915494309189535


def _two_sum(a, b):
    """Error-free addition: returns (s, e) with s + e == a + b exactly."""
    s = a + b
    v = s - a
    e = (a - (s - v)) + (b - v)
    return s, e


def _two_prod(a, b):
    """Error-free multiplication: returns (p, e) with p + e == a * b exactly."""
    p = a * b
    ta = _SPLIT * a
    a_hi = ta - (ta - a)
    a_lo = a - a_hi
    tb = _SPLIT * b
    b_hi = tb - (tb - b)
    b_lo = b - b_hi
    e = ((a_hi * b_hi - p) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo
    return p, e


def phase_mod_2pi(energies: np.ndarray, t: float) -> np.ndarray:
    """E*t reduced into (-pi, pi], elementwise, with compensated arithmetic."""
    e = np.asarray(energies, dtype=np.float64)
    p_hi, p_lo = _two_prod(e, float(t))

    # first reduction: n is an exact integer-valued double (|n| < 2^62)
    n = np.round(p_hi * INV_TWO_PI)
    q_hi, q_lo = _two_prod(n, TWO_PI_HI)
    s_hi, s_lo = _two_prod(n, TWO_PI_MID)
    r, r_err = _two_sum(p_hi, -q_hi)
    # remaining terms are <= O(1e3); accumulate with compensation
    tail = 0.0
    for term in (r_err, p_lo, -q_lo, -s_hi, -s_lo, -n * TWO_PI_LO):
        r, e1 = _two_sum(r, term)
        tail = tail + e1
    r = r + tail

    # second reduction with a small exact n2
    n2 = np.round(r * INV_TWO_PI)
    a_hi, a_err = _two_prod(n2, TWO_PI_HI)
    r, r_err = _two_sum(r, -a_hi)
    r = r + (r_err - a_err - n2 * TWO_PI_MID)

    # final fold into (-pi, pi]
    r = r - TWO_PI_HI * np.round(r * INV_TWO_PI)
    return r
