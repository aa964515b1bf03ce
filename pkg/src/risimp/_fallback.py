"""Pure-NumPy kernels.

Mirrors ``_kernels.pyx`` operation for operation so the two backends agree to
rounding.  All lengths are in wavelengths (``k = 2 pi``).
"""

import numpy as np

EULER_GAMMA = 0.57721566490153286061
HALF_PI = 0.5 * np.pi
ETA0 = 376.730313412
TWO_PI = 2.0 * np.pi

SERIES_MAX = 4.0
ASYMPTOTIC_MIN = 40.0
_CF_EPS = 1e-16
_CF_MAXIT = 200


def _series(x):
    """Power series for Cin(x) and Si(x); used for x <= SERIES_MAX."""
    # Cin = sum_{n>=1} (-1)^(n+1) x^(2n) / (2n (2n)!)
    # Si  = sum_{n>=0} (-1)^n     x^(2n+1) / ((2n+1) (2n+1)!)
    cin = np.zeros_like(x)
    si = np.zeros_like(x)
    t = x.copy()  # x^(2n+1)/(2n+1)!, n = 0
    si += t
    for n in range(1, 40):
        t_even = t * x / (2 * n)  # x^(2n)/(2n)!
        term_c = t_even / (2 * n)
        cin += term_c if n % 2 == 1 else -term_c
        t = t_even * x / (2 * n + 1)
        term_s = t / (2 * n + 1)
        si += -term_s if n % 2 == 1 else term_s
    return cin, si


def _continued_fraction(x):
    """Ci, Si via the Lentz continued fraction for E1(ix)."""
    b = 1.0 + 1j * x
    c = np.full(x.shape, 1e300, dtype=complex)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for i in range(2, _CF_MAXIT):
        a = -float((i - 1) * (i - 1))
        b = b + 2.0
        d_new = 1.0 / (a * d + b)
        c_new = b + a / c
        delta = c_new * d_new
        d = np.where(active, d_new, d)
        c = np.where(active, c_new, c)
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) >= _CF_EPS
        if not active.any():
            break
    h = (np.cos(x) - 1j * np.sin(x)) * h
    return -h.real, HALF_PI + h.imag


def _asymptotic(x):
    """Large-argument auxiliary series f, g; Ci, Si follow."""
    inv2 = 1.0 / (x * x)
    f = np.ones_like(x)
    g = np.ones_like(x)
    tf = np.ones_like(x)
    tg = np.ones_like(x)
    for k in range(1, 12):
        tf = -tf * (2 * k - 1) * (2 * k) * inv2
        tg = -tg * (2 * k) * (2 * k + 1) * inv2
        f += tf
        g += tg
    f /= x
    g *= inv2
    s, c = np.sin(x), np.cos(x)
    return f * s - g * c, HALF_PI - f * c - g * s


def sici(x):
    """Sine and cosine integrals Si(x), Ci(x) for x > 0."""
    x = np.asarray(x, dtype=float)
    si = np.empty_like(x)
    ci = np.empty_like(x)
    lo = x <= SERIES_MAX
    hi = x >= ASYMPTOTIC_MIN
    mid = ~(lo | hi)
    if lo.any():
        cin, s = _series(x[lo])
        si[lo] = s
        ci[lo] = EULER_GAMMA + np.log(x[lo]) - cin
    if mid.any():
        ci[mid], si[mid] = _continued_fraction(x[mid])
    if hi.any():
        ci[hi], si[hi] = _asymptotic(x[hi])
    return si, ci


def cin_si(x):
    """Entire parts: Cin(x) = gamma + ln x - Ci(x), and Si(x)."""
    x = np.asarray(x, dtype=float)
    cin = np.empty_like(x)
    si = np.empty_like(x)
    lo = x <= SERIES_MAX
    if lo.any():
        cin[lo], si[lo] = _series(x[lo])
    if (~lo).any():
        xs = x[~lo]
        s, c = sici(xs)
        si[~lo] = s
        cin[~lo] = EULER_GAMMA + np.log(xs) - c
    return cin, si


def _log_r_minus_d(r, d, rho2):
    # ln(R - d) without cancellation when d > 0
    out = np.empty_like(r)
    pos = d > 0
    out[pos] = np.log(rho2[pos]) - np.log(r[pos] + d[pos])
    out[~pos] = np.log(r[~pos] - d[~pos])
    return out


def _primitive_terms(rho2, d):
    """ln u and E~(u) = -Cin(u) - j Si(u) for u = k(R - d) and u = k(R + d)."""
    r = np.sqrt(rho2 + d * d)
    ln_minus = _log_r_minus_d(r, d, rho2)
    ln_plus = _log_r_minus_d(r, -d, rho2)
    u_minus = TWO_PI * np.exp(ln_minus)
    u_plus = TWO_PI * np.exp(ln_plus)
    cin_m, si_m = cin_si(u_minus)
    cin_p, si_p = cin_si(u_plus)
    return ln_minus, -cin_m - 1j * si_m, ln_plus, -cin_p - 1j * si_p


def _segment(rho2, zeta, a, b, beta):
    """Integral of exp(-jkR)/R * exp(j beta k (z - zeta)) over z in [a, b]."""
    lm_a, em_a, lp_a, ep_a = _primitive_terms(rho2, a - zeta)
    lm_b, em_b, lp_b, ep_b = _primitive_terms(rho2, b - zeta)
    if beta > 0:
        return -((lm_b - lm_a) + (em_b - em_a))
    return (lp_b - lp_a) + (ep_b - ep_a)


def mutual_pairs(rho, z1, h1, z2, h2):
    """Induced-EMF impedance Z21 between parallel z-directed dipoles.

    Parameters are arrays in wavelengths: ``rho`` is the (reduced-kernel)
    radial distance, ``z1``/``z2`` the centre heights and ``h1``/``h2`` the
    half-lengths.  Currents are sinusoidal and referred to the feed point.
    """
    rho = np.asarray(rho, dtype=float)
    z1, h1, z2, h2 = (np.asarray(v, dtype=float) for v in (z1, h1, z2, h2))
    rho2 = rho * rho
    k = TWO_PI
    total = np.zeros(rho.shape, dtype=complex)
    coef_center = -2.0 * np.cos(k * h1)
    for zeta, coef in ((z1 + h1, 1.0), (z1 - h1, 1.0), (z1, coef_center)):
        top = z2 + h2
        bot = z2 - h2
        ea = k * (top - zeta)
        eb = k * (h2 - z2 + zeta)
        upper = (np.exp(1j * ea) * _segment(rho2, zeta, z2, top, -1)
                 - np.exp(-1j * ea) * _segment(rho2, zeta, z2, top, +1))
        lower = (np.exp(1j * eb) * _segment(rho2, zeta, bot, z2, +1)
                 - np.exp(-1j * eb) * _segment(rho2, zeta, bot, z2, -1))
        total += coef * (upper + lower) / 2j
    scale = 1j * ETA0 / (4.0 * np.pi * np.sin(k * h1) * np.sin(k * h2))
    return scale * total
