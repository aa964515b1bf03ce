# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: sine/cosine integrals and the induced-EMF pair impedance.

Same algorithm as ``_fallback``; lengths are in wavelengths.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, log, exp, sqrt, fabs, M_PI

cnp.import_array()

cdef double EULER_GAMMA = 0.57721566490153286061
cdef double HALF_PI = 0.5 * M_PI
cdef double TWO_PI = 2.0 * M_PI
cdef double ETA0 = 376.730313412
cdef double SERIES_MAX = 4.0
cdef double ASYMPTOTIC_MIN = 40.0


cdef inline void _series(double x, double* cin, double* si) noexcept nogil:
    cdef double t = x, t_even, c = 0.0, s = x, term
    cdef int n
    for n in range(1, 40):
        t_even = t * x / (2 * n)
        term = t_even / (2 * n)
        if n % 2 == 1:
            c += term
        else:
            c -= term
        t = t_even * x / (2 * n + 1)
        term = t / (2 * n + 1)
        if n % 2 == 1:
            s -= term
        else:
            s += term
        if term < 1e-18 * s and n > 2:
            break
    cin[0] = c
    si[0] = s


cdef inline void _cf(double x, double* ci, double* si) noexcept nogil:
    # Lentz evaluation of E1(ix); complex arithmetic spelled out in reals
    cdef double br = 1.0, bi = x
    cdef double cr = 1e300, ci_ = 0.0
    cdef double den, dr, di, hr, hi, a, tr, ti, delr, deli, cosx, sinx
    cdef int i
    den = br * br + bi * bi
    dr = br / den
    di = -bi / den
    hr = dr
    hi = di
    for i in range(2, 200):
        a = -<double>((i - 1) * (i - 1))
        br += 2.0
        # d = 1 / (a d + b)
        tr = a * dr + br
        ti = a * di + bi
        den = tr * tr + ti * ti
        dr = tr / den
        di = -ti / den
        # c = b + a / c
        den = cr * cr + ci_ * ci_
        tr = br + a * cr / den
        ti = bi - a * ci_ / den
        cr = tr
        ci_ = ti
        delr = cr * dr - ci_ * di
        deli = cr * di + ci_ * dr
        tr = hr * delr - hi * deli
        hi = hr * deli + hi * delr
        hr = tr
        if fabs(delr - 1.0) + fabs(deli) < 1e-16:
            break
    cosx = cos(x)
    sinx = sin(x)
    tr = cosx * hr + sinx * hi
    ti = cosx * hi - sinx * hr
    ci[0] = -tr
    si[0] = HALF_PI + ti


cdef inline void _asymptotic(double x, double* ci, double* si) noexcept nogil:
    cdef double inv2 = 1.0 / (x * x)
    cdef double f = 1.0, g = 1.0, tf = 1.0, tg = 1.0, s, c
    cdef int k
    for k in range(1, 12):
        tf = -tf * (2 * k - 1) * (2 * k) * inv2
        tg = -tg * (2 * k) * (2 * k + 1) * inv2
        f += tf
        g += tg
    f /= x
    g *= inv2
    s = sin(x)
    c = cos(x)
    ci[0] = f * s - g * c
    si[0] = HALF_PI - f * c - g * s


cdef inline void _sici(double x, double* si, double* ci) noexcept nogil:
    cdef double cin
    if x <= SERIES_MAX:
        _series(x, &cin, si)
        ci[0] = EULER_GAMMA + log(x) - cin
    elif x >= ASYMPTOTIC_MIN:
        _asymptotic(x, ci, si)
    else:
        _cf(x, ci, si)


cdef inline void _cin_si(double x, double* cin, double* si) noexcept nogil:
    cdef double ci
    if x <= SERIES_MAX:
        _series(x, cin, si)
    else:
        _sici(x, si, &ci)
        cin[0] = EULER_GAMMA + log(x) - ci


cdef inline double _log_r_minus_d(double r, double d, double rho2) noexcept nogil:
    if d > 0:
        return log(rho2) - log(r + d)
    return log(r - d)


cdef inline void _segment(double rho2, double zeta, double a, double b, int beta,
                          double* out_r, double* out_i) noexcept nogil:
    cdef double da = a - zeta, db = b - zeta
    cdef double ra = sqrt(rho2 + da * da), rb = sqrt(rho2 + db * db)
    cdef double la, lb, cin_a, si_a, cin_b, si_b
    if beta > 0:
        la = _log_r_minus_d(ra, da, rho2)
        lb = _log_r_minus_d(rb, db, rho2)
    else:
        la = _log_r_minus_d(ra, -da, rho2)
        lb = _log_r_minus_d(rb, -db, rho2)
    _cin_si(TWO_PI * exp(la), &cin_a, &si_a)
    _cin_si(TWO_PI * exp(lb), &cin_b, &si_b)
    # (lb - la) + E~(u_b) - E~(u_a), E~ = -Cin - j Si
    out_r[0] = (lb - la) - cin_b + cin_a
    out_i[0] = -si_b + si_a
    if beta > 0:
        out_r[0] = -out_r[0]
        out_i[0] = -out_i[0]


cdef inline void _pair(double rho, double z1, double h1, double z2, double h2,
                       double* zr, double* zi) noexcept nogil:
    cdef double rho2 = rho * rho
    cdef double k = TWO_PI
    cdef double tot_r = 0.0, tot_i = 0.0
    cdef double zeta, coef, ea, eb, top = z2 + h2, bot = z2 - h2
    cdef double s1r, s1i, s2r, s2i, s3r, s3i, s4r, s4i, ur, ui, scale
    cdef double ce, se, cb, sb
    cdef int s
    for s in range(3):
        if s == 0:
            zeta = z1 + h1
            coef = 1.0
        elif s == 1:
            zeta = z1 - h1
            coef = 1.0
        else:
            zeta = z1
            coef = -2.0 * cos(k * h1)
        ea = k * (top - zeta)
        eb = k * (h2 - z2 + zeta)
        _segment(rho2, zeta, z2, top, -1, &s1r, &s1i)
        _segment(rho2, zeta, z2, top, +1, &s2r, &s2i)
        _segment(rho2, zeta, bot, z2, +1, &s3r, &s3i)
        _segment(rho2, zeta, bot, z2, -1, &s4r, &s4i)
        ce = cos(ea)
        se = sin(ea)
        cb = cos(eb)
        sb = sin(eb)
        # e^{j ea} s1 - e^{-j ea} s2 + e^{j eb} s3 - e^{-j eb} s4
        ur = (ce * s1r - se * s1i) - (ce * s2r + se * s2i) \
            + (cb * s3r - sb * s3i) - (cb * s4r + sb * s4i)
        ui = (ce * s1i + se * s1r) - (ce * s2i - se * s2r) \
            + (cb * s3i + sb * s3r) - (cb * s4i - sb * s4r)
        # divide by 2j: (ur + j ui) / 2j = ui/2 - j ur/2
        tot_r += coef * 0.5 * ui
        tot_i -= coef * 0.5 * ur
    scale = ETA0 / (4.0 * M_PI * sin(k * h1) * sin(k * h2))
    # multiply by j * scale
    zr[0] = -scale * tot_i
    zi[0] = scale * tot_r


def sici(x):
    """Sine and cosine integrals Si(x), Ci(x) for x > 0."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xs = np.ascontiguousarray(np.ravel(x), dtype=np.float64)
    cdef Py_ssize_t n = xs.shape[0], i
    cdef cnp.ndarray[cnp.float64_t, ndim=1] si = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ci = np.empty(n)
    cdef double[::1] xv = xs, sv = si, cv = ci
    with nogil:
        for i in range(n):
            _sici(xv[i], &sv[i], &cv[i])
    shape = np.shape(x)
    return si.reshape(shape), ci.reshape(shape)


def cin_si(x):
    """Entire parts Cin(x) = gamma + ln x - Ci(x), and Si(x)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xs = np.ascontiguousarray(np.ravel(x), dtype=np.float64)
    cdef Py_ssize_t n = xs.shape[0], i
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cin = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] si = np.empty(n)
    cdef double[::1] xv = xs, cv = cin, sv = si
    with nogil:
        for i in range(n):
            _cin_si(xv[i], &cv[i], &sv[i])
    shape = np.shape(x)
    return cin.reshape(shape), si.reshape(shape)


def mutual_pairs(rho, z1, h1, z2, h2):
    """Induced-EMF impedance Z21 for arrays of parallel dipole pairs."""
    b = np.broadcast_arrays(*(np.asarray(v, dtype=np.float64) for v in (rho, z1, h1, z2, h2)))
    shape = b[0].shape
    cdef double[::1] r = np.ascontiguousarray(b[0].ravel())
    cdef double[::1] a1 = np.ascontiguousarray(b[1].ravel())
    cdef double[::1] l1 = np.ascontiguousarray(b[2].ravel())
    cdef double[::1] a2 = np.ascontiguousarray(b[3].ravel())
    cdef double[::1] l2 = np.ascontiguousarray(b[4].ravel())
    cdef Py_ssize_t n = r.shape[0], i
    out = np.empty(n, dtype=np.complex128)
    cdef double[::1] ov = out.view(np.float64)
    with nogil:
        for i in range(n):
            _pair(r[i], a1[i], l1[i], a2[i], l2[i], &ov[2 * i], &ov[2 * i + 1])
    return out.reshape(shape)
