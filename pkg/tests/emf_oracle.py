"""Independent quadrature oracles for the kernel tests (lengths in wavelengths)."""

import numpy as np
from scipy import constants, integrate

ETA0 = float(np.sqrt(constants.mu_0 / constants.epsilon_0))
K = 2.0 * np.pi


def _quad_complex(f, a, b, points):
    pts = sorted(p for p in points if a < p < b)
    re = integrate.quad(lambda t: f(t).real, a, b, points=pts or None, epsabs=0, epsrel=1e-11, limit=1000)[0]
    im = integrate.quad(lambda t: f(t).imag, a, b, points=pts or None, epsabs=0, epsrel=1e-11, limit=1000)[0]
    return re + 1j * im


def emf_mutual(rho, z1, h1, z2, h2):
    """Projection of the exact near field of dipole 1 onto the current of dipole 2.

    Uses the Schelkunoff closed-form E_z of a sinusoidal line current and
    integrates it against the sinusoidal current of dipole 2 by adaptive
    quadrature.  Both currents are referred to their feed points.
    """
    c1 = -2.0 * np.cos(K * h1)
    sources = ((z1 + h1, 1.0), (z1 - h1, 1.0), (z1, c1))

    def field(z):
        out = 0.0j
        for zeta, c in sources:
            r = np.sqrt(rho * rho + (z - zeta) ** 2)
            out += c * np.exp(-1j * K * r) / r
        return out

    def integrand(z):
        return field(z) * np.sin(K * (h2 - abs(z - z2)))

    points = [z2] + [s[0] for s in sources]
    total = _quad_complex(integrand, z2 - h2, z2 + h2, points)
    return 1j * ETA0 / (4.0 * np.pi * np.sin(K * h1) * np.sin(K * h2)) * total


def si_ci_quadrature(x):
    """Si(x) and Ci(x) by Gauss-Legendre panels on the defining integrals."""
    nodes, weights = np.polynomial.legendre.leggauss(30)
    panels = max(1, int(np.ceil(x / 0.5)))
    edges = np.linspace(0.0, x, panels + 1)
    si = ci_part = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        t = 0.5 * (b - a) * nodes + 0.5 * (a + b)
        w = 0.5 * (b - a) * weights
        si += np.sum(w * np.sinc(t / np.pi))
        # (cos t - 1)/t without cancellation
        ci_part += np.sum(w * (-2.0 * np.sin(0.5 * t) ** 2 / t))
    return si, np.euler_gamma + np.log(x) + ci_part
