"""Backend selection for the hot kernels.

The compiled ``_kernels`` extension is used when importable; otherwise the
NumPy implementation in ``_fallback``.  Set ``RISIMP_BACKEND=python`` to force
the fallback.
"""

import os

from . import _fallback

BACKEND = "python"
_impl = _fallback

if os.environ.get("RISIMP_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        _impl = _fallback

ETA0 = _fallback.ETA0


def sici(x):
    """Return ``(Si(x), Ci(x))`` for positive ``x``."""
    return _impl.sici(x)


def cin_si(x):
    return _impl.cin_si(x)


def mutual_pairs(rho, z1, h1, z2, h2):
    return _impl.mutual_pairs(rho, z1, h1, z2, h2)


def use_backend(name):
    """Switch backend at runtime (``"cython"`` or ``"python"``); returns the previous name."""
    global _impl, BACKEND
    previous = BACKEND
    if name == "python":
        _impl, BACKEND = _fallback, "python"
    elif name == "cython":
        from . import _kernels
        _impl, BACKEND = _kernels, "cython"
    else:
        raise ValueError(f"unknown backend {name!r}")
    return previous
