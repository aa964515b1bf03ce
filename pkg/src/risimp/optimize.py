"""Received-power maximization over the RIS reactances.

``maximize_power`` is cyclic coordinate ascent: one reactance at a time is
moved to the best value on ``[low, high]`` (coarse scan, then golden-section
refinement of the bracketing cell), holding the others fixed.  Changing one
load is a rank-1 update of the RIS block, so the 1-D objective is a cheap
scalar formula in the current inverse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.linalg import blas

from .channel import Variant, channel, received_power_db, tx_currents
from .errors import NumericalError
from .impedance import ImpedanceSet, RISConfig

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
DEFAULT_BOUNDS = (-1000.0, 1000.0)


@dataclass(frozen=True)
class OptimizeResult:
    config: RISConfig
    power_db: float
    iterations: int
    trace: tuple[tuple[int, int, float], ...]

    @property
    def powers(self) -> np.ndarray:
        return np.array([p for _, _, p in self.trace])


class PowerObjective:
    """``y(x) = c0 + g * left (base + diag(r0 + j x))^-1 right``, with ``|y|^2`` the power."""

    def __init__(self, imp: ImpedanceSet, w, r0: float, variant: Variant):
        self.imp = imp
        self.variant = Variant(variant)
        self.r0 = float(r0)
        self.w = np.asarray(getattr(w, "w", w), dtype=complex).reshape(-1)
        if not np.all(np.isfinite(self.w)):
            raise NumericalError("non-finite precoder weights make the objective undefined")
        t = tx_currents(imp, self.w)
        f = imp.ue_factor
        g = -f * math.sqrt(imp.gain)
        n = imp.n
        if self.variant is Variant.FULL:
            self.c0 = f * complex(imp.z_rot.reshape(-1) @ t)
            self.left, self.right = imp.z_ros.reshape(-1), imp.z_sot @ t
            self.base = imp.z_ss + imp.z_sos
            self.g = g
        elif self.variant is Variant.RIS_ONLY:
            self.c0 = 0.0j
            self.left, self.right = imp.z_rs.reshape(-1), imp.z_st @ t
            self.base = imp.z_ss
            self.g = g
        else:
            h = channel(imp, None, self.variant)
            self.c0 = complex(h.h @ self.w)
            self.left = self.right = np.zeros(n, dtype=complex)
            self.base = imp.z_ss
            self.g = 0.0j

    @property
    def depends_on_ris(self) -> bool:
        return self.g != 0

    def matrix(self, x) -> np.ndarray:
        return self.base + np.diag(self.r0 + 1j * np.asarray(x, dtype=float))

    def value(self, x) -> complex:
        if not self.depends_on_ris:
            return self.c0
        beta = sla.solve(self.matrix(x), self.right)
        return self.c0 + self.g * complex(self.left @ beta)

    @staticmethod
    def db(y) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 20.0 * np.log10(np.abs(y))


class _RankOneState:
    """Inverse of the RIS block and the two solves it feeds, kept current under load changes."""

    def __init__(self, obj: PowerObjective, x: np.ndarray):
        self.obj = obj
        self.x = np.array(x, dtype=float)
        self.refresh()

    def refresh(self):
        self.p = np.asfortranarray(sla.inv(self.obj.matrix(self.x)))
        self.alpha = self.obj.left @ self.p
        self.beta = self.p @ self.obj.right
        self.s = complex(self.obj.left @ self.beta)

    def candidates(self, l: int, xs) -> np.ndarray:
        d = 1j * (np.asarray(xs, dtype=float) - self.x[l])
        corr = d * self.alpha[l] * self.beta[l] / (1.0 + d * self.p[l, l])
        return self.obj.c0 + self.obj.g * (self.s - corr)

    def accept(self, l: int, x_new: float):
        d = 1j * (x_new - self.x[l])
        f = d / (1.0 + d * self.p[l, l])
        col = self.p[:, l].copy()
        row = self.p[l, :].copy()
        a_l, b_l = self.alpha[l], self.beta[l]
        self.alpha = self.alpha - f * a_l * row
        self.beta = self.beta - f * b_l * col
        self.s = self.s - f * a_l * b_l
        self.p = blas.zgeru(-f, col, row, a=self.p, overwrite_a=1)
        self.x[l] = x_new


class _ResolveState:
    """Same interface as ``_RankOneState`` but every candidate is a fresh solve."""

    def __init__(self, obj: PowerObjective, x: np.ndarray):
        self.obj = obj
        self.x = np.array(x, dtype=float)

    def refresh(self):
        pass

    def candidates(self, l: int, xs) -> np.ndarray:
        out = np.empty(np.size(xs), dtype=complex)
        trial = self.x.copy()
        for i, v in enumerate(np.atleast_1d(xs)):
            trial[l] = v
            out[i] = self.obj.value(trial)
        return out

    def accept(self, l: int, x_new: float):
        self.x[l] = x_new


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-4, max_iter: int = 200):
    """Maximize a unimodal scalar function on ``[lo, hi]``; returns ``(x, f(x))``."""
    a, b = lo, hi
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = f(x2)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def _line_search(state, l: int, bounds, scan: int, tol: float):
    """Best reactance for element ``l``: coarse scan, then golden section on the best cell."""
    lo, hi = bounds
    grid = np.linspace(lo, hi, scan)
    vals = PowerObjective.db(state.candidates(l, grid))
    if not np.all(np.isfinite(vals)):
        raise NumericalError(f"non-finite objective while scanning element {l}")
    i = int(np.argmax(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, scan - 1)]
    x_g, p_g = golden_section_max(lambda v: float(PowerObjective.db(state.candidates(l, [v]))[0]),
                                  a, b, tol)
    if vals[i] > p_g:
        return float(grid[i]), float(vals[i])
    return float(x_g), float(p_g)


def _initial(obj: PowerObjective, init, bounds) -> np.ndarray:
    if isinstance(init, RISConfig):
        x = np.array(init.reactances, dtype=float)
    elif init is None or (isinstance(init, str) and init == "resonant"):
        x = -np.diag(obj.base).imag
    else:
        x = np.array(init, dtype=float)
    if x.size != obj.imp.n:
        raise ValueError(f"initial reactances have {x.size} entries, RIS has {obj.imp.n}")
    if not np.all(np.isfinite(x)):
        raise ValueError("initial reactances must be finite")
    return np.clip(x, *bounds)


def maximize_power(imp: ImpedanceSet, w, r0: float = 0.0, variant: Variant = Variant.FULL,
                   budget: int | None = None, seed: int = 0, init=None,
                   bounds=DEFAULT_BOUNDS, tol_db: float = 1e-4, scan: int = 101,
                   x_tol: float = 1e-4, update: str = "rank1") -> OptimizeResult:
    """Coordinate ascent of ``|h^H w|^2`` over the RIS reactances, ``r0`` fixed.

    ``budget`` caps the number of coordinate steps (default 20 sweeps).  The
    element order of each sweep is a permutation drawn from ``seed``.  Steps
    are only taken when they raise the power, so ``trace`` (iteration,
    element, dB) is non-decreasing.  ``init`` is a ``RISConfig``, an array, or
    ``"resonant"`` (cancel each element's self reactance).
    """
    obj = PowerObjective(imp, w, r0, variant)
    x0 = _initial(obj, init, bounds)
    n = imp.n
    budget = 20 * max(n, 1) if budget is None else int(budget)
    if budget < 1:
        raise ValueError("budget must be at least 1")
    rng = np.random.default_rng(seed)

    p0 = float(PowerObjective.db(obj.value(x0)))
    if not np.isfinite(p0) and obj.depends_on_ris:
        raise NumericalError("non-finite objective at the initial configuration")
    trace = [(0, -1, p0)]
    if not obj.depends_on_ris or n == 0:
        cfg = RISConfig(r0, x0)
        return OptimizeResult(cfg, _recheck(imp, cfg, obj), 0, tuple(trace))

    state = _RankOneState(obj, x0) if update == "rank1" else _ResolveState(obj, x0)
    current = p0
    steps = 0
    while steps < budget:
        sweep_start = current
        for l in rng.permutation(n):
            if steps >= budget:
                break
            steps += 1
            x_new, p_new = _line_search(state, int(l), bounds, scan, x_tol)
            if p_new > current:
                state.accept(int(l), x_new)
                current = p_new
                trace.append((steps, int(l), current))
        state.refresh()
        if current - sweep_start < tol_db:
            break
    cfg = RISConfig(r0, state.x)
    return OptimizeResult(cfg, _recheck(imp, cfg, obj), steps, tuple(trace))


def _recheck(imp: ImpedanceSet, cfg: RISConfig, obj: PowerObjective) -> float:
    return received_power_db(channel(imp, cfg, obj.variant), obj.w)


def random_search(imp: ImpedanceSet, w, r0: float = 0.0, variant: Variant = Variant.FULL,
                  draws: int = 1000, low: float = -330.0, high: float = 100.0,
                  seed: int = 0) -> OptimizeResult:
    """Best of ``draws`` i.i.d. uniform reactance vectors on ``[low, high]``."""
    if draws < 1:
        raise ValueError("draws must be at least 1")
    if not low < high:
        raise ValueError("low must be below high")
    obj = PowerObjective(imp, w, r0, variant)
    rng = np.random.default_rng(seed)
    best_x, best_p, trace = None, -math.inf, []
    for i in range(draws):
        x = rng.uniform(low, high, imp.n)
        p = float(PowerObjective.db(obj.value(x)))
        if not np.isfinite(p) and obj.depends_on_ris:
            raise NumericalError(f"non-finite objective at draw {i}")
        if best_x is None or p > best_p:
            best_x, best_p = x, p
            trace.append((i + 1, -1, p))
    cfg = RISConfig(r0, best_x)
    return OptimizeResult(cfg, _recheck(imp, cfg, obj), draws, tuple(trace))
