"""End-to-end channel of the impedance model and a brute-force multiport check.

With TX currents ``i_T = Z_TG^-1 v_G`` and the UE voltage divider
``F = Z_L / (Z_RR + Z_L)``, the transfer from generator voltages to the UE
load voltage is::

    h^H = F [ z_rot - sqrt(G) z_ros (Z_SS + Z_SOS + Z_RIS)^-1 Z_SOT ] Z_TG^-1

The RIS-reflected term carries the patch-gain compensation ``sqrt(G)``.  The
model is unilateral: the UE does not load the RIS or the scatterers, and none
of the passive elements load the transmitter.  A scene-level power
normalization (``power_offset_db``) scales every channel by the same factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg as sla

from .errors import NumericalError
from .impedance import ImpedanceSet, RISConfig, lu_solve_checked, pair_block, terminations
from .scene import Scene


class Variant(str, Enum):
    FULL = "FULL"
    DIRECT = "DIRECT"
    RIS_ONLY = "RIS_ONLY"
    CLUSTER_ONLY = "CLUSTER_ONLY"


@dataclass(frozen=True)
class ChannelVector:
    """Row channel ``h^H`` (length M) and the path subset it represents."""

    h: np.ndarray
    variant: Variant

    def __post_init__(self):
        h = np.asarray(self.h, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(h)):
            raise NumericalError(f"non-finite {self.variant} channel")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "variant", Variant(self.variant))

    def __len__(self):
        return self.h.size


@dataclass(frozen=True)
class ReceiveSample:
    y: complex
    x: complex = 1.0
    noise: complex = 0.0

    def __post_init__(self):
        if not np.isfinite(self.y):
            raise NumericalError("non-finite received sample")


def tx_currents(imp: ImpedanceSet, rhs: np.ndarray) -> np.ndarray:
    """``Z_TG^-1 rhs``; ``Z_TG`` is complex-symmetric, so this also applies it from the right."""
    return lu_solve_checked(imp.z_tg, rhs, "TX block Z_TT + Z_G")


def _apply_tx(imp: ImpedanceSet, row: np.ndarray) -> np.ndarray:
    return tx_currents(imp, np.asarray(row, dtype=complex).reshape(-1))


def ris_term(imp: ImpedanceSet, ris: RISConfig, with_scatterers: bool = True) -> np.ndarray:
    """``z (Z_SS [+ Z_SOS] + Z_RIS)^-1 Z`` for the RIS path, as a length-M row."""
    if len(ris) != imp.n:
        raise ValueError(f"RIS config has {len(ris)} loads, scene has {imp.n} elements")
    if imp.n == 0:
        return np.zeros(imp.m, dtype=complex)
    a = imp.z_ss + np.diag(ris.loads)
    if with_scatterers:
        a = a + imp.z_sos
        left, right = imp.z_ros, imp.z_sot
    else:
        left, right = imp.z_rs, imp.z_st
    # left A^-1 right = (A^-T left^T)^T right
    y = lu_solve_checked(a.T, left.reshape(-1), "RIS block")
    return y @ right


def channel_full(imp: ImpedanceSet, ris: RISConfig) -> ChannelVector:
    row = imp.z_rot.reshape(-1) - math.sqrt(imp.gain) * ris_term(imp, ris, True)
    return ChannelVector(imp.ue_factor * _apply_tx(imp, row), Variant.FULL)


def channel_direct(imp: ImpedanceSet) -> ChannelVector:
    return ChannelVector(imp.ue_factor * _apply_tx(imp, imp.z_rt), Variant.DIRECT)


def channel_ris_only(imp: ImpedanceSet, ris: RISConfig) -> ChannelVector:
    row = -math.sqrt(imp.gain) * ris_term(imp, ris, False)
    return ChannelVector(imp.ue_factor * _apply_tx(imp, row), Variant.RIS_ONLY)


def channel_cluster_only(imp: ImpedanceSet) -> ChannelVector:
    if imp.n_c == 0:
        return ChannelVector(np.zeros(imp.m, dtype=complex), Variant.CLUSTER_ONLY)
    y = lu_solve_checked((imp.z_oo + np.diag(imp.z_us)).T, imp.z_ro.reshape(-1),
                         "cluster block Z_OO + Z_US")
    row = -(y @ imp.z_ot)
    return ChannelVector(imp.ue_factor * _apply_tx(imp, row), Variant.CLUSTER_ONLY)


def channel(imp: ImpedanceSet, ris: RISConfig | None, variant: Variant) -> ChannelVector:
    variant = Variant(variant)
    if variant is Variant.FULL:
        return channel_full(imp, ris)
    if variant is Variant.DIRECT:
        return channel_direct(imp)
    if variant is Variant.RIS_ONLY:
        return channel_ris_only(imp, ris)
    return channel_cluster_only(imp)


def received_power_db(h: ChannelVector, w) -> float:
    """``10 log10 |h^H w|^2``; ``-inf`` for a vanishing product (reports print "no path")."""
    w = getattr(w, "w", w)
    w = np.asarray(w, dtype=complex).reshape(-1)
    if w.size != len(h):
        raise ValueError(f"precoder has {w.size} weights, channel has {len(h)}")
    p = abs(complex(h.h @ w)) ** 2
    return 10.0 * math.log10(p) if p > 0 else -math.inf


def receive(h: ChannelVector, w, x: complex = 1.0, noise: complex = 0.0) -> ReceiveSample:
    w = np.asarray(getattr(w, "w", w), dtype=complex).reshape(-1)
    return ReceiveSample(complex(h.h @ w) * x + noise, x, noise)


# --- independent multiport oracle -----------------------------------------


def _port_layout(scene: Scene, include_ris: bool):
    blocks = [("T", scene.tx)]
    if include_ris:
        blocks.append(("S", scene.ris))
    blocks += [("O", c) for c in scene.clusters]
    blocks.append(("R", scene.ue))
    tags = np.concatenate([[t] * len(a) for t, a in blocks])
    pos = np.concatenate([a.positions for _, a in blocks])
    lengths = np.concatenate([a.lengths for _, a in blocks])
    return tags, pos, lengths


def _oracle_transfer(scene: Scene, ris: RISConfig, include_ris: bool, unilateral: bool) -> np.ndarray:
    tags, pos, lengths = _port_layout(scene, include_ris)
    z = pair_block(pos, lengths, pos, lengths, scene.wavelength, scene.radius)
    z_g, z_l, _, _ = terminations(scene)
    loads = np.empty(len(tags), dtype=complex)
    loads[tags == "T"] = z_g
    if include_ris:
        loads[tags == "S"] = ris.loads
    loads[tags == "O"] = scene.cluster_loads
    loads[tags == "R"] = z_l
    z = z + np.diag(loads)
    if unilateral:
        tx = tags == "T"
        passive = ~tx
        scat = (tags == "S") | (tags == "O")
        z[np.ix_(tx, passive)] = 0.0
        z[np.ix_(scat, tags == "R")] = 0.0
    m = scene.m
    rhs = np.zeros((len(tags), m), dtype=complex)
    rhs[np.flatnonzero(tags == "T"), np.arange(m)] = 1.0
    lu = sla.lu_factor(z)
    currents = sla.lu_solve(lu, rhs)
    resid = np.linalg.norm(z @ currents - rhs) / np.linalg.norm(rhs)
    if not np.all(np.isfinite(currents)) or resid > 1e-8:
        rcond, _ = sla.lapack.zgecon(lu[0], np.linalg.norm(z, 1), norm="1")
        cond = np.inf if rcond == 0 else 1.0 / rcond
        raise NumericalError(f"singular multiport matrix, condition estimate {cond:.3e}", cond)
    scale = 10.0 ** (scene.power_offset_db / 20.0)
    return -scale * z_l * currents[tags == "R"].reshape(-1)


def multiport_oracle(scene: Scene, ris: RISConfig, unilateral: bool = True) -> ChannelVector:
    """Channel from one dense solve over every port (TX, RIS, clusters, UE).

    TX ports are driven by unit generator voltages behind ``Z_G``; RIS,
    cluster and UE ports are terminated by their loads.  The returned row is
    the UE load voltage per unit generator voltage, with the RIS-induced part
    (difference between solves with and without RIS ports) scaled by
    ``sqrt(G)``.  ``unilateral=False`` keeps all back-couplings and then
    differs from the closed model.
    """
    with_ris = _oracle_transfer(scene, ris, True, unilateral)
    if scene.n == 0:
        return ChannelVector(with_ris, Variant.FULL)
    without = _oracle_transfer(scene, ris, False, unilateral)
    h = without + math.sqrt(scene.gain_linear) * (with_ris - without)
    return ChannelVector(h, Variant.FULL)
