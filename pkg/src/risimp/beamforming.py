"""TX precoder and the fixed RIS beam used to replicate the measurement setup."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError
from .impedance import ImpedanceSet, RISConfig, pair_block
from .scene import Scene, direction

FIXED_BEAM_SWEEPS = 2


@dataclass(frozen=True)
class Precoder:
    w: np.ndarray
    steer_azimuth: float = 0.0
    steer_elevation: float = 0.0

    def __post_init__(self):
        w = np.asarray(self.w, dtype=complex).reshape(-1)
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    def __len__(self):
        return self.w.size

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.w, self.w).real)


def steering_phases(positions, wavelength: float, unit) -> np.ndarray:
    """``exp(j k u . r)``: far-field phase of each element toward ``unit``."""
    k = 2.0 * math.pi / wavelength
    return np.exp(1j * k * (np.asarray(positions) @ np.asarray(unit)))


def steered_precoder(scene: Scene, azimuth: float, elevation: float = 0.0,
                     quantize: bool = False) -> Precoder:
    """Uniform-amplitude conjugate-phase beam toward panel-local (azimuth, elevation).

    Scaled so that ``||w||^2 = M G``.  ``quantize`` rounds each phase to the
    nearer of two states 180 deg apart.
    """
    rel = scene.tx.positions - scene.tx.center
    w = np.conj(steering_phases(rel, scene.wavelength, direction(scene.tx_normal, azimuth, elevation)))
    if quantize:
        w = np.where(np.cos(np.angle(w)) >= 0, 1.0, -1.0).astype(complex)
    w *= math.sqrt(scene.m * scene.gain_linear) / np.linalg.norm(w)
    return Precoder(w, float(azimuth), float(elevation))


def default_precoder(scene: Scene) -> Precoder:
    return steered_precoder(scene, *scene.tx_steer)


def array_factor(positions, weights, wavelength: float, normal, azimuths, elevation: float = 0.0) -> np.ndarray:
    """``|sum_m w_m exp(j k u(az) . r_m)|`` over a grid of panel-local azimuths (deg)."""
    positions = np.asarray(positions)
    rel = positions - positions.mean(axis=0)
    units = np.array([direction(normal, az, elevation) for az in np.atleast_1d(azimuths)])
    k = 2.0 * math.pi / wavelength
    return np.abs(np.exp(1j * k * rel @ units.T).T @ np.asarray(weights))


def virtual_ue_row(scene: Scene, azimuth: float, elevation: float = 0.0,
                   distance: float | None = None) -> np.ndarray:
    """Coupling row ``z_RS`` for a UE dipole placed far away from the RIS centre."""
    distance = scene.ris_beam_distance if distance is None else distance
    unit = direction(scene.ris_normal, azimuth, elevation)
    pos = scene.ris.center + distance * unit
    return pair_block(pos[None, :], scene.ue.lengths, scene.ris.positions, scene.ris.lengths,
                      scene.wavelength, scene.radius)


def fixed_ris_beam(scene: Scene, imp: ImpedanceSet, azimuth: float = -10.0, elevation: float = 0.0,
                   r0: float | None = None, w: Precoder | None = None, budget: int | None = None,
                   seed: int = 0) -> RISConfig:
    """RIS loads that maximize the RIS-only power toward a far-field virtual UE.

    No direct path and no scatterers are seen by the optimizer.  This is the
    configuration standing in for the one used during the measurements.  The
    default ``budget`` is two sweeps over the elements.
    """
    from .channel import Variant
    from .optimize import maximize_power

    if imp.n == 0:
        raise ValidationError("scene has no RIS")
    r0 = scene.ris_resistance if r0 is None else r0
    w = default_precoder(scene) if w is None else w
    budget = FIXED_BEAM_SWEEPS * imp.n if budget is None else budget
    virtual = replace(imp, z_rs=virtual_ue_row(scene, azimuth, elevation))
    result = maximize_power(virtual, w, r0, Variant.RIS_ONLY, budget=budget, seed=seed)
    return result.config


# --- CSV exchange ------------------------------------------------------------


def save_precoder_csv(w: Precoder, path):
    """Columns ``index,real,imag``."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["index", "real", "imag"])
        for i, v in enumerate(w.w):
            out.writerow([i, repr(float(v.real)), repr(float(v.imag))])


def load_precoder_csv(path, expected: int | None = None) -> Precoder:
    rows = _read_csv(path, ["index", "real", "imag"])
    w = np.array([complex(float(r["real"]), float(r["imag"])) for r in rows])
    if expected is not None and w.size != expected:
        raise ValidationError(f"precoder file has {w.size} weights, TX has {expected}")
    return Precoder(w)


def save_ris_csv(cfg: RISConfig, path):
    """Columns ``index,reactance`` (Ohm); ``r0`` is a scene property."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["index", "reactance"])
        for i, x in enumerate(cfg.reactances):
            out.writerow([i, repr(float(x))])


def load_ris_csv(path, r0: float = 0.0, expected: int | None = None) -> RISConfig:
    rows = _read_csv(path, ["index", "reactance"])
    x = np.array([float(r["reactance"]) for r in rows])
    if expected is not None and x.size != expected:
        raise ValidationError(f"RIS file has {x.size} reactances, RIS has {expected}")
    return RISConfig(r0, x)


def _read_csv(path, header):
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != header:
                raise ValidationError(f"{path}: expected header {','.join(header)}")
            rows = list(reader)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    try:
        idx = [int(r["index"]) for r in rows]
    except (TypeError, ValueError):
        raise ValidationError(f"{path}: bad index column") from None
    if idx != list(range(len(rows))):
        raise ValidationError(f"{path}: indices must run 0..n-1 in order")
    for r in rows:
        for k in header[1:]:
            try:
                if not math.isfinite(float(r[k])):
                    raise ValueError
            except (TypeError, ValueError):
                raise ValidationError(f"{path}: row {r['index']} has a bad {k} value") from None
    return rows
