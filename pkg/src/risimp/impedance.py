"""Self and mutual impedances of thin dipoles, and the blocks of the channel model.

Kernel: induced-EMF method with sinusoidal currents on parallel, staggered
z-directed dipoles, closed form in sine/cosine integrals.  Radial distances use
the reduced thin-wire kernel ``sqrt(rho**2 + a**2)`` for every pair, so the
self impedance is the ``rho = 0`` case and end-to-end collinear neighbours stay
finite.
"""

from __future__ import annotations

import hashlib
import math
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from . import kernels
from .errors import NumericalError, ValidationError
from .scene import MIN_SEPARATION, Dipole, DipoleArray, Scene, check_distinct

_CHUNK = 1 << 19
_Z_AXIS = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class RISConfig:
    """Diagonal RIS loads ``Z_RIS = diag(r0 + j x)``."""

    r0: float
    reactances: np.ndarray

    def __post_init__(self):
        if self.r0 < 0:
            raise ValidationError("r0 must be non-negative")
        x = np.array(self.reactances, dtype=float).reshape(-1)
        if not np.all(np.isfinite(x)):
            raise ValidationError("reactances must be finite")
        x.setflags(write=False)
        object.__setattr__(self, "reactances", x)
        object.__setattr__(self, "r0", float(self.r0))

    def __len__(self):
        return self.reactances.size

    @property
    def loads(self) -> np.ndarray:
        return self.r0 + 1j * self.reactances

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.loads)

    @classmethod
    def uniform(cls, n: int, r0: float = 0.0, x: float = 0.0) -> RISConfig:
        return cls(r0, np.full(n, float(x)))


@dataclass(frozen=True)
class ImpedanceSet:
    """Blocks of the channel model for one scene.

    ``z_rl`` and ``z_tg`` are the terminated self blocks (``Z_RR + Z_L`` and
    ``Z_TT + Z_G``); ``z_l`` is the UE load alone.  Blocks with an ``o`` in the
    name carry the scatterer-mediated couplings.
    """

    wavelength: float
    gain: float
    z_l: complex
    z_rl: complex
    z_tg: np.ndarray
    z_rt: np.ndarray
    z_rs: np.ndarray
    z_st: np.ndarray
    z_ss: np.ndarray
    z_ro: np.ndarray
    z_oo: np.ndarray
    z_ot: np.ndarray
    z_so: np.ndarray
    z_us: np.ndarray
    z_rot: np.ndarray
    z_ros: np.ndarray
    z_sot: np.ndarray
    z_sos: np.ndarray
    norm_db: float = 0.0

    @property
    def m(self) -> int:
        return self.z_tg.shape[0]

    @property
    def n(self) -> int:
        return self.z_ss.shape[0]

    @property
    def n_c(self) -> int:
        return self.z_oo.shape[0]

    @property
    def ue_factor(self) -> complex:
        """Voltage-divider factor ``Z_L / (Z_RR + Z_L)`` at the UE, times the power normalization."""
        return 10.0 ** (self.norm_db / 20.0) * self.z_l / self.z_rl


def _check_parallel(a: Dipole, b: Dipole):
    if abs(abs(a.orientation @ b.orientation) - 1.0) > 1e-12:
        raise ValidationError("only parallel dipoles are supported")
    if abs(abs(a.orientation @ _Z_AXIS) - 1.0) > 1e-12:
        raise ValidationError("only z-directed dipoles are supported")


def _canonical(dx, dy, dz, la, lb, wavelength, radius):
    """Pair geometry in wavelengths, ordered so that Z(a, b) == Z(b, a) bit for bit."""
    rho = np.sqrt(dx * dx + dy * dy + radius * radius) / wavelength
    dz = np.asarray(dz, dtype=float) / wavelength
    h1 = np.broadcast_to(np.asarray(la, dtype=float) / (2.0 * wavelength), rho.shape)
    h2 = np.broadcast_to(np.asarray(lb, dtype=float) / (2.0 * wavelength), rho.shape)
    dz = np.broadcast_to(dz, rho.shape)
    swap = (h1 > h2) | ((h1 == h2) & (dz < 0))
    h1, h2 = np.where(swap, h2, h1), np.where(swap, h1, h2)
    dz = np.where(swap, -dz, dz)
    return rho, np.zeros_like(rho), h1, dz, h2


def _check_lengths(lengths, wavelength):
    if np.any(np.asarray(lengths) >= wavelength):
        raise ValidationError("dipole length must be shorter than one wavelength")


def mutual_impedance(a: Dipole, b: Dipole, wavelength: float, radius: float | None = None) -> complex:
    """Mutual impedance (Ohm) between two parallel z-directed dipoles."""
    _check_parallel(a, b)
    if np.linalg.norm(a.position - b.position) <= MIN_SEPARATION:
        raise ValidationError("coincident dipoles have no mutual impedance")
    _check_lengths([a.length, b.length], wavelength)
    radius = wavelength / 500.0 if radius is None else radius
    d = b.position - a.position
    geo = _canonical(np.array([d[0]]), np.array([d[1]]), np.array([d[2]]),
                     a.length, b.length, wavelength, radius)
    return complex(kernels.mutual_pairs(*geo)[0])


def self_impedance(a: Dipole, wavelength: float, radius: float | None = None) -> complex:
    """Self impedance (Ohm) of a thin dipole with wire radius ``radius`` (default lambda/500)."""
    _check_lengths([a.length], wavelength)
    radius = wavelength / 500.0 if radius is None else radius
    geo = _canonical(np.zeros(1), np.zeros(1), np.zeros(1), a.length, a.length, wavelength, radius)
    return complex(kernels.mutual_pairs(*geo)[0])


def pair_block(pa, la, pb, lb, wavelength: float, radius: float) -> np.ndarray:
    """Dense ``len(pa) x len(pb)`` block of pairwise kernel values."""
    pa = np.asarray(pa, dtype=float).reshape(-1, 3)
    pb = np.asarray(pb, dtype=float).reshape(-1, 3)
    la = np.broadcast_to(np.asarray(la, dtype=float), (pa.shape[0],))
    lb = np.broadcast_to(np.asarray(lb, dtype=float), (pb.shape[0],))
    _check_lengths(la, wavelength)
    _check_lengths(lb, wavelength)
    out = np.empty((pa.shape[0], pb.shape[0]), dtype=complex)
    rows = max(1, _CHUNK // max(1, pb.shape[0]))
    for i0 in range(0, pa.shape[0], rows):
        sl = slice(i0, i0 + rows)
        d = pb[None, :, :] - pa[sl, None, :]
        geo = _canonical(d[..., 0], d[..., 1], d[..., 2], la[sl, None], lb[None, :],
                         wavelength, radius)
        out[sl] = kernels.mutual_pairs(*geo)
    return out


def array_block(arr: DipoleArray, wavelength: float, radius: float) -> np.ndarray:
    """Self/mutual block of one array; exactly complex-symmetric."""
    n = len(arr)
    if arr.grid is not None and np.all(arr.lengths == arr.lengths[0]):
        rows, cols = arr.grid
        ref = arr.positions[0]
        table_pos = arr.positions.reshape(rows, cols, 3)
        d = table_pos - ref
        geo = _canonical(d[..., 0], d[..., 1], d[..., 2], arr.lengths[0], arr.lengths[0],
                         wavelength, radius)
        table = kernels.mutual_pairs(*geo)
        r = np.repeat(np.arange(rows), cols)
        c = np.tile(np.arange(cols), rows)
        return table[np.abs(r[:, None] - r[None, :]), np.abs(c[:, None] - c[None, :])]
    out = pair_block(arr.positions, arr.lengths, arr.positions, arr.lengths, wavelength, radius)
    iu = np.triu_indices(n, 1)
    out[(iu[1], iu[0])] = out[iu]
    return out


def lu_solve_checked(a: np.ndarray, b: np.ndarray, what: str = "system", tol: float = 1e-8):
    """LU solve with a residual check; raises ``NumericalError`` above ``tol``."""
    if a.shape[0] == 0:
        return np.zeros_like(b, dtype=complex)
    with warnings.catch_warnings():
        # singularity is diagnosed below from the residual
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu = sla.lu_factor(a, check_finite=True)
        x = sla.lu_solve(lu, b)
    resid = np.linalg.norm(a @ x - b) / max(np.linalg.norm(b), np.finfo(float).tiny)
    if not np.all(np.isfinite(x)) or resid > tol:
        rcond, _ = sla.lapack.zgecon(lu[0], np.linalg.norm(a, 1), norm="1")
        cond = np.inf if rcond == 0 else 1.0 / rcond
        raise NumericalError(f"ill-conditioned {what}: relative residual {resid:.3e}, "
                             f"condition estimate {cond:.3e}", condition=cond)
    return x


def terminations(scene: Scene) -> tuple[complex, complex, complex, complex]:
    """TX generator load, UE load and the two self impedances they are matched to."""
    lam, a = scene.wavelength, scene.radius
    tx_self = self_impedance(scene.tx.dipoles[0], lam, a)
    ue_self = self_impedance(scene.ue.dipoles[0], lam, a)
    z_g = np.conj(tx_self) if scene.tx_load is None else complex(scene.tx_load)
    z_l = np.conj(ue_self) if scene.ue_load is None else complex(scene.ue_load)
    return complex(z_g), complex(z_l), tx_self, ue_self


def _all_distinct(scene: Scene):
    arrays = [scene.tx, scene.ris, scene.ue, *scene.clusters]
    check_distinct(np.concatenate([a.positions for a in arrays]), "scene")


def cluster_terms(scene: Scene):
    """``(z_ro, z_oo, z_ot, z_us)`` for all cluster dipoles of the scene."""
    lam, a = scene.wavelength, scene.radius
    if not scene.clusters:
        empty = np.zeros((0, 0), dtype=complex)
        return (np.zeros((1, 0), dtype=complex), empty,
                np.zeros((0, scene.m), dtype=complex), np.zeros(0, dtype=complex))
    blocks = [[array_block(ci, lam, a) if i == j else None for j, cj in enumerate(scene.clusters)]
              for i, ci in enumerate(scene.clusters)]
    for i, ci in enumerate(scene.clusters):
        for j in range(i + 1, len(scene.clusters)):
            cj = scene.clusters[j]
            blocks[i][j] = pair_block(ci.positions, ci.lengths, cj.positions, cj.lengths, lam, a)
            blocks[j][i] = blocks[i][j].T
    z_oo = np.block(blocks)
    pos = np.concatenate([c.positions for c in scene.clusters])
    lengths = np.concatenate([c.lengths for c in scene.clusters])
    z_ro = pair_block(scene.ue.positions, scene.ue.lengths, pos, lengths, lam, a)
    z_ot = pair_block(pos, lengths, scene.tx.positions, scene.tx.lengths, lam, a)
    return z_ro, z_oo, z_ot, scene.cluster_loads


def tx_terms(scene: Scene):
    """``(z_tg, z_rt, z_l, z_rl)``: terminated TX block, UE-TX row, UE load and ``Z_RR + Z_L``."""
    lam, a = scene.wavelength, scene.radius
    z_g, z_l, _, ue_self = terminations(scene)
    z_tg = array_block(scene.tx, lam, a) + z_g * np.eye(scene.m)
    z_rt = pair_block(scene.ue.positions, scene.ue.lengths, scene.tx.positions, scene.tx.lengths, lam, a)
    z_rl = ue_self + z_l
    if abs(z_rl) <= 1e-12 * abs(ue_self):
        raise NumericalError("UE load cancels the UE self impedance (Z_RR + Z_L = 0)", condition=math.inf)
    return z_tg, z_rt, z_l, z_rl


def assemble(scene: Scene) -> ImpedanceSet:
    """Evaluate every block and fold the clusters into the scatterer-inclusive blocks.

    The clusters are eliminated as a terminated multiport: with
    ``B = Z_OO + Z_US``, every coupling ``Z_pq`` becomes ``Z_pq - Z_pO B^-1 Z_Oq``.
    """
    _all_distinct(scene)
    lam, a = scene.wavelength, scene.radius
    z_tg, z_rt, z_l, z_rl = tx_terms(scene)
    ris, ue, tx = scene.ris, scene.ue, scene.tx
    z_ss = array_block(ris, lam, a)
    z_rs = pair_block(ue.positions, ue.lengths, ris.positions, ris.lengths, lam, a)
    z_st = pair_block(ris.positions, ris.lengths, tx.positions, tx.lengths, lam, a)
    z_ro, z_oo, z_ot, z_us = cluster_terms(scene)
    if scene.n_c:
        pos = np.concatenate([c.positions for c in scene.clusters])
        lengths = np.concatenate([c.lengths for c in scene.clusters])
        z_so = pair_block(ris.positions, ris.lengths, pos, lengths, lam, a)
        rhs = np.concatenate([z_ot, z_so.T], axis=1)
        sol = lu_solve_checked(z_oo + np.diag(z_us), rhs, "cluster block Z_OO + Z_US")
        via_t, via_s = sol[:, :scene.m], sol[:, scene.m:]
        z_rot = z_rt - z_ro @ via_t
        z_ros = z_rs - z_ro @ via_s
        z_sot = z_st - z_so @ via_t
        z_sos = -z_so @ via_s
        z_sos = 0.5 * (z_sos + z_sos.T)
    else:
        z_so = np.zeros((scene.n, 0), dtype=complex)
        z_rot, z_ros, z_sot = z_rt.copy(), z_rs.copy(), z_st.copy()
        z_sos = np.zeros_like(z_ss)
    return ImpedanceSet(wavelength=lam, gain=scene.gain_linear, z_l=z_l, z_rl=z_rl, z_tg=z_tg,
                        z_rt=z_rt, z_rs=z_rs, z_st=z_st, z_ss=z_ss, z_ro=z_ro, z_oo=z_oo,
                        z_ot=z_ot, z_so=z_so, z_us=z_us, z_rot=z_rot, z_ros=z_ros,
                        z_sot=z_sot, z_sos=z_sos, norm_db=scene.power_offset_db)


# --- binary cache ----------------------------------------------------------
#
# Layout (little-endian):
#   8s   magic b"RISIMP01"
#   32s  sha256 of the scene (scene_digest)
#   3I   M, N, N_c
#   3d   wavelength, gain, power normalization (dB)
#   then, in ImpedanceSet field order after ``gain``, each block as
#   complex128 in C order with its shape implied by (M, N, N_c).

_MAGIC = b"RISIMP01"
_HEADER = struct.Struct("<8s32s3I3d")


def scene_digest(scene: Scene) -> bytes:
    h = hashlib.sha256()
    for arr in (scene.tx, scene.ris, scene.ue, *scene.clusters):
        h.update(arr.role.value.encode())
        h.update(np.ascontiguousarray(arr.positions, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(arr.lengths, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(scene.cluster_loads, dtype="<c16").tobytes())
    h.update(repr((scene.wavelength, scene.radius, scene.antenna_gain_db,
                   scene.tx_load, scene.ue_load, scene.power_offset_db)).encode())
    return h.digest()


def _block_shapes(m, n, nc):
    return {"z_l": (), "z_rl": (), "z_tg": (m, m), "z_rt": (1, m), "z_rs": (1, n),
            "z_st": (n, m), "z_ss": (n, n), "z_ro": (1, nc), "z_oo": (nc, nc),
            "z_ot": (nc, m), "z_so": (n, nc), "z_us": (nc,), "z_rot": (1, m),
            "z_ros": (1, n), "z_sot": (n, m), "z_sos": (n, n)}


def save_cache(imp: ImpedanceSet, path, scene: Scene):
    shapes = _block_shapes(imp.m, imp.n, imp.n_c)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, scene_digest(scene), imp.m, imp.n, imp.n_c,
                              imp.wavelength, imp.gain, imp.norm_db))
        for name in shapes:
            fh.write(np.ascontiguousarray(getattr(imp, name), dtype="<c16").tobytes())


def load_cache(path, scene: Scene | None = None) -> ImpedanceSet:
    """Read a cache file; with ``scene`` given, reject a digest mismatch."""
    data = Path(path).read_bytes()
    magic, digest, m, n, nc, lam, gain, norm_db = _HEADER.unpack_from(data, 0)
    if magic != _MAGIC:
        raise ValidationError("not an impedance cache file")
    if scene is not None and digest != scene_digest(scene):
        raise ValidationError("impedance cache does not match the scene")
    off = _HEADER.size
    values = {}
    for name, shape in _block_shapes(m, n, nc).items():
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(data, dtype="<c16", count=count, offset=off).astype(complex)
        off += 16 * count
        values[name] = complex(arr[0]) if not shape else arr.reshape(shape)
    return ImpedanceSet(wavelength=lam, gain=gain, norm_db=norm_db, **values)


def assemble_cached(scene: Scene, cache_dir=None) -> ImpedanceSet:
    if cache_dir is None:
        return assemble(scene)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = cache_dir / (scene_digest(scene).hex()[:24] + ".zcache")
    if path.exists():
        return load_cache(path, scene)
    imp = assemble(scene)
    save_cache(imp, path, scene)
    return imp
