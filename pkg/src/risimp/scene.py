"""Scene geometry: dipole arrays for the transmitter, RIS, UE and scatterer clusters.

Frame conventions
-----------------
* Global frame in metres; all devices sit in the azimuth plane ``z = 0``.
* Every dipole is z-directed.
* A planar panel is a vertical plane with horizontal unit normal ``n``.  Its
  in-plane horizontal axis is ``u = z x n`` (``n`` rotated by +90 deg), and
  element ``(row, col)`` has index ``row * cols + col``: left-to-right along
  ``u``, then bottom-to-top along ``z``.
* Panel-local azimuth is measured from ``n`` towards ``u`` (counter-clockwise
  about ``+z``); elevation is measured from the horizontal plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.spatial import cKDTree

from .errors import ValidationError

DEFAULT_FREQUENCY_GHZ = 28.0
DEFAULT_GAIN_DBI = 6.0
MIN_SEPARATION = 1e-9

TX_CENTER = (0.0, 0.0, 0.0)
RIS_CENTER = (-2.0, -3.0, 0.0)
UE_POSITION = (1.0, -3.6, 0.0)
# Calibrated against the measured direct/reflected powers (see README):
# TX normal bearing, and the overall power normalization.
TX_NORMAL_DEG = -90.0
RIS_NORMAL_DEG = 33.0
POWER_OFFSET_DB = -25.768
# Arc of the default cluster: turned this far from the specular bearing.
CLUSTER_FACING_OFFSET_DEG = 0.0


def bearing_vector(deg: float) -> tuple[float, float, float]:
    a = math.radians(deg)
    return (math.cos(a), math.sin(a), 0.0)


TX_NORMAL = bearing_vector(TX_NORMAL_DEG)
RIS_NORMAL = bearing_vector(RIS_NORMAL_DEG)

# Measured multipath components seen at the UE: (distance m, AoA deg, power dB)
MPC_DIRECT = (4.0, 14.0, -68.7)
MPC_REFLECTED = (7.2, 76.0, -72.4)
MPC_CLUSTER = (5.69, -50.0, -79.8)

CLUSTER_RADIUS = 0.5
CLUSTER_RATIO = 2


def check_distinct(positions, label: str = "array"):
    """Raise if any two positions are closer than ``MIN_SEPARATION``."""
    if len(positions) > 1:
        pairs = cKDTree(positions).query_pairs(MIN_SEPARATION)
        if pairs:
            i, j = sorted(next(iter(pairs)))
            raise ValidationError(f"{label} elements {i} and {j} coincide")


class Role(str, Enum):
    TX = "TX"
    RIS = "RIS"
    UE = "UE"
    CLUSTER = "CLUSTER"


@dataclass(frozen=True)
class Dipole:
    """A thin z-directed wire dipole."""

    position: np.ndarray
    orientation: np.ndarray
    length: float

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float).reshape(3)
        ori = np.asarray(self.orientation, dtype=float).reshape(3)
        if abs(np.linalg.norm(ori) - 1.0) > 1e-12:
            raise ValidationError("dipole orientation must be a unit vector")
        if not self.length > 0:
            raise ValidationError("dipole length must be positive")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "orientation", ori)
        object.__setattr__(self, "length", float(self.length))


@dataclass(frozen=True)
class DipoleArray:
    """Ordered collection of parallel dipoles sharing one role.

    ``grid`` is ``(rows, cols)`` when the layout is a regular lattice whose
    pair geometry depends only on ``(|drow|, |dcol|)``; impedance assembly
    uses it to fill intra-array blocks from an offset table.
    """

    positions: np.ndarray
    lengths: np.ndarray
    role: Role
    grid: tuple[int, int] | None = None
    orientation: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        pos = np.ascontiguousarray(np.asarray(self.positions, dtype=float).reshape(-1, 3))
        lengths = np.broadcast_to(np.asarray(self.lengths, dtype=float), (pos.shape[0],)).copy()
        if np.any(lengths <= 0):
            raise ValidationError("dipole length must be positive")
        if self.grid is not None and self.grid[0] * self.grid[1] != pos.shape[0]:
            raise ValidationError("grid shape does not match element count")
        check_distinct(pos, Role(self.role).value)
        pos.setflags(write=False)
        lengths.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "role", Role(self.role))

    def __len__(self):
        return self.positions.shape[0]

    @property
    def dipoles(self) -> list[Dipole]:
        return [Dipole(p, self.orientation, l) for p, l in zip(self.positions, self.lengths)]

    @property
    def center(self) -> np.ndarray:
        return self.positions.mean(axis=0)


@dataclass(frozen=True)
class ClusterSpec:
    """Discrete-dipole model of a scatterer: an arc of loaded dipoles on a cylinder.

    ``spacing`` is in metres.  ``center`` is a point on the cylinder axis.
    ``facing`` selects the bearing of the arc centre seen from the axis:
    ``"ue"`` (toward the UE), ``"specular"`` (bisector of the TX and UE
    bearings) or an explicit global bearing in degrees; ``facing_offset`` (deg)
    is added to it.
    """

    n_x: int
    n_y: int
    spacing: float
    center: tuple[float, float, float]
    cylinder_radius: float = CLUSTER_RADIUS
    load_real: float = 100.0
    reactances: tuple[float, ...] | None = None
    facing: str | float = "ue"
    facing_offset: float = 0.0

    def __post_init__(self):
        if int(self.n_x) != self.n_x or self.n_x <= 0:
            raise ValidationError("n_x must be positive")
        if int(self.n_y) != self.n_y or self.n_y <= 0:
            raise ValidationError("n_y must be positive")
        if not self.spacing > 0:
            raise ValidationError("spacing must be positive")
        if not self.cylinder_radius > 0:
            raise ValidationError("cylinder_radius must be positive")
        if self.reactances is not None:
            x = tuple(float(v) for v in self.reactances)
            if len(x) != self.n_x * self.n_y:
                raise ValidationError("reactances length must equal n_x * n_y")
            object.__setattr__(self, "reactances", x)
        if isinstance(self.facing, str):
            if self.facing not in ("ue", "specular"):
                raise ValidationError("facing must be 'ue', 'specular' or a bearing in degrees")
        elif not math.isfinite(float(self.facing)):
            raise ValidationError("facing bearing must be finite")
        else:
            object.__setattr__(self, "facing", float(self.facing))
        if not math.isfinite(float(self.facing_offset)):
            raise ValidationError("facing_offset must be finite")
        object.__setattr__(self, "facing_offset", float(self.facing_offset))
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))

    @property
    def size(self) -> int:
        return self.n_x * self.n_y

    def with_reactances(self, reactances) -> ClusterSpec:
        return replace(self, reactances=tuple(np.asarray(reactances, dtype=float)))


@dataclass(frozen=True)
class Scene:
    tx: DipoleArray
    ris: DipoleArray
    ue: DipoleArray
    wavelength: float
    clusters: tuple[DipoleArray, ...] = ()
    cluster_specs: tuple[ClusterSpec, ...] = ()
    antenna_gain_db: float = DEFAULT_GAIN_DBI
    tx_normal: tuple[float, float, float] = TX_NORMAL
    ris_normal: tuple[float, float, float] = RIS_NORMAL
    wire_radius: float | None = None
    tx_load: complex | None = None
    ue_load: complex | None = None
    ris_resistance: float = 0.0
    tx_steer: tuple[float, float] = (-35.0, 0.0)
    ris_steer: tuple[float, float] = (-10.0, 0.0)
    ris_beam_distance: float = 200.0
    power_offset_db: float = 0.0

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValidationError("wavelength must be positive")
        if len(self.clusters) != len(self.cluster_specs):
            raise ValidationError("clusters and cluster_specs must pair up")
        if len(self.ue) != 1:
            raise ValidationError("the UE must be a single dipole")
        if self.ris_resistance < 0:
            raise ValidationError("ris_resistance must be non-negative")
        object.__setattr__(self, "clusters", tuple(self.clusters))
        object.__setattr__(self, "cluster_specs", tuple(self.cluster_specs))

    @property
    def m(self) -> int:
        return len(self.tx)

    @property
    def n(self) -> int:
        return len(self.ris)

    @property
    def n_c(self) -> int:
        return sum(len(c) for c in self.clusters)

    @property
    def radius(self) -> float:
        return self.wavelength / 500.0 if self.wire_radius is None else self.wire_radius

    @property
    def gain_linear(self) -> float:
        return 10.0 ** (self.antenna_gain_db / 10.0)

    @property
    def cluster_loads(self) -> np.ndarray:
        """Diagonal of Z_US, concatenated over clusters (reactances default to 0)."""
        parts = []
        for spec in self.cluster_specs:
            x = np.zeros(spec.size) if spec.reactances is None else np.asarray(spec.reactances)
            parts.append(spec.load_real + 1j * x)
        return np.concatenate(parts) if parts else np.zeros(0, dtype=complex)

    def with_cluster(self, spec: ClusterSpec | None) -> Scene:
        """Copy of the scene with its clusters replaced by ``spec`` (or none)."""
        if spec is None:
            return replace(self, clusters=(), cluster_specs=())
        arr = build_cluster(spec, self.wavelength, self.ue.positions[0], self.tx.center)
        return replace(self, clusters=(arr,), cluster_specs=(spec,))


def wavelength_for(frequency_ghz: float) -> float:
    return SPEED_OF_LIGHT / (frequency_ghz * 1e9)


def _unit_horizontal(v) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(3)
    v = np.array([v[0], v[1], 0.0])
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ValidationError("panel normal must have a horizontal component")
    return v / nrm


def direction(normal, azimuth_deg: float, elevation_deg: float) -> np.ndarray:
    """Unit vector at panel-local (azimuth, elevation) for a panel with ``normal``."""
    n = _unit_horizontal(normal)
    u = np.cross([0.0, 0.0, 1.0], n)
    az, el = math.radians(azimuth_deg), math.radians(elevation_deg)
    return math.cos(el) * (math.cos(az) * n + math.sin(az) * u) + math.sin(el) * np.array([0.0, 0.0, 1.0])


def planar_array(center, normal, rows: int, cols: int, pitch: float, length: float, role: Role) -> DipoleArray:
    """Regular ``rows x cols`` panel in the vertical plane with the given normal."""
    if rows <= 0 or cols <= 0:
        raise ValidationError("rows and cols must be positive")
    if not pitch > 0:
        raise ValidationError("pitch must be positive")
    n = _unit_horizontal(normal)
    u = np.cross([0.0, 0.0, 1.0], n)
    col_off = (np.arange(cols) - (cols - 1) / 2.0) * pitch
    row_off = (np.arange(rows) - (rows - 1) / 2.0) * pitch
    rr, cc = np.meshgrid(row_off, col_off, indexing="ij")
    pos = (np.asarray(center, dtype=float)[None, :]
           + cc.reshape(-1, 1) * u[None, :]
           + rr.reshape(-1, 1) * np.array([0.0, 0.0, 1.0])[None, :])
    return DipoleArray(pos, length, role, grid=(rows, cols))


def arc_bearing(spec: ClusterSpec, ue_position, tx_position=TX_CENTER) -> float:
    """Global bearing (rad) from the cylinder axis to the centre of the arc."""
    cx, cy, _ = spec.center
    ue = np.asarray(ue_position, dtype=float)
    to_ue = math.atan2(ue[1] - cy, ue[0] - cx)
    if spec.facing == "ue":
        base = to_ue
    elif spec.facing == "specular":
        tx = np.asarray(tx_position, dtype=float)
        to_tx = math.atan2(tx[1] - cy, tx[0] - cx)
        base = math.atan2(math.sin(to_ue) + math.sin(to_tx), math.cos(to_ue) + math.cos(to_tx))
    else:
        base = math.radians(spec.facing)
    return base + math.radians(spec.facing_offset)


def build_cluster(spec: ClusterSpec, wavelength: float, ue_position, tx_position=TX_CENTER) -> DipoleArray:
    """Lay out ``n_x * n_y`` quarter-wave dipoles on an arc of the cylinder.

    Columns are ``spacing`` apart in arc length, rows ``spacing`` apart in
    height; the arc is centred on the bearing chosen by ``spec.facing``
    (by default the ray from the cylinder axis to the UE).
    """
    r = spec.cylinder_radius
    dphi = spec.spacing / r
    if spec.n_x > 1 and (spec.n_x - 1) * dphi >= 2.0 * math.pi:
        raise ValidationError("cluster arc exceeds the full circumference")
    cx, cy, cz = spec.center
    phi = arc_bearing(spec, ue_position, tx_position) + (np.arange(spec.n_x) - (spec.n_x - 1) / 2.0) * dphi
    z = cz + (np.arange(spec.n_y) - (spec.n_y - 1) / 2.0) * spec.spacing
    zz, pp = np.meshgrid(z, phi, indexing="ij")
    pos = np.stack([cx + r * np.cos(pp), cy + r * np.sin(pp), zz], axis=-1).reshape(-1, 3)
    return DipoleArray(pos, wavelength / 4.0, Role.CLUSTER, grid=(spec.n_y, spec.n_x))


def ue_azimuth_reference(tx_center=TX_CENTER, ris_center=RIS_CENTER, ue=UE_POSITION) -> float:
    """Global bearing (deg) of the UE's local azimuth zero.

    Estimated from the measured AoAs of the direct and RIS-reflected paths:
    each gives ``global bearing - local AoA``; the two estimates are averaged.
    """
    ue = np.asarray(ue, dtype=float)
    est = []
    for src, aoa in ((tx_center, MPC_DIRECT[1]), (ris_center, MPC_REFLECTED[1])):
        d = np.asarray(src, dtype=float) - ue
        est.append(math.degrees(math.atan2(d[1], d[0])) - aoa)
    return float(np.mean(est))


def default_cluster_center(path_length=MPC_CLUSTER[0], aoa_deg=MPC_CLUSTER[1],
                           radius=CLUSTER_RADIUS, tx_center=TX_CENTER, ue=UE_POSITION,
                           reference_deg=None) -> tuple[float, float, float]:
    """Cylinder axis position reproducing the measured cluster path.

    The scattering point lies on the ray leaving the UE at the measured AoA,
    at the distance ``t`` for which ``|P - TX| + t`` equals the path length;
    the axis sits a further ``radius`` beyond it.
    """
    if reference_deg is None:
        reference_deg = ue_azimuth_reference(tx_center=tx_center, ue=ue)
    ue = np.asarray(ue, dtype=float)
    bearing = math.radians(aoa_deg + reference_deg)
    e = np.array([math.cos(bearing), math.sin(bearing), 0.0])
    v = ue - np.asarray(tx_center, dtype=float)
    t = (path_length ** 2 - v @ v) / (2.0 * (v @ e + path_length))
    if t <= 0:
        raise ValidationError("cluster path length is shorter than the direct path")
    c = ue + (t + radius) * e
    return (float(c[0]), float(c[1]), float(c[2]))


def default_cluster_spec(wavelength: float, n_x: int = 35, spacing_wl: float = 0.25,
                         load_real: float = 100.0, reactances=None,
                         facing="specular",
                         facing_offset: float = CLUSTER_FACING_OFFSET_DEG) -> ClusterSpec:
    return ClusterSpec(n_x=n_x, n_y=CLUSTER_RATIO * n_x, spacing=spacing_wl * wavelength,
                       center=default_cluster_center(), load_real=load_real,
                       reactances=reactances, facing=facing, facing_offset=facing_offset)


def build_default_scene(frequency_ghz: float = DEFAULT_FREQUENCY_GHZ, clusters=()) -> Scene:
    """20x20 TX at the origin, 40x40 RIS at (-2, -3, 0), UE at (1, -3.6, 0)."""
    lam = wavelength_for(frequency_ghz)
    tx = planar_array(TX_CENTER, TX_NORMAL, 20, 20, lam / 2, lam / 2, Role.TX)
    ris = planar_array(RIS_CENTER, RIS_NORMAL, 40, 40, lam / 2, lam / 2, Role.RIS)
    ue = DipoleArray(np.array([UE_POSITION]), lam / 2, Role.UE)
    scene = Scene(tx=tx, ris=ris, ue=ue, wavelength=lam, power_offset_db=POWER_OFFSET_DB)
    for spec in clusters:
        scene = replace(scene,
                        clusters=scene.clusters + (build_cluster(spec, lam, UE_POSITION, tx.center),),
                        cluster_specs=scene.cluster_specs + (spec,))
    return scene
