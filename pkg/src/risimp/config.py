"""Scene configuration files (TOML).

Sections and units::

    [carrier]   frequency_ghz (GHz), gain_dbi (dBi), power_offset_db (dB),
                wire_radius (wavelengths, optional)
    [tx]        position (m), rows, cols, pitch (wavelengths), length (wavelengths),
                normal_deg (global bearing of the panel normal, deg),
                steer_deg = [azimuth, elevation] (panel frame, deg),
                load = [re, im] (Ohm, optional; default conjugate match)
    [ris]       position, rows, cols, pitch, length, normal_deg, steer_deg,
                resistance (Ohm), beam_distance (m)
    [ue]        position (m), length (wavelengths), load = [re, im] (optional)
    [[cluster]] n_x, n_y (default 2 n_x), spacing (wavelengths), cylinder_radius (m),
                center (m, optional; default solved from the measured path),
                load_real (Ohm), facing ("ue", "specular" or bearing in deg),
                facing_offset_deg, and either reactance_seed or reactances (Ohm)

Every key is optional; an empty file gives the default scene.
"""

from __future__ import annotations

import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import scene as sc
from .errors import ValidationError
from .scene import ClusterSpec, DipoleArray, Role, Scene

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

REACTANCE_RANGE = (-330.0, 100.0)

_PANEL_DEFAULTS = {
    "tx": dict(position=list(sc.TX_CENTER), rows=20, cols=20, pitch=0.5, length=0.5,
               normal_deg=sc.TX_NORMAL_DEG, steer_deg=[-35.0, 0.0]),
    "ris": dict(position=list(sc.RIS_CENTER), rows=40, cols=40, pitch=0.5, length=0.5,
                normal_deg=sc.RIS_NORMAL_DEG, steer_deg=[-10.0, 0.0], resistance=0.0,
                beam_distance=200.0),
}
_KEYS = {
    "carrier": {"frequency_ghz", "gain_dbi", "power_offset_db", "wire_radius"},
    "tx": {"position", "rows", "cols", "pitch", "length", "normal_deg", "steer_deg", "load"},
    "ris": {"position", "rows", "cols", "pitch", "length", "normal_deg", "steer_deg",
            "resistance", "beam_distance"},
    "ue": {"position", "length", "load"},
    "cluster": {"n_x", "n_y", "spacing", "cylinder_radius", "center", "load_real", "facing",
                "facing_offset_deg", "reactance_seed", "reactances"},
}


def _check_keys(section: str, table: dict):
    if not isinstance(table, dict):
        raise ValidationError(f"[{section}] must be a table")
    unknown = sorted(set(table) - _KEYS[section])
    if unknown:
        raise ValidationError(f"[{section}] unknown field {unknown[0]!r}")


def _number(section, table, key, default, kind=float, positive=False):
    v = table.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(f"[{section}] {key} must be a number")
    if kind is int:
        if int(v) != v:
            raise ValidationError(f"[{section}] {key} must be an integer")
        v = int(v)
    else:
        v = float(v)
        if not math.isfinite(v):
            raise ValidationError(f"[{section}] {key} must be finite")
    if positive and not v > 0:
        raise ValidationError(f"[{section}] {key} must be positive")
    return v


def _vector(section, table, key, default, size):
    v = table.get(key, default)
    if not isinstance(v, (list, tuple)) or len(v) != size:
        raise ValidationError(f"[{section}] {key} must be a list of {size} numbers")
    try:
        out = [float(x) for x in v]
    except (TypeError, ValueError):
        raise ValidationError(f"[{section}] {key} must be a list of {size} numbers") from None
    if not all(math.isfinite(x) for x in out):
        raise ValidationError(f"[{section}] {key} must be finite")
    return out


def _load(section, table):
    if "load" not in table:
        return None
    re, im = _vector(section, table, "load", None, 2)
    return complex(re, im)


def _panel(name: str, table: dict, lam: float, role: Role):
    d = _PANEL_DEFAULTS[name]
    rows = _number(name, table, "rows", d["rows"], int, positive=True)
    cols = _number(name, table, "cols", d["cols"], int, positive=True)
    pitch = _number(name, table, "pitch", d["pitch"], positive=True)
    length = _number(name, table, "length", d["length"], positive=True)
    normal = sc.bearing_vector(_number(name, table, "normal_deg", d["normal_deg"]))
    pos = _vector(name, table, "position", d["position"], 3)
    arr = sc.planar_array(pos, normal, rows, cols, pitch * lam, length * lam, role)
    steer = tuple(_vector(name, table, "steer_deg", d["steer_deg"], 2))
    return arr, normal, steer


def _cluster(i: int, table: dict, lam: float) -> ClusterSpec:
    name = f"cluster {i}"
    _check_keys("cluster", table)
    n_x = _number(name, table, "n_x", 35, int, positive=True)
    n_y = _number(name, table, "n_y", sc.CLUSTER_RATIO * n_x, int, positive=True)
    spacing = _number(name, table, "spacing", 0.25, positive=True) * lam
    radius = _number(name, table, "cylinder_radius", sc.CLUSTER_RADIUS, positive=True)
    center = (_vector(name, table, "center", None, 3) if "center" in table
              else sc.default_cluster_center(radius=radius))
    facing = table.get("facing", "specular")
    if not isinstance(facing, (str, int, float)) or isinstance(facing, bool):
        raise ValidationError(f"[{name}] facing must be 'ue', 'specular' or a bearing")
    offset = _number(name, table, "facing_offset_deg",
                     sc.CLUSTER_FACING_OFFSET_DEG if facing == "specular" else 0.0)
    if "reactance_seed" in table and "reactances" in table:
        raise ValidationError(f"[{name}] give either reactance_seed or reactances, not both")
    reactances = None
    if "reactances" in table:
        x = table["reactances"]
        if not isinstance(x, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                              for v in x):
            raise ValidationError(f"[{name}] reactances must be a list of numbers")
        reactances = x
    elif "reactance_seed" in table:
        seed = table["reactance_seed"]
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ValidationError(f"[{name}] reactance_seed must be a non-negative integer")
        reactances = np.random.default_rng(seed).uniform(*REACTANCE_RANGE, n_x * n_y)
    return ClusterSpec(n_x=n_x, n_y=n_y, spacing=spacing, center=tuple(center), cylinder_radius=radius,
                       load_real=_number(name, table, "load_real", 100.0),
                       reactances=None if reactances is None else tuple(np.asarray(reactances, float)),
                       facing=facing, facing_offset=offset)


def scene_from_dict(cfg: dict) -> Scene:
    """Build and validate a scene from a parsed configuration mapping."""
    unknown = sorted(set(cfg) - set(_KEYS))
    if unknown:
        raise ValidationError(f"unknown section [{unknown[0]}]")
    carrier = cfg.get("carrier", {})
    _check_keys("carrier", carrier)
    lam = sc.wavelength_for(_number("carrier", carrier, "frequency_ghz", sc.DEFAULT_FREQUENCY_GHZ,
                                    positive=True))
    tx_t, ris_t, ue_t = cfg.get("tx", {}), cfg.get("ris", {}), cfg.get("ue", {})
    for name, table in (("tx", tx_t), ("ris", ris_t), ("ue", ue_t)):
        _check_keys(name, table)
    tx, tx_normal, tx_steer = _panel("tx", tx_t, lam, Role.TX)
    ris, ris_normal, ris_steer = _panel("ris", ris_t, lam, Role.RIS)
    ue_len = _number("ue", ue_t, "length", 0.5, positive=True) * lam
    ue = DipoleArray(np.array([_vector("ue", ue_t, "position", list(sc.UE_POSITION), 3)]), ue_len, Role.UE)
    radius = carrier.get("wire_radius")
    scene = Scene(
        tx=tx, ris=ris, ue=ue, wavelength=lam,
        antenna_gain_db=_number("carrier", carrier, "gain_dbi", sc.DEFAULT_GAIN_DBI),
        tx_normal=tx_normal, ris_normal=ris_normal,
        wire_radius=None if radius is None else _number("carrier", carrier, "wire_radius", 0,
                                                         positive=True) * lam,
        tx_load=_load("tx", tx_t), ue_load=_load("ue", ue_t),
        ris_resistance=_number("ris", ris_t, "resistance", 0.0),
        tx_steer=tx_steer, ris_steer=ris_steer,
        ris_beam_distance=_number("ris", ris_t, "beam_distance", 200.0, positive=True),
        power_offset_db=_number("carrier", carrier, "power_offset_db", sc.POWER_OFFSET_DB),
    )
    clusters = cfg.get("cluster", [])
    if isinstance(clusters, dict):
        clusters = [clusters]
    for i, table in enumerate(clusters):
        spec = _cluster(i, table, lam)
        arr = sc.build_cluster(spec, lam, ue.positions[0], tx.center)
        scene = replace(scene, clusters=scene.clusters + (arr,),
                        cluster_specs=scene.cluster_specs + (spec,))
    return scene


def load_scene(path) -> Scene:
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    except OSError as exc:
        raise ValidationError(f"cannot read scene file {path}: {exc.strerror}") from None
    return scene_from_dict(cfg)


def load_scene_text(text: str) -> Scene:
    try:
        return scene_from_dict(tomllib.loads(text))
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(str(exc)) from None


def fitted_scene_path() -> Path:
    return Path(__file__).with_name("data") / "fitted_scene.toml"


def load_fitted_scene() -> Scene:
    """Default scene plus the fitted pillar cluster shipped with the package."""
    return load_scene(fitted_scene_path())


def _clean(v: float) -> float:
    # drop round-off from recomputed centres and pitches
    return float(round(float(v), 12)) + 0.0


def _bearing_deg(v) -> float:
    return _clean(math.degrees(math.atan2(v[1], v[0])))


def _panel_table(arr: DipoleArray, normal, steer, lam: float) -> dict:
    rows, cols = arr.grid
    pos = arr.positions
    pitch = np.linalg.norm(pos[1] - pos[0]) if cols > 1 else abs(pos[cols, 2] - pos[0, 2])
    return {"position": [_clean(v) for v in arr.center], "rows": rows, "cols": cols,
            "pitch": _clean(pitch / lam), "length": _clean(arr.lengths[0] / lam),
            "normal_deg": _bearing_deg(normal), "steer_deg": [float(s) for s in steer]}


def scene_to_dict(scene: Scene, reactance_seeds=None) -> dict:
    """Inverse of ``scene_from_dict`` for scenes built from panels and cluster specs.

    ``reactance_seeds`` (one per cluster, or None entries) replaces the
    explicit reactance lists by the seed that regenerates them.
    """
    lam = scene.wavelength
    carrier = {"frequency_ghz": round(float(sc.SPEED_OF_LIGHT / lam / 1e9), 9), "gain_dbi": scene.antenna_gain_db,
               "power_offset_db": scene.power_offset_db}
    if scene.wire_radius is not None:
        carrier["wire_radius"] = scene.wire_radius / lam
    tx = _panel_table(scene.tx, scene.tx_normal, scene.tx_steer, lam)
    if scene.tx_load is not None:
        tx["load"] = [complex(scene.tx_load).real, complex(scene.tx_load).imag]
    ris = _panel_table(scene.ris, scene.ris_normal, scene.ris_steer, lam)
    ris.update(resistance=scene.ris_resistance, beam_distance=scene.ris_beam_distance)
    ue = {"position": [_clean(v) for v in scene.ue.positions[0]], "length": _clean(scene.ue.lengths[0] / lam)}
    if scene.ue_load is not None:
        ue["load"] = [complex(scene.ue_load).real, complex(scene.ue_load).imag]
    out = {"carrier": carrier, "tx": tx, "ris": ris, "ue": ue}
    clusters = []
    seeds = reactance_seeds or [None] * len(scene.cluster_specs)
    for spec, seed in zip(scene.cluster_specs, seeds):
        t = {"n_x": spec.n_x, "n_y": spec.n_y, "spacing": _clean(spec.spacing / lam),
             "cylinder_radius": spec.cylinder_radius, "center": list(spec.center),
             "load_real": spec.load_real, "facing": spec.facing, "facing_offset_deg": spec.facing_offset}
        if seed is not None:
            t["reactance_seed"] = int(seed)
        elif spec.reactances is not None:
            t["reactances"] = list(spec.reactances)
        clusters.append(t)
    if clusters:
        out["cluster"] = clusters
    return out


HEADER = """\
# Scene configuration.  Units: positions and radii in metres, pitch, length,
# spacing and wire_radius in wavelengths, angles in degrees (normal_deg is the
# global bearing of a panel normal, steer_deg is panel-local azimuth and
# elevation), loads and reactances in Ohm, power_offset_db in dB.
"""


def dump_scene(scene: Scene, path, reactance_seeds=None, comment: str = ""):
    import tomli_w

    text = HEADER + "".join(f"# {line}\n" for line in comment.splitlines() if line)
    text += "\n" + tomli_w.dumps(scene_to_dict(scene, reactance_seeds))
    Path(path).write_text(text)
