import math

import numpy as np
import pytest
from scipy.spatial import cKDTree

from risimp.errors import ValidationError
from risimp.scene import (CLUSTER_RADIUS, ClusterSpec, Dipole, DipoleArray, Role, Scene, build_cluster,
                          build_default_scene, default_cluster_center, default_cluster_spec,
                          wavelength_for)

LAM = wavelength_for(28.0)
UE = np.array([1.0, -3.6, 0.0])


@pytest.fixture(scope="module")
def default_scene():
    return build_default_scene()


def test_default_scene_counts_and_placement(default_scene):
    s = default_scene
    assert (s.m, s.n, len(s.ue)) == (400, 1600, 1)
    assert abs(s.wavelength - 10.707e-3) < 1e-6
    assert np.allclose(s.tx.center, 0.0, atol=1e-12)
    assert np.allclose(s.ris.center, [-2, -3, 0], atol=1e-12)
    assert np.linalg.norm(s.ue.center - s.tx.center) == pytest.approx(3.736, abs=1e-3)
    assert np.linalg.norm(s.ue.center - s.ris.center) == pytest.approx(3.059, abs=1e-3)
    assert s.antenna_gain_db == 6.0


@pytest.mark.parametrize("role", ["tx", "ris"])
def test_default_pitch_is_half_wavelength(default_scene, role):
    pos = getattr(default_scene, role).positions
    d, _ = cKDTree(pos).query(pos, k=2)
    assert np.max(np.abs(d[:, 1] / (LAM / 2) - 1.0)) < 1e-12


def test_default_panels_vertical_and_row_major(default_scene):
    pos = default_scene.tx.positions
    normal = np.asarray(default_scene.tx_normal)
    assert np.max(np.abs((pos - pos.mean(0)) @ normal)) < 1e-12
    # first row runs left to right at constant height, then rows climb
    assert np.all(pos[:20, 2] == pos[0, 2])
    assert pos[20, 2] > pos[0, 2]


def test_dipole_invariants():
    with pytest.raises(ValidationError):
        Dipole(np.zeros(3), np.array([0, 0, 2.0]), 1.0)
    with pytest.raises(ValidationError):
        Dipole(np.zeros(3), np.array([0, 0, 1.0]), 0.0)
    with pytest.raises(ValidationError, match="coincide"):
        DipoleArray(np.zeros((2, 3)), 1.0, Role.TX)


def test_single_dipole_cluster_faces_ue():
    spec = ClusterSpec(1, 1, LAM / 4, (3.0, -4.0, 0.0), reactances=(0.0,))
    arr = build_cluster(spec, LAM, UE)
    assert len(arr) == 1 and arr.lengths[0] == LAM / 4
    surface = np.array([3.0, -4.0, 0.0]) + CLUSTER_RADIUS * (UE - [3.0, -4.0, 0.0]) / np.linalg.norm(UE - [3.0, -4.0, 0.0])
    assert np.allclose(arr.positions[0], surface, atol=1e-12)


def test_default_cluster_size():
    spec = default_cluster_spec(LAM)
    arr = build_cluster(spec, LAM, UE)
    assert len(arr) == 2450 and (spec.n_x, spec.n_y) == (35, 70)


def test_default_cluster_patch_extent():
    # about 16 x 8 cm: 70 rows of height and a 35-column arc at lambda/4
    spec = default_cluster_spec(LAM)
    arr = build_cluster(spec, LAM, UE)
    height = np.ptp(arr.positions[:, 2])
    arc = (spec.n_x - 1) * spec.spacing
    assert height == pytest.approx(0.16, rel=0.2)
    assert arc == pytest.approx(0.08, rel=0.2)


def test_same_row_chord_lengths():
    r, s = CLUSTER_RADIUS, LAM / 4
    spec = ClusterSpec(2, 2, s, (2.0, -5.0, 0.0))
    p = build_cluster(spec, LAM, UE).positions.reshape(2, 2, 3)
    chord = 2.0 * r * math.sin(s / (2.0 * r))
    for row in p:
        assert np.linalg.norm(row[0] - row[1]) == pytest.approx(chord, rel=1e-12)
    assert np.linalg.norm(p[0, 0] - p[1, 0]) == pytest.approx(s, rel=1e-12)


@pytest.mark.parametrize("facing", ["ue", "specular", 120.0])
def test_cluster_on_cylinder_and_deterministic(facing):
    spec = ClusterSpec(9, 4, LAM / 2, (2.5, -6.0, 0.1), cylinder_radius=0.3, facing=facing, facing_offset=5.0)
    a, b = build_cluster(spec, LAM, UE), build_cluster(spec, LAM, UE)
    assert np.array_equal(a.positions, b.positions)
    radial = np.hypot(a.positions[:, 0] - 2.5, a.positions[:, 1] + 6.0)
    assert np.max(np.abs(radial / 0.3 - 1.0)) < 1e-12
    assert np.all(a.lengths == LAM / 4)


def test_specular_facing_bisects_tx_and_ue():
    c = np.array([2.0, -5.0, 0.0])
    spec = ClusterSpec(1, 1, LAM / 4, tuple(c), facing="specular")
    p = build_cluster(spec, LAM, UE, (0.0, 0.0, 0.0)).positions[0] - c
    to_ue, to_tx = (UE - c) / np.linalg.norm(UE - c), -c / np.linalg.norm(c)
    assert np.dot(p, to_ue) == pytest.approx(np.dot(p, to_tx), rel=1e-12)


def test_cluster_spec_validation():
    with pytest.raises(ValidationError, match="n_x must be positive"):
        ClusterSpec(0, 1, LAM, (0, 0, 0))
    with pytest.raises(ValidationError, match="reactances length"):
        ClusterSpec(2, 1, LAM, (0, 0, 0), reactances=(1.0,))
    with pytest.raises(ValidationError):
        ClusterSpec(2, 1, -1.0, (0, 0, 0))
    with pytest.raises(ValidationError):
        ClusterSpec(2, 1, LAM, (0, 0, 0), facing="north")


def test_arc_longer_than_circumference_rejected():
    spec = ClusterSpec(10, 1, 0.5, (3.0, -5.0, 0.0), cylinder_radius=0.5)
    with pytest.raises(ValidationError, match="circumference"):
        build_cluster(spec, LAM, UE)


def test_default_cluster_center_matches_measured_path():
    c = np.array(default_cluster_center())
    to_ue = (UE - c) / np.linalg.norm(UE - c)
    p = c + CLUSTER_RADIUS * to_ue
    assert np.linalg.norm(p) + np.linalg.norm(UE - p) == pytest.approx(5.69, abs=1e-9)


def test_scene_validation(default_scene):
    from dataclasses import replace
    with pytest.raises(ValidationError):
        replace(default_scene, wavelength=0.0)
    with pytest.raises(ValidationError):
        replace(default_scene, ris_resistance=-1.0)
    with pytest.raises(ValidationError):
        Scene(tx=default_scene.tx, ris=default_scene.ris, ue=default_scene.tx, wavelength=LAM)


def test_with_cluster_round_trip(default_scene):
    spec = ClusterSpec(2, 2, LAM / 4, default_cluster_center(), reactances=(1.0, 2.0, 3.0, 4.0))
    s = default_scene.with_cluster(spec)
    assert s.n_c == 4
    assert np.allclose(s.cluster_loads, 100 + 1j * np.arange(1, 5))
    assert default_scene.with_cluster(None).n_c == 0
