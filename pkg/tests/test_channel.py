import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from conftest import toy_scene
from risimp.channel import (ChannelVector, Variant, channel, channel_cluster_only, channel_direct,
                            channel_full, channel_ris_only, multiport_oracle, receive, received_power_db)
from risimp.errors import NumericalError
from risimp.impedance import RISConfig, assemble


def rel(a, b):
    return np.max(np.abs(a - b)) / np.max(np.abs(b))


def random_ris(rng, n, r0=None):
    return RISConfig(float(rng.uniform(0, 5)) if r0 is None else r0, rng.uniform(-300, 300, n))


@settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 4), n=st.integers(1, 4), n_c=st.integers(0, 3))
def test_full_matches_multiport_oracle(seed, m, n, n_c):
    rng = np.random.default_rng(seed)
    s = toy_scene(rng, m, n, n_c)
    cfg = random_ris(rng, n)
    assert rel(channel_full(assemble(s), cfg).h, multiport_oracle(s, cfg).h) < 1e-10


def test_bilateral_oracle_differs():
    # keeping the back-couplings is a different (non-unilateral) network
    rng = np.random.default_rng(3)
    s = toy_scene(rng, 2, 2, 1)
    cfg = random_ris(rng, 2)
    assert rel(multiport_oracle(s, cfg, unilateral=False).h, channel_full(assemble(s), cfg).h) > 1e-8


def test_zero_cluster_additivity():
    rng = np.random.default_rng(4)
    for _ in range(20):
        s = toy_scene(rng, 3, 4, 0)
        imp = assemble(s)
        cfg = random_ris(rng, 4)
        full = channel_full(imp, cfg).h
        parts = channel_direct(imp).h + channel_ris_only(imp, cfg).h
        assert rel(full, parts) < 1e-12
        oracle = multiport_oracle(s, cfg).h
        assert rel(oracle, parts) < 1e-10


def test_open_ris_matches_direct():
    rng = np.random.default_rng(5)
    s = toy_scene(rng, 3, 3, 0)
    open_cfg = RISConfig(0.0, np.full(3, 1e9))
    assert rel(multiport_oracle(s, open_cfg).h, channel_direct(assemble(s)).h) < 1e-8


def test_open_ris_is_dark():
    rng = np.random.default_rng(6)
    s = toy_scene(rng, 2, 3, 0)
    imp = assemble(s)
    w = np.ones(2)
    tuned = received_power_db(channel_ris_only(imp, RISConfig(0.0, -np.diag(imp.z_ss).imag)), w)
    dark = received_power_db(channel_ris_only(imp, RISConfig(0.0, np.full(3, 1e9))), w)
    assert dark < tuned - 60


def test_scalar_closed_forms():
    rng = np.random.default_rng(7)
    s = toy_scene(rng, 1, 1, 1)
    imp = assemble(s)
    cfg = RISConfig(1.0, [25.0])
    f, g = imp.ue_factor, math.sqrt(imp.gain)
    t = 1.0 / imp.z_tg[0, 0]
    assert channel_direct(imp).h[0] == pytest.approx(f * imp.z_rt[0, 0] * t, rel=1e-14)
    ris = -g * f * imp.z_rs[0, 0] * imp.z_st[0, 0] * t / (imp.z_ss[0, 0] + cfg.loads[0])
    assert channel_ris_only(imp, cfg).h[0] == pytest.approx(ris, rel=1e-13)
    cl = -f * imp.z_ro[0, 0] * imp.z_ot[0, 0] * t / (imp.z_oo[0, 0] + imp.z_us[0])
    assert channel_cluster_only(imp).h[0] == pytest.approx(cl, rel=1e-13)


def test_empty_cluster_is_no_path():
    imp = assemble(toy_scene(np.random.default_rng(8), 2, 2, 0))
    h = channel_cluster_only(imp)
    assert h.variant is Variant.CLUSTER_ONLY and not np.any(h.h)
    assert received_power_db(h, np.ones(2)) == -math.inf


def test_power_offset_scales_every_variant():
    rng = np.random.default_rng(9)
    s = toy_scene(rng, 2, 2, 2)
    cfg = random_ris(rng, 2)
    shifted = replace(s, power_offset_db=-20.0)
    a, b = assemble(s), assemble(shifted)
    w = np.array([1.0, 1j])
    for v in Variant:
        pa, pb = received_power_db(channel(a, cfg, v), w), received_power_db(channel(b, cfg, v), w)
        assert pb == pytest.approx(pa - 20.0, abs=1e-9)
    assert rel(channel_full(b, cfg).h, multiport_oracle(shifted, cfg).h) < 1e-10


def test_inverse_vs_solve_regression():
    rng = np.random.default_rng(10)
    s = toy_scene(rng, 4, 4, 3)
    imp = assemble(s)
    cfg = random_ris(rng, 4)
    a = imp.z_ss + imp.z_sos + cfg.matrix
    row = imp.z_rot.reshape(-1) - math.sqrt(imp.gain) * (imp.z_ros.reshape(-1) @ np.linalg.inv(a) @ imp.z_sot)
    h_inv = imp.ue_factor * (row @ np.linalg.inv(imp.z_tg))
    assert rel(h_inv, channel_full(imp, cfg).h) < 1e-9


def test_received_power_basics():
    h = ChannelVector(np.array([1.0, 0.0]), Variant.DIRECT)
    assert received_power_db(h, [1.0, 5.0]) == 0.0
    assert received_power_db(ChannelVector(np.array([1e-3]), Variant.DIRECT), [1.0]) == pytest.approx(-60.0, abs=1e-12)
    rng = np.random.default_rng(0)
    h = ChannelVector(rng.normal(size=4) + 1j * rng.normal(size=4), Variant.FULL)
    w = rng.normal(size=4) + 1j * rng.normal(size=4)
    assert received_power_db(h, w) == pytest.approx(received_power_db(h, w * np.exp(0.7j)), abs=1e-12)
    with pytest.raises(ValueError):
        received_power_db(h, [1.0])


def test_non_finite_channel_rejected():
    with pytest.raises(NumericalError):
        ChannelVector(np.array([np.nan]), Variant.FULL)


def test_receive_sample():
    h = ChannelVector(np.array([2.0, 1j]), Variant.FULL)
    r = receive(h, [1.0, 1.0], x=1.0, noise=0.5)
    assert r.y == 2.5 + 1j


def test_wrong_ris_length():
    imp = assemble(toy_scene(np.random.default_rng(1), 2, 2, 0))
    with pytest.raises(ValueError):
        channel_full(imp, RISConfig(0.0, [1.0]))


def test_direct_power_decays_along_boresight():
    from risimp.beamforming import steered_precoder
    from risimp.config import load_scene_text
    powers = []
    for dist in (2.0, 4.0):
        s = load_scene_text(f"[tx]\nrows = 4\ncols = 4\nnormal_deg = -90\n[ris]\nrows = 1\ncols = 1\n"
                            f"[ue]\nposition = [0.0, {-dist}, 0.0]\n")
        powers.append(received_power_db(channel_direct(assemble(s)), steered_precoder(s, 0.0)))
    assert powers[1] < powers[0]
