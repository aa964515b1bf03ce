import numpy as np
import pytest

from conftest import toy_scene
from optimize_helpers import one_element_case, single_element_grid
from risimp.channel import Variant, channel, received_power_db
from risimp.errors import NumericalError
from risimp.impedance import RISConfig, assemble
from risimp.optimize import golden_section_max, maximize_power, random_search

def test_scalar_grid_formula_matches_channel():
    imp, w, r0 = one_element_case(0)
    x, p = single_element_grid(imp, w, r0)
    assert received_power_db(channel(imp, RISConfig(r0, [x]), Variant.FULL), w) == pytest.approx(p, abs=1e-9)


@pytest.mark.parametrize("seed", range(20))
def test_single_element_matches_grid(seed):
    imp, w, r0 = one_element_case(seed)
    x_grid, p_grid = single_element_grid(imp, w, r0)
    res = maximize_power(imp, w, r0, Variant.FULL, seed=seed)
    assert abs(res.config.reactances[0] - x_grid) <= 0.1 + 1e-9
    assert res.power_db >= p_grid - 1e-6


def test_random_search_single_element_close_to_grid():
    imp, w, r0 = one_element_case(3)
    _, p_grid = single_element_grid(imp, w, r0)
    res = random_search(imp, w, r0, Variant.FULL, draws=100_000, low=-1000, high=1000, seed=1)
    assert p_grid - 0.5 <= res.power_db <= p_grid + 1e-6


def test_dominates_random_search():
    wins = 0
    for seed in range(20):
        rng = np.random.default_rng(100 + seed)
        s = toy_scene(rng, 3, 4, int(rng.integers(0, 4)))
        imp = assemble(s)
        w = rng.normal(size=3) + 1j * rng.normal(size=3)
        opt = maximize_power(imp, w, 0.0, Variant.FULL, seed=seed)
        rnd = random_search(imp, w, 0.0, Variant.FULL, draws=200, low=-1000, high=1000, seed=seed)
        wins += opt.power_db >= rnd.power_db
    assert wins >= 18


@pytest.fixture(scope="module")
def case():
    rng = np.random.default_rng(77)
    s = toy_scene(rng, 4, 4, 3)
    return assemble(s), rng.normal(size=4) + 1j * rng.normal(size=4)


def test_ascent_and_consistency(case):
    imp, w = case
    res = maximize_power(imp, w, 1.0, Variant.FULL, seed=3, init=np.zeros(4))
    assert np.all(np.diff(res.powers) >= 0)
    p = received_power_db(channel(imp, res.config, Variant.FULL), w)
    assert res.power_db == pytest.approx(p, abs=1e-9)
    p0 = received_power_db(channel(imp, RISConfig(1.0, np.zeros(4)), Variant.FULL), w)
    assert res.powers[0] == pytest.approx(p0, abs=1e-9)
    assert res.power_db >= p0


def test_rank_one_and_resolve_agree(case):
    imp, w = case
    a = maximize_power(imp, w, 0.5, Variant.FULL, seed=4, budget=12)
    b = maximize_power(imp, w, 0.5, Variant.FULL, seed=4, budget=12, update="resolve")
    assert np.allclose(a.config.reactances, b.config.reactances, rtol=0, atol=1e-3)
    assert a.power_db == pytest.approx(b.power_db, abs=1e-6)


def test_seeded_determinism(case):
    imp, w = case
    a = maximize_power(imp, w, seed=9, budget=10)
    b = maximize_power(imp, w, seed=9, budget=10)
    assert a.trace == b.trace and np.array_equal(a.config.reactances, b.config.reactances)
    r1 = random_search(imp, w, draws=1000, seed=2)
    r2 = random_search(imp, w, draws=1000, seed=2)
    assert r1.power_db == r2.power_db


def test_budget_one_at_optimum_is_unchanged():
    imp, w, r0 = one_element_case(5)
    best = maximize_power(imp, w, r0)
    again = maximize_power(imp, w, r0, budget=1, init=best.config)
    assert len(again.trace) == 1
    assert again.power_db == pytest.approx(best.power_db, abs=1e-12)
    assert np.array_equal(again.config.reactances, best.config.reactances)


def test_random_search_single_draw(case):
    imp, w = case
    res = random_search(imp, w, 0.0, draws=1, seed=5)
    x = np.random.default_rng(5).uniform(-330, 100, imp.n)
    assert np.array_equal(res.config.reactances, x)
    assert res.power_db == pytest.approx(received_power_db(channel(imp, RISConfig(0.0, x), "FULL"), w), abs=1e-9)


def test_variants_without_ris_dependence(case):
    imp, w = case
    res = maximize_power(imp, w, variant=Variant.DIRECT)
    assert res.iterations == 0
    assert res.power_db == received_power_db(channel(imp, None, Variant.DIRECT), w)


def test_argument_checks(case):
    imp, w = case
    with pytest.raises(ValueError):
        maximize_power(imp, w, budget=0)
    with pytest.raises(ValueError):
        random_search(imp, w, draws=0)
    with pytest.raises(ValueError):
        random_search(imp, w, low=1, high=0)
    with pytest.raises(ValueError):
        maximize_power(imp, w, init=np.zeros(3))


def test_non_finite_objective_aborts(case):
    imp, w = case
    with pytest.raises(NumericalError):
        maximize_power(imp, np.full(4, np.nan))


def test_golden_section():
    x, f = golden_section_max(lambda v: -(v - 0.3) ** 2, -2, 3, tol=1e-9)
    assert abs(x - 0.3) < 1e-8 and f <= 0
