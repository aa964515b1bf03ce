import numpy as np
import pytest

from risimp.scene import ClusterSpec, DipoleArray, Role, Scene, build_cluster, wavelength_for

LAM = wavelength_for(28.0)


def _cloud(rng, count, center, spread, min_sep):
    pts = []
    while len(pts) < count:
        p = np.asarray(center) + rng.uniform(-spread, spread, 3)
        if all(np.linalg.norm(p - q) > min_sep for q in pts):
            pts.append(p)
    return np.array(pts).reshape(-1, 3)


def toy_scene(rng, m=2, n=2, n_c=1, lam=LAM, ue_load=None, power_offset_db=0.0):
    """Small random scene: a few dipoles per role, well separated groups."""
    tx = DipoleArray(_cloud(rng, m, (0, 0, 0), 0.6 * lam, 0.3 * lam), lam / 2, Role.TX)
    ris = DipoleArray(_cloud(rng, n, (-4 * lam, -5 * lam, 0), 0.6 * lam, 0.3 * lam), lam / 2, Role.RIS) \
        if n else DipoleArray(np.zeros((0, 3)), lam / 2, Role.RIS)
    ue_pos = np.array([[3 * lam, -6 * lam, rng.uniform(-0.2, 0.2) * lam]])
    ue = DipoleArray(ue_pos, lam / 2, Role.UE)
    clusters, specs = (), ()
    if n_c:
        spec = ClusterSpec(n_x=n_c, n_y=1, spacing=0.25 * lam,
                           center=(5 * lam + rng.uniform(-1, 1) * lam, -2 * lam, 0.0),
                           cylinder_radius=1.5 * lam, load_real=float(rng.uniform(10, 120)),
                           reactances=tuple(rng.uniform(-330, 100, n_c)))
        clusters, specs = (build_cluster(spec, lam, ue_pos[0], (0, 0, 0)),), (spec,)
    return Scene(tx=tx, ris=ris, ue=ue, wavelength=lam, clusters=clusters, cluster_specs=specs,
                 tx_normal=(0.0, -1.0, 0.0), ris_normal=(1.0, 0.0, 0.0), ue_load=ue_load,
                 power_offset_db=power_offset_db)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_configure(config):
    config.acceptance_lines = []


@pytest.fixture
def report_criterion(request):
    """Record one pass/fail line per acceptance criterion; echoed in the terminal summary."""
    def emit(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        request.config.acceptance_lines.append(line)
        print(line)
        return ok
    return emit


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
