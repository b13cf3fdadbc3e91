import numpy as np
import pytest

from oracles import hp_ellipsoid_orbit, hp_spectrum
from projbilliard.caustic import caustic_tangency_check, conservation_report
from projbilliard.errors import InputError
from projbilliard.flow import BilliardTable, Trajectory, orbit
from projbilliard.geometry import CentralQuadric, PseudoConfocalPencil
from projbilliard.reflection import TransverseField
from projbilliard.surface import ImplicitSurface
from scenarios import A_AXES, ellipsoid_table, euclidean_pencil, pseudo_setup, random_chords

P0, V0 = np.array([0.0, 0.0, 0.0]), np.array([1.0, 0.3, 0.2])


def test_euclidean_conservation_200_bounces():
    traj = orbit(ellipsoid_table(), P0, V0, 200)
    rep = conservation_report(traj, euclidean_pencil(), tol=1e-8)
    assert rep.passed and rep.segments == 201
    assert len(rep.slots) == 2
    assert rep.max_rel_dev <= 1e-8


def test_spectrum_matches_high_precision_rerun():
    traj = orbit(ellipsoid_table(), P0, V0, 5)
    rep = conservation_report(traj, euclidean_pencil())
    hp = hp_ellipsoid_orbit(A_AXES, P0.tolist(), V0.tolist(), 5)
    for (q, v), spectrum in zip(hp, rep.spectra):
        want = hp_spectrum(A_AXES, 3, [float(x) for x in q], [float(x) for x in v])
        assert [r.lam for r in spectrum] == pytest.approx(want, abs=1e-12)
    want0 = hp_spectrum(A_AXES, 3, [float(x) for x in hp[0][0]], [float(x) for x in hp[0][1]])
    assert [s.lambda0 for s in rep.slots] == pytest.approx(want0, abs=1e-13)


def test_diameter_orbit_has_zero_deviation():
    table = BilliardTable(ImplicitSurface.quadric(np.eye(3)), TransverseField.euclidean(), np.zeros(3))
    d = np.array([1.0, 1.0, 1.0]) / np.sqrt(3)
    traj = orbit(table, np.zeros(3), d, 10)
    rep = conservation_report(traj, euclidean_pencil())
    assert rep.passed
    assert all(s.max_dev == 0.0 for s in rep.slots)


def test_pseudo_conservation():
    table, P = pseudo_setup()
    traj = orbit(table, np.array([0.1, 0.2, 0.0]), np.array([1.0, 0.4, 0.05]), 100)
    assert traj.completed
    rep = conservation_report(traj, P, tol=1e-6)
    assert rep.passed
    assert rep.slots


def test_conservation_under_rigid_motion():
    from conftest import random_rotation

    rng = np.random.default_rng(11)
    R = random_rotation(rng)
    base = ellipsoid_table()
    A = base.surface.F.A
    rot = BilliardTable(ImplicitSurface.quadric(R @ A @ R.T), TransverseField.euclidean(), np.zeros(3))
    Pr = PseudoConfocalPencil(A_AXES, 3, R)
    r1 = conservation_report(orbit(base, P0, V0, 100), euclidean_pencil())
    r2 = conservation_report(orbit(rot, R @ P0, R @ V0, 100), Pr)
    assert abs(r1.max_dev - r2.max_dev) <= 1e-9
    assert [s.lambda0 for s in r1.slots] == pytest.approx([s.lambda0 for s in r2.slots], abs=1e-12)


def test_report_needs_two_events():
    traj = orbit(ellipsoid_table(), P0, V0, 1)
    with pytest.raises(InputError):
        conservation_report(traj, euclidean_pencil())


def test_report_json_shape():
    rep = conservation_report(orbit(ellipsoid_table(), P0, V0, 5), euclidean_pencil())
    d = rep.to_dict()
    assert set(d) >= {"slots", "pass", "segments"}
    assert set(d["slots"][0]) >= {"lambda0", "max_dev"}


def test_pole_slots_do_not_fail():
    # concentric spheres: every line is tangent to the degenerate member at the pole
    P = PseudoConfocalPencil((1.0, 1.0, 1.0), 3)
    table = BilliardTable(ImplicitSurface.quadric(np.eye(3) / 4), TransverseField.euclidean(), np.zeros(3))
    traj = orbit(table, np.array([0.1, 0.2, 0.3]), np.array([0.3, 0.5, 0.8]), 20)
    rep = conservation_report(traj, P, tol=1e-8)
    assert any(s.pole for s in rep.slots)
    assert rep.passed


def _tangent_start(A, point_dir, seed=0):
    """A point on {x^T A x = 1} and a unit tangent direction there."""
    x = np.asarray(point_dir, dtype=float)
    x = x / np.sqrt(x @ A @ x)
    n = A @ x
    t = np.cross(n, np.random.default_rng(seed).normal(size=3))
    return x, t / np.linalg.norm(t)


def test_tangency_to_confocal_member():
    table = ellipsoid_table()
    traj = orbit(table, P0, V0, 100)
    lam = conservation_report(traj, euclidean_pencil()).slots[0].lambda0
    gamma = euclidean_pencil().member(lam)
    rep = caustic_tangency_check(traj, gamma)
    assert rep.passed and rep.max_residual <= 1e-8


def test_tangency_to_shrunk_ellipsoid_fails():
    table = ellipsoid_table()
    gamma = CentralQuadric(table.surface.F.A / 0.81)
    x, t = _tangent_start(gamma.A, [0.3, 0.5, 0.4])
    traj = orbit(table, x, t, 5)
    rep = caustic_tangency_check(traj, gamma, tol=1e-8)
    assert not rep.passed
    assert rep.max_residual >= 1e-3


def test_tangency_precondition():
    traj = orbit(ellipsoid_table(), P0, V0, 5)
    with pytest.raises(InputError):
        caustic_tangency_check(traj, CentralQuadric(np.eye(3) * 4))


def test_single_segment_trivially_passes():
    gamma = CentralQuadric(np.diag([1.0, 2.0, 4.0]))
    x, t = _tangent_start(gamma.A, [1, 1, 1])
    rep = caustic_tangency_check(Trajectory(x, t), gamma)
    assert rep.passed and len(rep.residuals) == 1


def test_random_chords_conserve():
    table = ellipsoid_table()
    for p, v in random_chords(3, seed=5):
        rep = conservation_report(orbit(table, p, v, 50), euclidean_pencil(), tol=1e-8)
        assert rep.passed
