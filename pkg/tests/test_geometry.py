import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import hp_spectrum
from projbilliard.errors import DegenerateMember, InputError
from projbilliard.geometry import (
    CentralQuadric,
    OrientedLine,
    PseudoConfocalPencil,
    QuadraticForm,
    cross_ratio,
    pencil_member,
    polynomial_real_roots,
    quadric_eval,
    tangency_discriminant,
    tangency_polynomial,
    tangency_spectrum,
)

ELL = CentralQuadric(np.diag([1 / 4, 1 / 2, 1.0]))


@pytest.mark.parametrize(
    "A, x, expected",
    [
        (np.diag([1 / 4, 1 / 2, 1.0]), [2, 0, 0], 1.0),
        (np.eye(3), [0, 0, 0], 0.0),
        (np.diag([1 / 4, 1 / 2, 1.0]), [0, 0, 2], 4.0),
    ],
)
def test_quadric_eval(A, x, expected):
    assert quadric_eval(CentralQuadric(A), x) == pytest.approx(expected, abs=1e-15)


def test_pencil_members(pencil):
    np.testing.assert_allclose(pencil_member(pencil, 0.0).A, np.diag([1 / 4, 1 / 2, 1]), rtol=1e-15)
    np.testing.assert_allclose(pencil_member(pencil, -3.0).A, np.diag([1 / 7, 1 / 5, 1 / 4]), rtol=1e-15)
    with pytest.raises(DegenerateMember) as exc:
        pencil_member(pencil, 2.0)
    assert exc.value.index == 2


def test_pencil_signature_members():
    P = PseudoConfocalPencil((4.0, 2.0, 1.0), 2)
    np.testing.assert_allclose(pencil_member(P, 0.5).A, np.diag([1 / 3.5, 1 / 1.5, 1 / 1.5]))
    np.testing.assert_allclose(P.poles, [4, 2, -1])


def test_pencil_parse_roundtrip():
    P = PseudoConfocalPencil.parse("4,2,1;r=3")
    assert P == PseudoConfocalPencil((4, 2, 1), 3)
    assert PseudoConfocalPencil.parse('{"a": [4, 2, 1], "r": 2}').r == 2
    assert PseudoConfocalPencil.parse("4,2,1").r == 3
    for bad in ("4,x,1", "4,2,1;s=2", "4,2,1;r=5", "4,-2,1", "{bad json"):
        with pytest.raises(InputError):
            PseudoConfocalPencil.parse(bad)


def test_pencil_is_confocal_family_of_its_form(pencil):
    # A_lam^{-1} = A_0^{-1} - lam G^{-1}
    for P in (pencil, PseudoConfocalPencil((4, 2, 1), 1)):
        G = P.form.matrix
        for lam in (-0.7, 0.3, 1.4):
            lhs = np.linalg.inv(pencil_member(P, lam).A)
            rhs = np.linalg.inv(pencil_member(P, 0.0).A) - lam * np.linalg.inv(G)
            np.testing.assert_allclose(lhs, rhs, atol=1e-13)


@pytest.mark.parametrize(
    "A, p, u, expected",
    [
        (np.diag([1 / 4, 1 / 2, 1.0]), [2, 0, 0], [0, 0, 1], 0.0),
        (np.eye(3), [0, 0, 0], [1, 0, 0], 1.0),
        (np.diag([1 / 7, 1 / 5, 1 / 4]), [0, 0, 2], [1, 0, 0], 0.0),
    ],
)
def test_tangency_discriminant(A, p, u, expected):
    assert tangency_discriminant(CentralQuadric(A), OrientedLine(p, u)) == pytest.approx(expected, abs=1e-15)


def test_spectrum_line_in_tangent_plane(pencil):
    spectrum = tangency_spectrum(pencil, OrientedLine([0, 0, 2], [1, 0, 0]))
    assert [r.lam for r in spectrum] == pytest.approx([-3.0], abs=1e-12)
    assert spectrum[0].pole is None


def test_spectrum_vertex_line(pencil):
    spectrum = tangency_spectrum(pencil, OrientedLine([2, 0, 0], [0, 0, 1]))
    assert [r.lam for r in spectrum] == pytest.approx([0.0], abs=1e-12)


def test_spectrum_diagonal_line_has_no_root_at_pole(pencil):
    line = OrientedLine([3, 0, 0], [1, 1, 0])
    spectrum = tangency_spectrum(pencil, line)
    assert [r.lam for r in spectrum] == pytest.approx([-1.5], abs=1e-12)
    # near lambda = 4 the discriminant blows up instead of vanishing
    for eps in (1e-3, 1e-6):
        assert abs(tangency_discriminant(pencil.member(4.0 - eps), line)) > 1.0 / eps


def test_spectrum_pole_flag():
    P = PseudoConfocalPencil((1.0, 1.0, 1.0), 3)
    assert tangency_spectrum(P, OrientedLine([0, 0, 0], [1, 0, 0])) == []
    spectrum = tangency_spectrum(P, OrientedLine([0.1, 0.2, 0.3], [0.3, 0.5, 0.8]))
    assert len(spectrum) == 2
    assert spectrum[1].lam == pytest.approx(1.0, abs=1e-7) and spectrum[1].pole == 1
    assert spectrum[0].pole is None


@pytest.mark.parametrize("r", [3, 2, 1])
def test_spectrum_matches_high_precision(r):
    rng = np.random.default_rng(r)
    P = PseudoConfocalPencil((4.0, 2.0, 1.0), r)
    for _ in range(5):
        p, u = rng.normal(size=3), rng.normal(size=3)
        line = OrientedLine(p, u)
        got = [x.lam for x in tangency_spectrum(P, line)]
        want = hp_spectrum(P.a, r, p.tolist(), line.u.tolist())
        assert got == pytest.approx(want, rel=1e-10, abs=1e-10)


def test_spectrum_roots_are_tangencies(pencil):
    rng = np.random.default_rng(7)
    for _ in range(20):
        line = OrientedLine(rng.normal(size=3), rng.normal(size=3))
        for root in tangency_spectrum(pencil, line):
            if root.pole is None:
                A = pencil.member(root.lam).A
                # normalized discriminant vanishes
                D = tangency_discriminant(pencil.member(root.lam), line)
                scale = (line.p @ A @ line.u) ** 2 + abs(line.u @ A @ line.u) * (abs(line.p @ A @ line.p) + 1)
                assert abs(D) <= 1e-9 * scale


def test_polynomial_real_roots_multiple():
    # (x - 1)^2 (x + 2), coefficients low to high
    roots = polynomial_real_roots([2.0, -3.0, 0.0, 1.0])
    assert roots == pytest.approx([-2.0, 1.0, 1.0], abs=1e-7)
    assert polynomial_real_roots([1.0, 0.0, 1.0]) == []


def test_tangency_polynomial_degree(pencil):
    c = tangency_polynomial(pencil, OrientedLine([0.3, 0.1, -0.2], [1, 2, 3]))
    assert len(np.trim_zeros(np.asarray(c), "b")) - 1 <= 2


def test_rotated_pencil_spectrum_invariant(pencil):
    from conftest import random_rotation

    rng = np.random.default_rng(3)
    R = random_rotation(rng)
    Pr = PseudoConfocalPencil(pencil.a, pencil.r, R)
    p, u = rng.normal(size=3), rng.normal(size=3)
    a = [x.lam for x in tangency_spectrum(pencil, OrientedLine(p, u))]
    b = [x.lam for x in tangency_spectrum(Pr, OrientedLine(R @ p, R @ u))]
    assert a == pytest.approx(b, abs=1e-10)


def test_quadratic_form():
    Q = QuadraticForm.signature(2, 3)
    assert Q([1, 1, 1]) == 1.0
    np.testing.assert_allclose(Q.inverse, np.diag([1, 1, -1]))
    with pytest.raises(InputError):
        QuadraticForm([[1, 2], [0, 1]])
    assert not QuadraticForm(np.diag([1, 0, 1])).nondegenerate


def _lines2(*dirs, p=(0.0, 0.0)):
    return [OrientedLine(p, d) for d in dirs]


def test_cross_ratio_examples():
    assert cross_ratio(_lines2((1, 1), (1, -1), (1, 0), (0, 1))) == pytest.approx(-1.0, abs=1e-15)
    assert cross_ratio(_lines2((1, 2), (1, 2), (1, 0), (0, 1))) == pytest.approx(1.0, abs=1e-15)
    assert cross_ratio(_lines2((1, 2), (1, 0), (0, 1), (1, 2))) == math.inf


def test_cross_ratio_in_space():
    p = np.array([1.0, 2.0, 3.0])
    R = np.linalg.qr(np.random.default_rng(0).normal(size=(3, 3)))[0]
    dirs = [R @ np.array([*d, 0.0]) for d in ((1, 1), (1, -1), (1, 0), (0, 1))]
    assert cross_ratio([OrientedLine(p, d) for d in dirs]) == pytest.approx(-1.0, abs=1e-12)


def test_cross_ratio_rejects_bad_configurations():
    with pytest.raises(InputError):
        cross_ratio(_lines2((1, 0), (1, 0), (1, 0), (1, 0)))
    with pytest.raises(InputError):
        cross_ratio([OrientedLine([0, 0, 0], d) for d in ([1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1])])
    with pytest.raises(InputError):
        cross_ratio([OrientedLine([0, 0], [1, 0]), OrientedLine([0, 1], [0, 1]),
                     OrientedLine([5, 6], [1, 1]), OrientedLine([0, 0], [1, 2])])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=4, max_size=4, unique=True))
def test_cross_ratio_matches_slope_formula(slopes):
    lines = _lines2(*[(1.0, s) for s in slopes])
    a, b, c, d = slopes
    if min(abs(a - d), abs(b - c)) < 1e-6:
        return
    expected = (c - a) * (d - b) / ((d - a) * (c - b))
    assert cross_ratio(lines) == pytest.approx(expected, rel=1e-7, abs=1e-9)
