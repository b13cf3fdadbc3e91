import numpy as np
import pytest

from projbilliard.geometry import PseudoConfocalPencil
from projbilliard.reflection import TransverseField
from projbilliard.surface import ImplicitSurface

ELLIPSOID_A = np.diag([1 / 4, 1 / 2, 1.0])


@pytest.fixture
def ellipsoid():
    return ImplicitSurface.quadric(ELLIPSOID_A).oriented(np.zeros(3))


@pytest.fixture
def sphere():
    return ImplicitSurface.quadric(np.eye(3)).oriented(np.zeros(3))


@pytest.fixture
def pencil():
    return PseudoConfocalPencil((4.0, 2.0, 1.0), 3)


@pytest.fixture
def skew_field():
    """On the unit sphere: raw direction q + x2 e3, not symmetric."""
    return TransverseField.custom(["x1", "x2", "x3 + x2"])


def random_rotation(rng, d=3):
    Q, R = np.linalg.qr(rng.normal(size=(d, d)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
