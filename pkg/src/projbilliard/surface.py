"""Implicit hypersurfaces ``F = 0``: normals, shape operator, principal data.

Sign convention: ``n = sigma * grad F / |grad F|`` is the outward normal
(``sigma * F < 0`` inside) and the second fundamental form is
``II(u, v) = <dn(u) | v>``, so the unit sphere has all k_i = +1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSecondFundamentalForm, InputError, NumericalFailure, SingularPoint
from .expr import Expression, eval_with_gradient, evaluate, parse_expression
from .geometry import CentralQuadric

GRADIENT_FLOOR = 1e-8
PROJECTION_TOL = 1e-11
PROJECTION_ITERS = 10
DEGENERACY_FLOOR = 1e-6


class ImplicitSurface:
    """Hypersurface ``{F = 0}`` with orientation ``sigma``.

    ``F`` is a :class:`CentralQuadric` (``F = x^T A x - 1``, exact
    derivatives) or an :class:`Expression` (dual-number gradient, Hessian
    by central differences of the gradient).
    """

    def __init__(self, F, sigma=1, scale=None):
        if not isinstance(F, (CentralQuadric, Expression)):
            raise InputError("surface must be a CentralQuadric or an Expression")
        if sigma not in (1, -1):
            raise InputError("orientation sigma must be +1 or -1")
        self.F = F
        self.sigma = sigma
        self.scale = float(scale) if scale is not None else self._default_scale()

    @classmethod
    def quadric(cls, A, sigma=1):
        return cls(CentralQuadric(A), sigma)

    @classmethod
    def implicit(cls, text, dimension, sigma=1, scale=None):
        return cls(parse_expression(text, dimension), sigma, scale)

    def _default_scale(self):
        if self.is_quadric:
            w = np.linalg.eigvalsh(self.F.A)
            pos = w[w > 0]
            return float(1.0 / np.sqrt(pos.min())) if pos.size else 1.0
        return 1.0

    @property
    def is_quadric(self):
        return isinstance(self.F, CentralQuadric)

    @property
    def dimension(self):
        return self.F.dimension

    def oriented(self, interior_point):
        """Copy whose sigma makes ``interior_point`` lie inside."""
        f = self.value(interior_point)
        if f == 0.0:
            raise InputError("interior point lies on the surface")
        return ImplicitSurface(self.F, -1 if f > 0 else 1, self.scale)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_quadric:
            return float(x @ self.F.A @ x) - 1.0
        return evaluate(self.F, x)

    def value_and_gradient(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_quadric:
            Ax = self.F.A @ x
            return float(x @ Ax) - 1.0, 2.0 * Ax
        return eval_with_gradient(self.F, x)

    def gradient(self, x):
        return self.value_and_gradient(x)[1]

    def hessian(self, x):
        if self.is_quadric:
            return 2.0 * np.array(self.F.A)
        x = np.asarray(x, dtype=float)
        d = self.dimension
        h = 1e-5 * (1.0 + np.linalg.norm(x))
        H = np.empty((d, d))
        for j in range(d):
            e = np.zeros(d)
            e[j] = h
            H[:, j] = (self.gradient(x + e) - self.gradient(x - e)) / (2.0 * h)
        return 0.5 * (H + H.T)

    def project(self, q, max_shift=None):
        """Newton-project ``q`` onto the surface along the gradient."""
        q0 = np.asarray(q, dtype=float)
        if q0.shape != (self.dimension,):
            raise InputError(f"point has shape {q0.shape}, expected ({self.dimension},)")
        q = q0.copy()
        for _ in range(PROJECTION_ITERS + 1):
            f, g = self.value_and_gradient(q)
            if abs(f) <= PROJECTION_TOL:
                break
            gg = g @ g
            if gg < GRADIENT_FLOOR**2:
                raise SingularPoint(f"gradient vanishes near {q.tolist()}")
            q = q - (f / gg) * g
        else:
            raise InputError(f"point {q0.tolist()} does not project onto the surface")
        if max_shift is None:
            max_shift = 1e-6 * (1.0 + np.linalg.norm(q0))
        if np.linalg.norm(q - q0) > max_shift:
            raise InputError(f"point {q0.tolist()} is off the surface by {np.linalg.norm(q - q0):.3g}")
        return q

    def normal_at(self, q):
        """Outward unit normal and |grad F| at a point assumed on the surface."""
        g = self.gradient(q)
        norm = np.linalg.norm(g)
        if norm < GRADIENT_FLOOR:
            raise SingularPoint(f"|grad F| = {norm:.3g} at {np.asarray(q).tolist()}")
        return self.sigma * g / norm, norm

    def dn(self, q, u=None):
        """Differential of the unit normal: ``P H u * sigma / |grad F|``.

        Returns the d x d matrix when ``u`` is None.
        """
        n, gnorm = self.normal_at(q)
        P = np.eye(self.dimension) - np.outer(n, n)
        D = self.sigma * (P @ self.hessian(q)) / gnorm
        return D if u is None else D @ np.asarray(u, dtype=float)


def surface_derivative(S, q, u, fn, rel_step=1e-5):
    """Derivative of ``fn`` along tangent ``u``, sampled on ``S``.

    Offsets ``q + j h u`` (j = -2..2) are projected back onto ``S`` and
    combined with the fourth-order central stencil.
    """
    q = np.asarray(q, dtype=float)
    u = np.asarray(u, dtype=float)
    h = rel_step * (1.0 + np.linalg.norm(q))
    shift = 20.0 * h
    vals = {j: fn(S.project(q + j * h * u, max_shift=shift)) for j in (-2, -1, 1, 2)}
    return (vals[-2] - 8.0 * vals[-1] + 8.0 * vals[1] - vals[2]) / (12.0 * h)


def tangent_basis(n):
    """Deterministic orthonormal basis of the hyperplane orthogonal to ``n``."""
    d = n.shape[0]
    Q, _ = np.linalg.qr(np.column_stack([n, np.eye(d)]))
    return Q[:, 1:d].T.copy()


def unit_normal(S, q):
    q = S.project(q)
    return S.normal_at(q)[0]


@dataclass(frozen=True)
class CurvatureData:
    point: np.ndarray
    n: np.ndarray
    basis: np.ndarray  # rows u_1..u_{d-1}, principal directions
    k: np.ndarray  # descending
    II: np.ndarray

    @property
    def nondegenerate(self):
        return bool(np.min(np.abs(self.k)) > DEGENERACY_FLOOR * max(1.0, np.max(np.abs(self.k))))


def curvature_data(S, q):
    q = S.project(q)
    n, _ = S.normal_at(q)
    B = tangent_basis(n)
    D = S.dn(q)
    II = B @ D @ B.T
    II = 0.5 * (II + II.T)
    try:
        k, V = np.linalg.eigh(II)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigen-decomposition failed: {exc}") from exc
    order = np.argsort(k)[::-1]
    k, V = k[order], V[:, order]
    basis = V.T @ B
    return CurvatureData(q, n, basis, k, np.diag(k))


def require_nondegenerate(cd):
    if not cd.nondegenerate:
        raise DegenerateSecondFundamentalForm(f"principal curvatures {cd.k.tolist()} include a zero")
    return cd
