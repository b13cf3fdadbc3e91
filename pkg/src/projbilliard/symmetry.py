"""Symmetry of the pairing ``<dn(u) | dnu(v)>`` between the shape operator
and the derivative of a transverse field.

A table whose pairing is symmetric at every point is called L-symmetric;
only such tables can carry caustics, so this is the main criterion the
package tests numerically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm, qmc

from .errors import InputError, LightLikeNormal, NumericalFailure
from .flow import ray_intersect
from .surface import surface_derivative, tangent_basis


def _normal_fd(S, q, u):
    return surface_derivative(S, q, u, lambda x: S.normal_at(x)[0])


def derivative_frames(S, field, q, basis=None, method="fd"):
    """Columns ``dn(u_i)`` and ``dnu(u_i)`` over a tangent basis at ``q``.

    ``method="fd"`` differentiates both fields by central differences over
    points projected back to ``S``; ``"analytic"`` uses the exact Hessian
    and the closed-form field derivative.
    """
    if method not in ("fd", "analytic"):
        raise InputError(f"unknown derivative method {method!r}")
    q = S.project(q)
    n, _ = S.normal_at(q)
    field.nu(S, q, n)  # transversality / light-like check before differencing
    U = tangent_basis(n) if basis is None else np.asarray(basis, dtype=float)
    if method == "fd":
        DN = np.column_stack([_normal_fd(S, q, u) for u in U])
    else:
        DN = np.column_stack([S.dn(q, u) for u in U])
    DV = np.column_stack([field.dnu(S, q, u, method=method) for u in U])
    return q, U, DN, DV


def pairing_matrix(S, field, q, basis=None, method="fd"):
    """``B[i, j] = <dn(u_i) | dnu(u_j)>``."""
    _, _, DN, DV = derivative_frames(S, field, q, basis, method)
    return DN.T @ DV


def _defect(B):
    return float(np.linalg.norm(B - B.T, 2))


def symmetry_defect(S, field, q, method="fd", basis=None):
    """Spectral norm of the antisymmetric part of the pairing matrix.

    For an orthonormal tangent basis this does not depend on the basis; in
    dimension 3 it is the single entry ``|B12 - B21|``.
    """
    return _defect(pairing_matrix(S, field, q, basis, method))


def q_normal_pairing(Q, S, q, x, y, coefficient=2.0):
    """Closed form of ``<dnu(x) | dn(y)>`` for the Q-normal field.

    With ``M`` the inverse of Q's matrix and ``lam = 1/<Mn|n>``, the value
    is ``lam <M dn(x)|dn(y)> - coefficient lam^2 <Mn|dn(x)> <Mn|dn(y)>``.
    Differentiating ``lam`` gives ``coefficient = 2``; other values are
    accepted so the alternative can be compared against the numerics.
    """
    n, _ = S.normal_at(q)
    M = Q.inverse
    Mn = M @ n
    lam = 1.0 / float(Mn @ n)
    dx = S.dn(q, x)
    dy = S.dn(q, y)
    return lam * float((M @ dx) @ dy) - coefficient * lam**2 * float(Mn @ dx) * float(Mn @ dy)


@dataclass
class SymmetryReport:
    symmetric: bool
    worst_defect: float
    worst_point: list
    samples: int
    skipped: int
    tol: float

    def to_dict(self):
        return {
            "symmetric": self.symmetric,
            "worst_defect": self.worst_defect,
            "worst_point": self.worst_point,
            "samples": self.samples,
            "skipped": self.skipped,
            "tol": self.tol,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def sample_surface(S, interior_point, samples, seed=0):
    """Boundary points hit by rays from ``interior_point`` along scrambled
    Halton directions.  Rays that escape or graze are skipped."""
    d = S.dimension
    S = S.oriented(interior_point)
    u = qmc.Halton(d, scramble=True, seed=seed).random(samples)
    dirs = norm.ppf(np.clip(u, 1e-12, 1.0 - 1e-12))
    pts = []
    for w in dirs:
        try:
            q, _ = ray_intersect(S, np.asarray(interior_point, dtype=float), w)
        except NumericalFailure:
            continue
        pts.append(q)
    return pts


def lightlike_margin(field, S, q):
    """``|<Mn|n>|`` for a pseudo field, ``inf`` otherwise."""
    if field.kind != "pseudo":
        return np.inf
    n, _ = S.normal_at(q)
    return abs(float(field.Q.inverse @ n @ n))


def is_L_symmetric(S, field, samples=200, tol=1e-6, interior_point=None, seed=0,
                   method="fd", margin=1e-2):
    """Check the pairing symmetry on ``samples`` deterministic boundary points.

    Each defect is compared against ``tol * max(1, |dn| |dnu|)``.  For a
    pseudo field, points with ``|<Mn|n>| < margin`` lie too close to the
    light-like locus and are skipped, as are points where the field fails.
    """
    if samples < 1:
        raise InputError("samples must be at least 1")
    if interior_point is None:
        interior_point = np.zeros(S.dimension)
    S = S.oriented(interior_point)
    worst, worst_q, skipped, ok = 0.0, None, 0, True
    pts = sample_surface(S, interior_point, samples, seed)
    skipped += samples - len(pts)
    for q in pts:
        if lightlike_margin(field, S, q) < margin:
            skipped += 1
            continue
        try:
            _, _, DN, DV = derivative_frames(S, field, q, method=method)
        except LightLikeNormal:
            skipped += 1
            continue
        B = DN.T @ DV
        defect = _defect(B)
        scale = max(1.0, np.linalg.norm(DN, 2) * np.linalg.norm(DV, 2))
        if defect > tol * scale:
            ok = False
        if worst_q is None or defect > worst:
            worst, worst_q = defect, q
    if worst_q is None:
        raise NumericalFailure("no usable sample point on the surface")
    return SymmetryReport(ok, worst, worst_q.tolist(), samples, skipped, tol)
