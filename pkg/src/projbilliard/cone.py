"""Local analysis of the cone of lines tangent to a caustic piece.

At a boundary point ``q`` with principal curvatures ``k1, k2`` and a
transverse field ``nu``, the adapted frame puts ``q`` at the origin, the
tangent plane at ``z = 0`` and the principal directions on the axes.  The
section of the tangent cone by a plane parallel to ``T_q S`` solves

    (d - a + k2 Y^2 - k1 X^2) X'Y' + (b + k1 XY) X'^2 - (c + k2 XY) Y'^2 = 0,

whose two solution branches are tangent to the eigenlines of the
quarter-turn conjugate of

    M(X, Y) = [[a + k1 X^2, b + k1 XY], [c + k2 XY, d + k2 Y^2]].

The branches are conics exactly when ``k2 b = k1 c``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateField, DegenerateSecondFundamentalForm, InputError, NumericalFailure
from .surface import curvature_data

CONSISTENCY_TOL = 1e-5
ACCEPT_RESIDUAL = 1e-6
REJECT_RESIDUAL = 1e-3


@dataclass(frozen=True)
class ConeCoefficients:
    nu1: float
    nu2: float
    a: float
    b: float
    c: float
    d: float
    k1: float
    k2: float
    residual: float = 0.0

    @classmethod
    def of(cls, a, b, c, d, k1, k2, nu1=0.0, nu2=0.0):
        return cls(float(nu1), float(nu2), float(a), float(b), float(c), float(d), float(k1), float(k2))

    @property
    def sym_defect(self):
        """``|k2 b - k1 c|``; zero iff the table is symmetric at this point."""
        return abs(self.k2 * self.b - self.k1 * self.c)

    def to_dict(self):
        return {k: getattr(self, k) for k in ("nu1", "nu2", "a", "b", "c", "d", "k1", "k2", "residual")}


@dataclass(frozen=True)
class AdaptedFrame:
    """Rigid motion ``x -> R (x - q)``; rows of ``R`` are ``u1, u2, n``."""

    q: np.ndarray
    R: np.ndarray
    k: np.ndarray

    def apply(self, x):
        return self.R @ (np.asarray(x, dtype=float) - self.q)

    def apply_vector(self, v):
        return self.R @ np.asarray(v, dtype=float)

    def inverse(self, y):
        return self.q + self.R.T @ np.asarray(y, dtype=float)


def adapted_frame(S, q):
    """Frame at ``q``: origin at ``q``, ``n -> e3``, principal directions on the axes."""
    if S.dimension != 3:
        raise InputError("adapted frames are defined for surfaces in 3-space")
    cd = curvature_data(S, q)
    if not cd.nondegenerate:
        raise DegenerateSecondFundamentalForm(f"principal curvatures {cd.k.tolist()} include a zero")
    R = np.vstack([cd.basis, cd.n])
    if np.linalg.det(R) < 0.0:
        R[1] = -R[1]
    return AdaptedFrame(cd.point, R, cd.k.copy())


def cone_coefficients(S, fld, q, method="analytic"):
    """Read ``nu = (nu1, nu2, 1)`` and ``dnu(u_i) + k_i nu_i nu`` in the adapted frame."""
    fr = adapted_frame(S, q)
    R = fr.R
    q0 = fr.q
    nu = R @ fld.nu(S, q0)
    k1, k2 = fr.k
    w1 = R @ fld.dnu(S, q0, R[0], method=method) + k1 * nu[0] * nu
    w2 = R @ fld.dnu(S, q0, R[1], method=method) + k2 * nu[1] * nu
    residual = max(abs(w1[2]), abs(w2[2]), abs(nu[2] - 1.0))
    if residual > CONSISTENCY_TOL:
        raise NumericalFailure(f"cone coefficients inconsistent: residual {residual:.3g}")
    vals = (nu[0], nu[1], w1[0], w1[1], w2[0], w2[1], k1, k2, residual)
    return ConeCoefficients(*(float(v) for v in vals))


def mf_matrix(cc, X, Y):
    return np.array(
        [
            [cc.a + cc.k1 * X * X, cc.b + cc.k1 * X * Y],
            [cc.c + cc.k2 * X * Y, cc.d + cc.k2 * Y * Y],
        ]
    )


def discriminant_delta(cc, x, y):
    """Discriminant of the characteristic polynomial of ``M(x, y)``."""
    p = cc.d - cc.a + cc.k2 * y * y - cc.k1 * x * x
    return p * p + 4.0 * (cc.b + cc.k1 * x * y) * (cc.c + cc.k2 * x * y)


def slope_discriminant(cc, X, Y):
    """Discriminant of ``(c + k2 XY) s^2 - (d - a + k2 Y^2 - k1 X^2) s - (b + k1 XY)``."""
    A = cc.c + cc.k2 * X * Y
    B = -(cc.d - cc.a + cc.k2 * Y * Y - cc.k1 * X * X)
    C = -(cc.b + cc.k1 * X * Y)
    return B * B - 4.0 * A * C


def _eigvec(m11, m12, m21, m22, mu):
    v1 = (m12, mu - m11)
    v2 = (mu - m22, m21)
    v = v1 if math.hypot(*v1) >= math.hypot(*v2) else v2
    r = math.hypot(*v)
    if r == 0.0:
        return None
    return v[0] / r, v[1] / r


def _eigen(cc, X, Y):
    m11 = cc.a + cc.k1 * X * X
    m12 = cc.b + cc.k1 * X * Y
    m21 = cc.c + cc.k2 * X * Y
    m22 = cc.d + cc.k2 * Y * Y
    delta = discriminant_delta(cc, X, Y)
    return (m11, m12, m21, m22), delta


def admissible_directions(cc, xi):
    """Real eigenpairs ``(eta, alpha)`` of ``M(xi)`` with ``<eta|xi> != 0``.

    ``alpha`` is the eigenvalue.  At most two pairs are returned.
    """
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (2,) or not np.all(np.isfinite(xi)):
        raise InputError("xi must be a finite 2-vector")
    (m11, m12, m21, m22), delta = _eigen(cc, *xi)
    if delta < 0.0:
        return []
    tr = m11 + m22
    s = math.sqrt(delta)
    out = []
    if s == 0.0 and m12 == 0.0 and m21 == 0.0:
        candidates = [((1.0, 0.0), tr / 2), ((0.0, 1.0), tr / 2)]
    else:
        candidates = []
        for mu in ((tr + s) / 2, (tr - s) / 2):
            v = _eigvec(m11, m12, m21, m22, mu)
            if v is not None and not any(abs(v[0] * w[1] - v[1] * w[0]) < 1e-12 for w, _ in candidates):
                candidates.append((v, mu))
    tol = 1e-12 * float(np.linalg.norm(xi))
    for v, mu in candidates:
        eta = np.array(v)
        if abs(float(eta @ xi)) > tol:
            out.append((eta, float(mu)))
    return out


def _branch_direction(cc, X, Y, branch, ref):
    """Unit tangent of a branch at ``(X, Y)``.

    Without ``ref`` the branch number picks the eigenvalue (1 = larger);
    with ``ref`` the eigendirection closest to ``ref`` is used, so a curve
    passing near a point where the eigenvalues meet keeps its identity.
    """
    (m11, m12, m21, m22), delta = _eigen(cc, X, Y)
    if delta <= 0.0:
        return None, delta
    s = math.sqrt(delta)
    dirs = []
    for mu in ((m11 + m22 + s) / 2.0, (m11 + m22 - s) / 2.0):
        eta = _eigvec(m11, m12, m21, m22, mu)
        if eta is None:
            return None, delta
        dirs.append((-eta[1], eta[0]))
    if ref is None:
        return dirs[branch - 1], delta
    dots = [dx * ref[0] + dy * ref[1] for dx, dy in dirs]
    i = 0 if abs(dots[0]) >= abs(dots[1]) else 1
    dx, dy = dirs[i]
    if dots[i] < 0.0:
        dx, dy = -dx, -dy
    return (dx, dy), delta


@dataclass
class ConeCurve:
    points: np.ndarray
    reason: str
    branch: int

    def __len__(self):
        return len(self.points)


def _rk4(cc, X, Y, h, ref):
    k1, _ = _branch_direction(cc, X, Y, 0, ref)
    if k1 is None:
        return None
    k2, _ = _branch_direction(cc, X + 0.5 * h * k1[0], Y + 0.5 * h * k1[1], 0, k1)
    if k2 is None:
        return None
    k3, _ = _branch_direction(cc, X + 0.5 * h * k2[0], Y + 0.5 * h * k2[1], 0, k2)
    if k3 is None:
        return None
    k4, _ = _branch_direction(cc, X + h * k3[0], Y + h * k3[1], 0, k3)
    if k4 is None:
        return None
    dX = (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]) / 6.0
    dY = (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]) / 6.0
    return X + h * dX, Y + h * dY


def integrate_cone_curve(cc, start, branch=1, steps=2000, h=1e-2, eps=1e-9, bound=1e3, sign=1, tol=None):
    """Trace one solution branch with adaptive RK4 along its unit tangent field.

    Branch 1 starts along the eigenline of the larger eigenvalue of ``M``,
    branch 2 along the smaller; afterwards each step follows the
    eigendirection closest to the previous one, with continuous sign.
    ``h`` is the largest step; steps shrink by step doubling until the
    local error is below ``tol``.  Tracing stops on ``V`` (``delta <= eps``
    or the step collapsing), on return to the start, outside
    ``|p| <= bound`` or after ``steps`` accepted steps.
    """
    if branch not in (1, 2):
        raise InputError("branch must be 1 or 2")
    X, Y = (float(v) for v in start)
    d0, delta = _branch_direction(cc, X, Y, branch, None)
    if d0 is None or delta <= eps:
        raise DegenerateField(f"start {[X, Y]} lies on the degenerate set (delta = {delta:.3g})")
    tol = 1e-12 * max(1.0, math.hypot(X, Y)) if tol is None else tol
    h_max, h_min = h, 1e-8 * h
    ref = (sign * d0[0], sign * d0[1])
    pts = [(X, Y)]
    travelled = 0.0
    reason = "steps"
    while len(pts) <= steps:
        full = _rk4(cc, X, Y, h, ref)
        half = _rk4(cc, X, Y, 0.5 * h, ref)
        mid_dir = None if half is None else _branch_direction(cc, *half, 0, ref)[0]
        two = None if mid_dir is None else _rk4(cc, *half, 0.5 * h, mid_dir)
        if full is None or two is None:
            err = math.inf
        else:
            err = math.hypot(two[0] - full[0], two[1] - full[1])
        if err > tol:
            if h <= h_min:
                reason = "V"
                break
            h = max(h_min, h * max(0.2, 0.9 * (tol / err) ** 0.2 if err < math.inf else 0.2))
            continue
        Xn = two[0] + (two[0] - full[0]) / 15.0
        Yn = two[1] + (two[1] - full[1]) / 15.0
        step = (Xn - X, Yn - Y)
        X, Y = Xn, Yn
        travelled += h
        pts.append((X, Y))
        nxt, delta = _branch_direction(cc, X, Y, 0, step)
        if nxt is None or delta <= eps:
            reason = "V"
            break
        ref = nxt
        if travelled > 4.0 * h and math.hypot(X - start[0], Y - start[1]) < 0.6 * h:
            reason = "closed"
            break
        if math.hypot(X, Y) > bound:
            reason = "bounds"
            break
        grow = 2.0 if err == 0.0 else min(2.0, 0.9 * (tol / err) ** 0.2)
        h = min(h_max, h * grow)
    return ConeCurve(np.array(pts), reason, branch)


def ode_residual(cc, X, Y, dX, dY):
    """Left side of the cone ODE at a point with tangent ``(dX, dY)``."""
    return (
        (cc.d - cc.a + cc.k2 * Y * Y - cc.k1 * X * X) * dX * dY
        + (cc.b + cc.k1 * X * Y) * dX * dX
        - (cc.c + cc.k2 * X * Y) * dY * dY
    )


# -- conic fitting ----------------------------------------------------------


@dataclass(frozen=True)
class ConicFit:
    coeffs: np.ndarray  # A, B, C, D, E, F on normalized points, unit norm
    residual: float
    center: np.ndarray
    scale: float

    def __call__(self, p):
        x, y = (np.asarray(p, dtype=float) - self.center).T / self.scale
        A, B, C, D, E, F = self.coeffs
        return A * x * x + B * x * y + C * y * y + D * x + E * y + F


def _design(pts):
    x, y = pts.T
    return np.column_stack([x * x, x * y, y * y, x, y, np.ones_like(x)])


def conic_fit(points):
    """Algebraic least-squares conic through points, after centering and scaling."""
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or P.shape[1] != 2 or len(P) < 8:
        raise InputError("conic fit needs at least 8 planar points")
    if not np.all(np.isfinite(P)):
        raise InputError("conic fit points must be finite")
    center = P.mean(axis=0)
    Z = P - center
    scale = float(np.sqrt((Z**2).sum(axis=1).mean()))
    if scale == 0.0:
        raise NumericalFailure("all points coincide")
    Z /= scale
    D = _design(Z)
    _, s, Vt = np.linalg.svd(D, full_matrices=False)
    if s[-2] <= 1e-9 * s[0]:
        raise NumericalFailure("conic design matrix is rank deficient (points on a line or too few)")
    coeffs = Vt[-1]
    residual = float(np.sqrt(np.mean((D @ coeffs) ** 2)))
    return ConicFit(coeffs, residual, center, scale)


# -- closed-form oracle for the scaled equation -----------------------------


@dataclass(frozen=True)
class OracleResult:
    K: tuple | None
    max_E: float


def conic_E(b, c, e, x, y, dx, dy):
    return (e + y * y - x * x) * dx * dy + (b + x * y) * dx * dx - (c + x * y) * dy * dy


def conic_oracle(b, c, e, r1, r2, phi, kind="ellipse", grid=256):
    """Test whether the conic ``(r1 f(t), r2 f(t + phi))`` solves the scaled
    cone ODE with coefficients ``(b, c, e)``, ``f = cos`` or ``cosh``.

    Returns the coefficients ``(K1, K2, K3)`` of ``E = -K1 cos^2 + K2 sin^2
    + K3 sin cos`` for the ellipse kind, and for both kinds the largest
    ``|E(t)|`` over a uniform ``t`` grid, with ``E`` evaluated straight from
    the ODE.
    """
    if r1 == 0.0 or r2 == 0.0:
        raise InputError("r1 and r2 must be non-zero")
    if kind == "ellipse":
        s, co = math.sin(phi), math.cos(phi)
        if abs(s) <= 1e-12:
            raise InputError("phi must not be a multiple of pi for the ellipse kind")
        K1 = r1 * r2**3 * s * s * co + c * r2 * r2 * s * s
        K2 = b * r1 * r1 + e * r1 * r2 * co - c * r2 * r2 * co * co + r1 * r2**3 * s * s * co
        K3 = e * r1 * r2 * s - r1**3 * r2 * s - 2 * c * r2 * r2 * s * co - r1 * r2**3 * s * (co * co - s * s)
        t = np.linspace(0.0, 2.0 * np.pi, grid, endpoint=False)
        x, y = r1 * np.cos(t), r2 * np.cos(t + phi)
        dx, dy = -r1 * np.sin(t), -r2 * np.sin(t + phi)
        K = (K1, K2, K3)
    elif kind == "hyperbola":
        t = np.linspace(-2.0, 2.0, grid)
        x, y = r1 * np.cosh(t), r2 * np.cosh(t + phi)
        dx, dy = r1 * np.sinh(t), r2 * np.sinh(t + phi)
        K = None
    else:
        raise InputError(f"unknown conic kind {kind!r}")
    E = conic_E(b, c, e, x, y, dx, dy)
    return OracleResult(K, float(np.max(np.abs(E))))


def conic_family(r1, r2, phi, kind="ellipse"):
    """Coefficients ``(b, c, e)`` for which the parametrized conic is a solution."""
    if kind == "ellipse":
        c = -r1 * r2 * math.cos(phi)
    elif kind == "hyperbola":
        c = -r1 * r2 * math.cosh(phi)
    else:
        raise InputError(f"unknown conic kind {kind!r}")
    return c, c, r1 * r1 - r2 * r2


def scale_coefficients(cc):
    """``(b1, c1, e1)`` of the equation after ``(X, Y) -> (sqrt(k1) X, sqrt(k2) Y)``."""
    if cc.k1 <= 0.0 or cc.k2 <= 0.0:
        raise InputError("scaling needs positive principal curvatures")
    return cc.b * math.sqrt(cc.k2 / cc.k1), cc.c * math.sqrt(cc.k1 / cc.k2), cc.d - cc.a


# -- dichotomy --------------------------------------------------------------


@dataclass
class BranchFit:
    start: tuple
    branch: int
    points: int
    residual: float
    reason: str

    def to_dict(self):
        return {"start": list(self.start), "branch": self.branch, "points": self.points,
                "residual": self.residual, "reason": self.reason}


@dataclass
class DichotomyVerdict:
    sym_defect: float
    branches: list
    verdict: str
    consistent: bool
    coefficients: dict = field(default_factory=dict)

    @property
    def max_residual(self):
        return max((b.residual for b in self.branches), default=0.0)

    def to_dict(self):
        return {
            "sym_defect": self.sym_defect,
            "branches": [b.to_dict() for b in self.branches],
            "verdict": self.verdict,
            "consistent": self.consistent,
            "coefficients": self.coefficients,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _default_starts(cc, count, min_delta=1e-3):
    """Up to ``count`` starts spread over rings of radius 0.8 to 3.2
    curvature radii, keeping points where ``delta > min_delta``."""
    L = 1.0 / math.sqrt(max(abs(cc.k1), abs(cc.k2)))
    picked = []
    for ring in (0.8, 1.6, 2.4, 3.2):
        angles = np.linspace(0.0, 2.0 * np.pi, 12, endpoint=False) + 0.3 * ring
        for t in angles:
            p = (ring * L * math.cos(t), ring * L * math.sin(t))
            if discriminant_delta(cc, *p) > min_delta:
                picked.append(p)
    if len(picked) <= count:
        return picked
    idx = np.linspace(0, len(picked) - 1, count).round().astype(int)
    return [picked[i] for i in idx]


def fit_branch(curve):
    if len(curve) < 8:
        return None
    try:
        return conic_fit(curve.points).residual
    except NumericalFailure:
        return 0.0  # collinear: a degenerate conic


def classify_coefficients(cc, starts=None, steps=800, h=None, sym_tol=1e-6,
                          accept=ACCEPT_RESIDUAL, reject=REJECT_RESIDUAL, n_starts=4, bound=6.0):
    """Trace both branches from several starts off ``V`` and fit conics.

    Arcs must be long (``steps * h`` of several curvature radii): a short
    arc of any smooth curve is close to its osculating conic.  Tracing stops
    ``bound`` curvature radii from the origin, since far out every branch
    approaches an exact conic of the quadratic terms and only dilutes the
    fit.  At saddle points (``k1 k2 < 0``) asymmetric branches stay close
    to conics and often land in the inconclusive band.  The verdict
    is ``quadratic-cone`` when every fitted branch has residual
    ``<= accept``, ``non-conic`` when some branch reaches ``reject`` and
    ``inconclusive`` otherwise.  ``consistent`` records whether the verdict
    matches ``|k2 b - k1 c| <= sym_tol``.
    """
    L = 1.0 / math.sqrt(max(abs(cc.k1), abs(cc.k2)))
    if h is None:
        h = 0.05 * L
    starts = _default_starts(cc, n_starts) if starts is None else starts
    fits = []
    for st in starts:
        if discriminant_delta(cc, *st) <= 1e-6:
            continue
        for br in (1, 2):
            curve = integrate_cone_curve(cc, st, br, steps=steps, h=h, bound=bound * L)
            r = fit_branch(curve)
            if r is not None:
                fits.append(BranchFit(tuple(float(v) for v in st), br, len(curve), r, curve.reason))
    if not fits:
        raise NumericalFailure("no branch could be traced off the degenerate set")
    worst = max(f.residual for f in fits)
    if worst <= accept:
        verdict = "quadratic-cone"
    elif worst >= reject:
        verdict = "non-conic"
    else:
        verdict = "inconclusive"
    sym = cc.sym_defect
    consistent = verdict == "inconclusive" or (verdict == "quadratic-cone") == (sym <= sym_tol)
    return DichotomyVerdict(sym, fits, verdict, consistent, cc.to_dict())


def symmetric_dichotomy(S, fld, q, **opts):
    """Cone coefficients at ``q`` followed by :func:`classify_coefficients`."""
    return classify_coefficients(cone_coefficients(S, fld, q), **opts)
