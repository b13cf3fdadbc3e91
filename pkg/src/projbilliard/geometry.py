"""Quadrics, pseudo-confocal pencils, lines, tangency and cross-ratio.

Everything here is closed-form or a one-dimensional polynomial root
search; the dynamical modules build on these formulas.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import DegenerateMember, InputError, NumericalFailure

SYMMETRY_TOL = 1e-12
DET_FLOOR = 1e-12
POLE_TOL = 1e-7
MEMBER_POLE_TOL = 1e-12
INACTIVE_TOL = 1e-14


def _as_vector(x, dim=None, name="point"):
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise InputError(f"{name} must be a 1-d vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise InputError(f"{name} has dimension {v.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise InputError(f"{name} has non-finite entries")
    return v


def _as_symmetric(matrix, name):
    m = np.array(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InputError(f"{name} must be a square matrix, got shape {m.shape}")
    if m.shape[0] < 2:
        raise InputError(f"{name} must have dimension >= 2")
    if not np.all(np.isfinite(m)):
        raise InputError(f"{name} has non-finite entries")
    if np.max(np.abs(m - m.T)) > SYMMETRY_TOL * max(1.0, np.max(np.abs(m))):
        raise InputError(f"{name} is not symmetric")
    m = 0.5 * (m + m.T)
    m.setflags(write=False)
    return m


class QuadraticForm:
    """Constant symmetric bilinear form ``Q(x, y) = x^T G y``.

    The identity matrix gives the Euclidean product.  ``inverse`` is the
    matrix ``M`` with ``Q(x, y) = <M^{-1} x | y>`` used to build Q-normals.
    """

    def __init__(self, matrix, det_floor=DET_FLOOR):
        self.matrix = _as_symmetric(matrix, "Q")
        self.det_floor = det_floor

    @classmethod
    def euclidean(cls, dim):
        return cls(np.eye(dim))

    @classmethod
    def signature(cls, r, dim):
        """``dx_1^2 + ... + dx_r^2 - dx_{r+1}^2 - ... - dx_d^2``."""
        if not 0 <= r <= dim:
            raise InputError("signature count r must lie in [0, d]")
        return cls(np.diag([1.0] * r + [-1.0] * (dim - r)))

    @property
    def dimension(self):
        return self.matrix.shape[0]

    @property
    def nondegenerate(self):
        return abs(np.linalg.det(self.matrix)) > self.det_floor

    @property
    def inverse(self):
        if not self.nondegenerate:
            raise InputError("quadratic form is degenerate")
        return np.linalg.inv(self.matrix)

    def __call__(self, x, y=None):
        x = np.asarray(x, dtype=float)
        y = x if y is None else np.asarray(y, dtype=float)
        return float(x @ self.matrix @ y)

    def __repr__(self):
        return f"QuadraticForm({self.matrix.tolist()!r})"


class CentralQuadric:
    """The level set ``{x : x^T A x = 1}``."""

    def __init__(self, A):
        self.A = _as_symmetric(A, "A")

    @property
    def dimension(self):
        return self.A.shape[0]

    def __call__(self, x):
        return quadric_eval(self, x)

    def gradient(self, x):
        return 2.0 * self.A @ np.asarray(x, dtype=float)

    def scaled(self, factor):
        """The homothetic copy ``factor * {x^T A x = 1}``."""
        return CentralQuadric(self.A / factor**2)

    def __repr__(self):
        return f"CentralQuadric({self.A.tolist()!r})"


@dataclass(frozen=True)
class OrientedLine:
    p: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        p = _as_vector(self.p, name="base point")
        u = _as_vector(self.u, dim=p.shape[0], name="direction")
        norm = np.linalg.norm(u)
        if norm == 0.0:
            raise InputError("line direction must be non-zero")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "u", u / norm)

    @property
    def dimension(self):
        return self.p.shape[0]

    def point(self, t):
        return self.p + t * self.u


class TangencyRoot(NamedTuple):
    """A pencil parameter at which a line touches a member.

    ``pole`` is the 1-based coordinate of a pencil pole within
    ``POLE_TOL`` of the root, or ``None``.
    """

    lam: float
    pole: int | None = None


@dataclass(frozen=True)
class PseudoConfocalPencil:
    """The family ``sum_{i<=r} x_i^2/(a_i - lam) + sum_{i>r} x_i^2/(a_i + lam) = 1``.

    ``r = d`` is the classical confocal family.  An optional orthogonal
    ``rotation`` R places the pencil in world coordinates ``x = R y``.
    """

    a: tuple
    r: int
    rotation: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        if len(a) < 2:
            raise InputError("pencil needs at least two semi-axis parameters")
        if not all(math.isfinite(v) and v > 0 for v in a):
            raise InputError("pencil parameters a_i must be finite and strictly positive")
        r = int(self.r)
        if r != self.r or not 0 <= r <= len(a):
            raise InputError(f"r must be an integer in [0, {len(a)}]")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "r", r)
        if self.rotation is not None:
            R = np.array(self.rotation, dtype=float)
            d = len(a)
            if R.shape != (d, d) or np.max(np.abs(R @ R.T - np.eye(d))) > 1e-10:
                raise InputError("pencil rotation must be an orthogonal d x d matrix")
            R.setflags(write=False)
            object.__setattr__(self, "rotation", R)

    @classmethod
    def parse(cls, text):
        """Read ``"4,2,1;r=3"`` (``r`` defaults to d) or a JSON object."""
        text = text.strip()
        if text.startswith("{"):
            try:
                return cls.from_config(json.loads(text))
            except json.JSONDecodeError as exc:
                raise InputError(f"bad pencil JSON: {exc}") from exc
        head, _, tail = text.partition(";")
        try:
            a = [float(v) for v in head.split(",") if v.strip()]
        except ValueError as exc:
            raise InputError(f"bad pencil parameters {head!r}") from exc
        r = len(a)
        if tail.strip():
            key, _, val = tail.partition("=")
            if key.strip() != "r":
                raise InputError(f"unknown pencil option {key.strip()!r}")
            try:
                r = int(val)
            except ValueError as exc:
                raise InputError(f"bad signature count {val!r}") from exc
        return cls(tuple(a), r)

    @classmethod
    def from_config(cls, cfg):
        if not isinstance(cfg, dict) or "a" not in cfg:
            raise InputError('pencil config must be an object {"a": [...], "r": int}')
        a = cfg["a"]
        return cls(tuple(a), cfg.get("r", len(a)), cfg.get("rotation"))

    def to_config(self):
        cfg = {"a": list(self.a), "r": self.r}
        if self.rotation is not None:
            cfg["rotation"] = self.rotation.tolist()
        return cfg

    @property
    def dimension(self):
        return len(self.a)

    @property
    def signs(self):
        """+1 where the denominator is ``a_i - lam``, -1 where it is ``a_i + lam``."""
        return np.array([1.0] * self.r + [-1.0] * (self.dimension - self.r))

    @property
    def poles(self):
        return np.array(self.a) * self.signs

    @property
    def form(self):
        """The quadratic form whose confocal family this is."""
        Q = np.diag(self.signs)
        if self.rotation is not None:
            Q = self.rotation @ Q @ self.rotation.T
        return QuadraticForm(Q)

    def denominators(self, lam):
        return np.array(self.a) - self.signs * lam

    def to_local(self, x):
        x = np.asarray(x, dtype=float)
        return x if self.rotation is None else self.rotation.T @ x

    def member(self, lam):
        return pencil_member(self, lam)


def quadric_eval(q, x):
    x = _as_vector(x)
    if x.shape[0] != q.dimension:
        raise InputError(f"point has dimension {x.shape[0]}, quadric has {q.dimension}")
    return float(x @ q.A @ x)


def pencil_member(P, lam):
    lam = float(lam)
    s = P.denominators(lam)
    for i, (si, ai) in enumerate(zip(s, P.a)):
        if abs(si) <= MEMBER_POLE_TOL * max(1.0, ai):
            raise DegenerateMember(lam, i + 1)
    A = np.diag(1.0 / s)
    if P.rotation is not None:
        A = P.rotation @ A @ P.rotation.T
    return CentralQuadric(A)


def tangency_discriminant(q, line):
    """``(p^T A u)^2 - (u^T A u)(p^T A p - 1)``: zero iff the line touches q.

    Positive values are secants, negative values miss the quadric.
    """
    A = q.A if isinstance(q, CentralQuadric) else np.asarray(q, dtype=float)
    p, u = line.p, line.u
    if p.shape[0] != A.shape[0]:
        raise InputError("line and quadric dimensions differ")
    pAu = p @ A @ u
    return float(pAu * pAu - (u @ A @ u) * (p @ A @ p - 1.0))


def tangency_polynomial(P, line):
    """Ascending coefficients of the cleared tangency discriminant in lam.

    Multiplying the discriminant of ``member(lam)`` by the product of all
    denominators ``s_k(lam)`` gives

        sum_i u_i^2 prod_{k!=i} s_k - sum_{i<j} (p_i u_j - p_j u_i)^2 prod_{k!=i,j} s_k

    (the diagonal terms cancel), a polynomial of degree at most d - 1.
    A coordinate with ``p_i = u_i = 0`` never enters the discriminant, so
    its denominator is not cleared: multiplying by it would only add a
    spurious root at its pole.
    """
    if line.dimension != P.dimension:
        raise InputError("line and pencil dimensions differ")
    p, u = P.to_local(line.p), P.to_local(line.u)
    d = P.dimension
    factors = [np.array([a, -s]) for a, s in zip(P.a, P.signs)]
    tiny = INACTIVE_TOL * max(1.0, float(np.max(np.abs(p))))
    active = [i for i in range(d) if abs(u[i]) > INACTIVE_TOL or abs(p[i]) > tiny]

    def prod_except(skip):
        out = np.array([1.0])
        for k in active:
            if k not in skip:
                out = npoly.polymul(out, factors[k])
        return out

    coeffs = np.zeros(max(len(active), 1))
    for i in active:
        term = u[i] ** 2 * prod_except((i,))
        coeffs[: term.size] += term
    for i in active:
        for j in active:
            if j <= i:
                continue
            w = p[i] * u[j] - p[j] * u[i]
            if w != 0.0:
                term = w * w * prod_except((i, j))
                coeffs[: term.size] -= term
    return coeffs


def _horner(c, x):
    acc = 0.0
    for ck in reversed(c):
        acc = acc * x + ck
    return acc


def _scale(c, x):
    ax = abs(x)
    acc = 0.0
    for ck in reversed(c):
        acc = acc * ax + abs(ck)
    return acc


def _bisect(c, lo, hi, flo, max_iter=200):
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = _horner(c, mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _real_roots(c, lo, hi, zero_tol):
    """Real roots of ``c`` (ascending) in [lo, hi] with multiplicities.

    The critical points (roots of the derivative, found recursively) cut
    the interval into monotone pieces; each piece holds at most one simple
    root, found by bisection on a sign change.  A critical point where the
    polynomial itself vanishes is a multiple root.
    """
    c = list(c)
    deg = len(c) - 1
    if deg <= 0:
        return []
    if deg == 1:
        x = -c[0] / c[1]
        return [(x, 1)] if lo <= x <= hi else []
    dc = [k * c[k] for k in range(1, deg + 1)]
    crit = _real_roots(dc, lo, hi, zero_tol)
    roots = []
    knots = [(lo, None)]
    for x, m in crit:
        if abs(_horner(c, x)) <= zero_tol * _scale(c, x):
            roots.append((x, m + 1))
            knots.append((x, "root"))
        else:
            knots.append((x, None))
    knots.append((hi, None))
    for (x0, tag0), (x1, tag1) in zip(knots, knots[1:]):
        if tag0 or tag1 or x1 <= x0:
            continue
        f0, f1 = _horner(c, x0), _horner(c, x1)
        if f0 == 0.0:
            if x0 == lo:
                roots.append((x0, 1))
            continue
        if f1 == 0.0:
            roots.append((x1, 1))
            continue
        if (f0 < 0.0) != (f1 < 0.0):
            roots.append((_bisect(c, x0, x1, f0), 1))
    roots.sort()
    return roots


def polynomial_real_roots(coeffs, lo=None, hi=None, zero_tol=1e-13):
    """Real roots of an ascending-coefficient polynomial, repeated by multiplicity.

    With no interval given, the search covers the Cauchy root bound.
    """
    c = np.asarray(coeffs, dtype=float)
    big = np.max(np.abs(c)) if c.size else 0.0
    if big == 0.0:
        raise NumericalFailure("polynomial vanishes identically")
    c = npoly.polytrim(c / big, 1e-14)
    if c.size <= 1:
        return []
    bound = 1.0 + np.max(np.abs(c[:-1] / c[-1]))
    lo = -bound if lo is None else lo
    hi = bound if hi is None else hi
    out = []
    for x, m in _real_roots(c.tolist(), lo, hi, zero_tol):
        out.extend([x] * m)
    return out


def tangency_spectrum(P, line, margin=1.0):
    """Pencil parameters of the members tangent to ``line``.

    Roots within ``POLE_TOL`` of a pencil pole are kept and flagged.
    """
    c = tangency_polynomial(P, line)
    big = np.max(np.abs(c))
    if big == 0.0:
        raise NumericalFailure("tangency polynomial vanishes identically; line lies on a degenerate locus")
    c = npoly.polytrim(c / big, 1e-14)
    if c.size <= 1:
        return []
    reach = max(abs(x) for x in P.poles) + margin
    bound = max(reach, 1.0 + float(np.max(np.abs(c[:-1] / c[-1]))))
    lams = polynomial_real_roots(c, -bound, bound)
    poles = P.poles
    out = []
    for lam in lams:
        gaps = np.abs(poles - lam)
        i = int(np.argmin(gaps))
        flagged = gaps[i] <= POLE_TOL * max(1.0, abs(poles[i]))
        out.append(TangencyRoot(float(lam), i + 1 if flagged else None))
    return out


def _line_point_distance(line, x):
    w = x - line.p
    return float(np.linalg.norm(w - (w @ line.u) * line.u))


def cross_ratio(lines: Sequence[OrientedLine], tol=1e-9):
    """Cross-ratio ``(A, B; C, D)`` of four concurrent coplanar lines.

    Uses ``[A,C][B,D] / ([A,D][B,C])`` on homogeneous coordinates of the
    directions in the common plane, so for slopes ``(1, -1, 0, inf)`` the
    value is -1.  A vanishing denominator returns ``math.inf``.
    """
    if len(lines) != 4:
        raise InputError("cross_ratio needs exactly four lines")
    d = lines[0].dimension
    if any(ln.dimension != d for ln in lines):
        raise InputError("lines have different dimensions")
    U = np.array([ln.u for ln in lines])
    _, sv, Vt = np.linalg.svd(U)
    if sv[1] <= tol:
        raise InputError("lines are all parallel; cross-ratio undefined")
    if d > 2 and sv[2] > tol:
        raise InputError("lines are not coplanar")
    # common point from the most transverse pair
    best, pair = -1.0, (0, 1)
    for i in range(4):
        for j in range(i + 1, 4):
            s = np.linalg.norm(U[i] - (U[i] @ U[j]) * U[j])
            if s > best:
                best, pair = s, (i, j)
    i, j = pair
    B = np.column_stack([lines[i].u, -lines[j].u])
    st, *_ = np.linalg.lstsq(B, lines[j].p - lines[i].p, rcond=None)
    center = lines[i].point(st[0])
    scale = max(1.0, float(np.linalg.norm(center)))
    for ln in lines:
        if _line_point_distance(ln, center) > tol * scale:
            raise InputError("lines are not concurrent")
    e1, e2 = Vt[0], Vt[1]
    h = [(float(u @ e1), float(u @ e2)) for u in U]

    def br(x, y):
        return x[0] * y[1] - x[1] * y[0]

    A, Bh, C, D = h
    num = br(A, C) * br(Bh, D)
    den = br(A, D) * br(Bh, C)
    if abs(den) <= 1e-15:
        if abs(num) <= 1e-15:
            raise InputError("cross-ratio is indeterminate (0/0)")
        return math.inf
    return num / den
