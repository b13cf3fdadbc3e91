"""Reflection laws and the transverse line fields that define them.

A field is stored through its direction ``nu`` normalized by
``<nu | n> = 1``.  The projective law sends ``v`` to
``v - 2 <v|n> nu``: it fixes the tangent hyperplane pointwise and negates
``nu``.  The Euclidean law is ``nu = n``; the pseudo-Euclidean law for a
form ``Q(x, y) = <M^{-1} x | y>`` is ``nu = M n / <M n | n>``.
"""

from __future__ import annotations

import numpy as np

from .errors import GrazingHit, InputError, LightLikeNormal, NonTransverseField
from .expr import Expression, eval_with_gradient, evaluate, parse_expression
from .geometry import OrientedLine, QuadraticForm
from .surface import surface_derivative

GRAZING_TOL = 1e-9
LIGHTLIKE_TOL = 1e-9
TRANSVERSE_TOL = 1e-9


def _unit(w):
    return w / np.linalg.norm(w)


def nu_from_Q(Q, S, q, n=None):
    """Q-orthogonal direction of ``T_q S`` scaled so that ``<nu|n> = 1``."""
    if n is None:
        n, _ = S.normal_at(q)
    Mn = Q.inverse @ n
    s = float(Mn @ n)
    if abs(s) < LIGHTLIKE_TOL:
        raise LightLikeNormal(f"<Mn|n> = {s:.3g}: tangent plane at {np.asarray(q).tolist()} is not space-time")
    return Mn / s


def projective_reflect(v, n, nu, normalize=True):
    v = np.asarray(v, dtype=float)
    vn = float(v @ n)
    if abs(vn) < GRAZING_TOL:
        raise GrazingHit(f"<v|n> = {vn:.3g}")
    w = v - 2.0 * vn * np.asarray(nu, dtype=float)
    return _unit(w) if normalize else w


def pseudo_reflect(v, Q, n_Q, normalize=True):
    """Reflect ``v`` in the hyperplane Q-orthogonal to ``n_Q``."""
    v = np.asarray(v, dtype=float)
    n_Q = np.asarray(n_Q, dtype=float)
    qq = Q(n_Q, n_Q)
    if abs(qq) < LIGHTLIKE_TOL * float(n_Q @ n_Q):
        raise LightLikeNormal(f"Q(n_Q, n_Q) = {qq:.3g}")
    w = v - 2.0 * Q(v, n_Q) / qq * n_Q
    return _unit(w) if normalize else w


class TransverseField:
    """One of ``euclidean``, ``pseudo`` (needs ``Q``) or ``custom`` (needs ``nu``).

    Custom fields are d expressions for a raw direction ``w``; it is
    rescaled to ``w / <w|n>`` on evaluation.
    """

    def __init__(self, kind, Q=None, nu=None):
        if kind not in ("euclidean", "pseudo", "custom"):
            raise InputError(f"unknown field kind {kind!r}")
        self.kind = kind
        self.Q = None
        self.exprs = None
        if kind == "pseudo":
            if Q is None:
                raise InputError("pseudo field needs a quadratic form Q")
            self.Q = Q if isinstance(Q, QuadraticForm) else QuadraticForm(Q)
            if not self.Q.nondegenerate:
                raise InputError("pseudo field needs a non-degenerate Q")
            self._M = self.Q.inverse
        elif kind == "custom":
            if not nu:
                raise InputError("custom field needs a list of expressions 'nu'")
            d = len(nu)
            self.exprs = [e if isinstance(e, Expression) else parse_expression(e, d) for e in nu]

    @classmethod
    def euclidean(cls):
        return cls("euclidean")

    @classmethod
    def pseudo(cls, Q):
        return cls("pseudo", Q=Q)

    @classmethod
    def custom(cls, exprs):
        return cls("custom", nu=list(exprs))

    @classmethod
    def from_config(cls, cfg):
        if not isinstance(cfg, dict) or "kind" not in cfg:
            raise InputError("field config must be an object with a 'kind'")
        return cls(cfg["kind"], Q=cfg.get("Q"), nu=cfg.get("nu"))

    def to_config(self):
        if self.kind == "pseudo":
            return {"kind": "pseudo", "Q": self.Q.matrix.tolist()}
        if self.kind == "custom":
            return {"kind": "custom", "nu": [str(e) for e in self.exprs]}
        return {"kind": "euclidean"}

    def check_dimension(self, d):
        if self.kind == "pseudo" and self.Q.dimension != d:
            raise InputError("field form and surface dimensions differ")
        if self.kind == "custom" and len(self.exprs) != d:
            raise InputError("custom field needs one expression per coordinate")

    def raw(self, q):
        return np.array([evaluate(e, q) for e in self.exprs])

    def nu(self, S, q, n=None):
        if n is None:
            n, _ = S.normal_at(q)
        if self.kind == "euclidean":
            return n.copy()
        if self.kind == "pseudo":
            return nu_from_Q(self.Q, S, q, n)
        w = self.raw(q)
        s = float(w @ n)
        if abs(s) < TRANSVERSE_TOL * max(1.0, float(np.linalg.norm(w))):
            raise NonTransverseField(f"<w|n> = {s:.3g} at {np.asarray(q).tolist()}")
        return w / s

    def dnu(self, S, q, u, method="analytic"):
        """Derivative of ``nu`` along the tangent vector ``u`` at ``q``."""
        u = np.asarray(u, dtype=float)
        if method == "fd":
            return self._dnu_fd(S, q, u)
        if method != "analytic":
            raise InputError(f"unknown derivative method {method!r}")
        n, _ = S.normal_at(q)
        dn = S.dn(q, u)
        if self.kind == "euclidean":
            return dn
        if self.kind == "pseudo":
            M = self._M
            Mn = M @ n
            lam = 1.0 / float(Mn @ n)
            return lam * (M @ dn) - 2.0 * lam**2 * float(Mn @ dn) * Mn
        w = np.empty(len(self.exprs))
        dw = np.empty(len(self.exprs))
        for i, e in enumerate(self.exprs):
            w[i], g = eval_with_gradient(e, q)
            dw[i] = g @ u
        s = float(w @ n)
        ds = float(dw @ n + w @ dn)
        return dw / s - w * ds / s**2

    def _dnu_fd(self, S, q, u):
        return surface_derivative(S, q, u, lambda x: self.nu(S, x))

    def reflect(self, S, q, v):
        """Outgoing unit direction at a surface point ``q`` for incoming ``v``."""
        n, _ = S.normal_at(q)
        return projective_reflect(v, n, self.nu(S, q, n))

    def __repr__(self):
        return f"TransverseField({self.to_config()!r})"


def harmonic_lines(q, v, v_out, n, nu):
    """The quadruple ``(l, l', T, L_q)`` of lines through ``q``.

    ``T`` is the trace of the tangent hyperplane on the plane spanned by
    ``v`` and ``nu``; the projective law makes the quadruple harmonic.
    """
    t = np.asarray(v, dtype=float) - float(np.dot(v, n)) * np.asarray(nu, dtype=float)
    if np.linalg.norm(t) < 1e-8:
        raise InputError("incoming direction is along the field line; reflection plane undefined")
    return [OrientedLine(q, v), OrientedLine(q, v_out), OrientedLine(q, t), OrientedLine(q, nu)]
