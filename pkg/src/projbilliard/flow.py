"""Ray casting against the table boundary and the iterated billiard map."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .errors import BilliardError, Escape, GrazingHit, InputError, NumericalFailure
from .reflection import TransverseField
from .surface import ImplicitSurface

RAY_EPS = 1e-8
GRAZING_HIT_TOL = 1e-7
HIT_TOL = 1e-11


@dataclass
class BilliardTable:
    """A boundary surface, its transverse field and a point inside.

    The surface orientation is reset so that ``interior_point`` lies on
    the negative side, i.e. normals point out of the table.
    """

    surface: ImplicitSurface
    field: TransverseField
    interior_point: np.ndarray
    max_chord: float | None = None

    def __post_init__(self):
        self.interior_point = np.asarray(self.interior_point, dtype=float)
        if self.interior_point.shape != (self.surface.dimension,):
            raise InputError("interior point dimension does not match the surface")
        self.field.check_dimension(self.surface.dimension)
        self.surface = self.surface.oriented(self.interior_point)

    @property
    def dimension(self):
        return self.surface.dimension

    @classmethod
    def from_config(cls, cfg):
        if not isinstance(cfg, dict):
            raise InputError("table config must be a JSON object")
        try:
            d = int(cfg["dimension"])
            surf = cfg["surface"]
            kind = surf["kind"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"table config is missing {exc}") from exc
        if kind == "quadric":
            S = ImplicitSurface.quadric(surf["A"])
        elif kind == "implicit":
            S = ImplicitSurface.implicit(surf["expression"], d, scale=surf.get("scale"))
        else:
            raise InputError(f"unknown surface kind {kind!r}")
        if S.dimension != d:
            raise InputError("surface dimension does not match 'dimension'")
        fld = TransverseField.from_config(cfg.get("field", {"kind": "euclidean"}))
        interior = cfg.get("interior_point", [0.0] * d)
        return cls(S, fld, interior, cfg.get("max_chord"))

    def to_config(self):
        S = self.surface
        if S.is_quadric:
            surf = {"kind": "quadric", "A": S.F.A.tolist()}
        else:
            surf = {"kind": "implicit", "expression": str(S.F)}
        cfg = {
            "dimension": self.dimension,
            "surface": surf,
            "field": self.field.to_config(),
            "interior_point": self.interior_point.tolist(),
        }
        if self.max_chord is not None:
            cfg["max_chord"] = self.max_chord
        return cfg


def _polish(S, p, v, t, lo=None, hi=None):
    for _ in range(4):
        f, g = S.value_and_gradient(p + t * v)
        if abs(f) <= HIT_TOL:
            break
        slope = float(g @ v)
        if slope == 0.0:
            break
        t_new = t - f / slope
        if (lo is not None and t_new < lo) or (hi is not None and t_new > hi):
            break
        t = t_new
    return t


def _quadric_hit(S, p, v, t_min):
    A = S.F.A
    Av = A @ v
    a = float(v @ Av)
    b = float(p @ Av)
    c = float(p @ A @ p) - 1.0
    if a == 0.0:
        roots = [] if b == 0.0 else [-c / (2.0 * b)]
    else:
        disc = b * b - a * c
        if disc < 0.0:
            raise Escape("ray misses the quadric")
        s = -(b + math.copysign(math.sqrt(disc), b))
        roots = [s / a] + ([c / s] if s != 0.0 else [])
    ahead = sorted(t for t in roots if t > t_min)
    if not ahead:
        raise Escape("quadric lies behind the ray")
    return _polish(S, p, v, ahead[0])


def _marched_hit(S, p, v, t_min, max_chord, t_max, max_steps):
    sigma = S.sigma

    def f(t):
        return sigma * S.value(p + t * v)

    t0 = t_min
    f0 = f(t0)
    while f0 >= 0.0 and t0 < 1e-4 * S.scale:
        t0 *= 4.0
        f0 = f(t0)
    if f0 >= 0.0:
        raise InputError("ray does not start inside the table")
    min_step = 1e-3 * max_chord
    t, ft = t0, f0
    for _ in range(max_steps):
        g = np.linalg.norm(S.gradient(p + t * v))
        guess = 0.5 * abs(ft) / g if g > 0.0 else max_chord
        step = min(max_chord, max(min_step, guess))
        t_next = t + step
        f_next = f(t_next)
        if f_next >= 0.0:
            t_hit = brentq(f, t, t_next, xtol=1e-15 * max(1.0, t_next), rtol=4 * np.finfo(float).eps)
            return _polish(S, p, v, t_hit, t, t_next)
        if t_next > t_max:
            raise Escape(f"no boundary crossing within t <= {t_max:g}")
        t, ft = t_next, f_next
    raise NumericalFailure("ray marching exhausted its step budget")


def ray_intersect(S, p, v, t_min=None, max_chord=None, t_max=None, max_steps=200_000):
    """First boundary crossing ``q = p + t v`` with ``t > t_min``.

    Quadrics use the closed-form quadratic; other surfaces are marched
    with steps bounded by ``max_chord`` and the crossing is bracketed,
    then polished with Newton steps.
    """
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    if p.shape != (S.dimension,) or v.shape != (S.dimension,):
        raise InputError("point/direction dimension does not match the surface")
    nv = np.linalg.norm(v)
    if not math.isfinite(nv) or nv == 0.0:
        raise InputError("direction must be a finite non-zero vector")
    v = v / nv
    scale = S.scale
    t_min = RAY_EPS * scale if t_min is None else t_min
    if S.is_quadric:
        t = _quadric_hit(S, p, v, t_min)
    else:
        max_chord = 0.05 * scale if max_chord is None else max_chord
        t_max = 1e3 * scale if t_max is None else t_max
        t = _marched_hit(S, p, v, t_min, max_chord, t_max, max_steps)
    q = p + t * v
    if abs(S.value(q)) > HIT_TOL:
        q = S.project(q)
    n, _ = S.normal_at(q)
    if abs(float(n @ v)) < GRAZING_HIT_TOL:
        raise GrazingHit(f"ray grazes the boundary at {q.tolist()}")
    return q, t


@dataclass(frozen=True)
class Event:
    """One reflection: hit point, incoming/outgoing directions, flight length.

    ``t`` is the length of the flight that arrived at ``q``.
    """

    q: np.ndarray
    v_in: np.ndarray
    v_out: np.ndarray
    t: float


@dataclass
class Trajectory:
    p0: np.ndarray
    v0: np.ndarray
    events: list = field(default_factory=list)
    status: str = "complete"
    detail: str = ""

    def __len__(self):
        return len(self.events)

    @property
    def points(self):
        return np.array([e.q for e in self.events])

    @property
    def completed(self):
        return self.status == "complete"

    def segments(self):
        """Base point and unit direction of every straight piece.

        The first piece is the incoming ray of the first event; the others
        leave each event along its outgoing direction.
        """
        if not self.events:
            return []
        segs = [(self.events[0].q, self.events[0].v_in)]
        segs.extend((e.q, e.v_out) for e in self.events)
        return segs

    def to_csv(self, dest=None):
        d = self.p0.shape[0]
        header = (
            ["step", "t"]
            + [f"q{i}" for i in range(1, d + 1)]
            + [f"vi{i}" for i in range(1, d + 1)]
            + [f"vo{i}" for i in range(1, d + 1)]
        )
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for k, e in enumerate(self.events, start=1):
            row = [str(k), _fmt(e.t)] + [_fmt(x) for x in (*e.q, *e.v_in, *e.v_out)]
            w.writerow(row)
        text = buf.getvalue()
        if dest is not None:
            Path(dest).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source):
        """Read a trajectory written by :meth:`to_csv` (path or CSV text)."""
        text = source if "\n" in str(source) else Path(source).read_text()
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise InputError("empty trajectory CSV")
        header = rows[0]
        if len(header) < 2 or header[:2] != ["step", "t"] or (len(header) - 2) % 3:
            raise InputError("trajectory CSV header must be step,t,q...,vi...,vo...")
        d = (len(header) - 2) // 3
        events = []
        try:
            for row in rows[1:]:
                if not row:
                    continue
                vals = [float(x) for x in row[1:]]
                if len(vals) != 1 + 3 * d:
                    raise InputError(f"trajectory CSV row {row[0]} has {len(row)} fields")
                t, rest = vals[0], np.array(vals[1:])
                events.append(Event(rest[:d], rest[d : 2 * d], rest[2 * d :], t))
        except ValueError as exc:
            raise InputError(f"bad number in trajectory CSV: {exc}") from exc
        if not events:
            raise InputError("trajectory CSV has no events")
        p0 = events[0].q - events[0].t * events[0].v_in
        return cls(p0, events[0].v_in, events, status="loaded")


def _fmt(x):
    return "%.17g" % x


def orbit(table, p0, v0, N, **ray_opts):
    """Follow the billiard flow for up to ``N`` reflections.

    Escape, grazing hits and non-transverse (light-like) normals end the
    orbit early; the trajectory records the reason in ``status``.
    """
    S = table.surface
    p = np.asarray(p0, dtype=float)
    v = np.asarray(v0, dtype=float)
    if p.shape != (S.dimension,) or v.shape != (S.dimension,):
        raise InputError("initial point/direction dimension does not match the table")
    if N < 1:
        raise InputError("N must be at least 1")
    nv = np.linalg.norm(v)
    if nv == 0.0 or not math.isfinite(nv):
        raise InputError("initial direction must be finite and non-zero")
    v = v / nv
    f, g = S.value_and_gradient(p)
    if S.sigma * f > 1e-9:
        raise InputError("initial point is outside the table")
    if abs(f) <= 1e-9 and S.sigma * float(g @ v) >= 0.0:
        raise InputError("initial point is on the boundary but the direction leaves the table")
    ray_opts.setdefault("max_chord", table.max_chord)
    traj = Trajectory(p.copy(), v.copy())
    try:
        for _ in range(N):
            q, t = ray_intersect(S, p, v, **ray_opts)
            v_out = table.field.reflect(S, q, v)
            traj.events.append(Event(q, v, v_out, float(t)))
            p, v = q, v_out
    except BilliardError as exc:
        if isinstance(exc, InputError):
            raise
        traj.status = exc.status
        traj.detail = str(exc)
    return traj
