"""Caustic checks along trajectories.

A trajectory whose segments stay tangent to a fixed set of pencil
members has a conserved tangency spectrum; :func:`conservation_report`
measures how well each spectral slot is conserved, and
:func:`caustic_tangency_check` tracks tangency to one given quadric.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .geometry import OrientedLine, tangency_discriminant, tangency_spectrum


@dataclass
class Slot:
    lambda0: float
    max_dev: float = 0.0
    pole: bool = False

    def to_dict(self):
        return {"lambda0": self.lambda0, "max_dev": self.max_dev, "pole": self.pole}


@dataclass
class ConservationReport:
    slots: list
    passed: bool
    segments: int
    tol: float
    mismatches: list = field(default_factory=list)
    spectra: list = field(default_factory=list, repr=False)

    @property
    def max_dev(self):
        devs = [s.max_dev for s in self.slots if not s.pole]
        return max(devs) if devs else 0.0

    @property
    def max_rel_dev(self):
        devs = [s.max_dev / max(1.0, abs(s.lambda0)) for s in self.slots if not s.pole]
        return max(devs) if devs else 0.0

    def to_dict(self):
        return {
            "slots": [s.to_dict() for s in self.slots],
            "pass": self.passed,
            "segments": self.segments,
            "tol": self.tol,
            "mismatches": self.mismatches,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _segment_lines(traj):
    segs = traj.segments()
    if not segs:
        segs = [(traj.p0, traj.v0)]
    return [OrientedLine(p, u) for p, u in segs]


def conservation_report(traj, P, tol=1e-8):
    """Per-slot conservation of the tangency spectrum w.r.t. pencil ``P``.

    Slots are paired across segments by sorted order, which is the
    nearest-value matching on the real line.  Pole-flagged roots are
    paired but do not count against ``tol`` (relative to ``max(1, |lambda0|)``).
    A segment whose spectrum size differs from the first one, even after
    dropping pole-flagged roots, is listed in ``mismatches``.
    """
    if len(traj.events) < 2:
        raise InputError("conservation report needs at least two reflections")
    lines = _segment_lines(traj)
    spectra = [tangency_spectrum(P, ln) for ln in lines]
    ref = spectra[0]
    slots = [Slot(r.lam, 0.0, r.pole is not None) for r in ref]
    ref_plain = [r for r in ref if r.pole is None]
    mismatches = []
    for k, spectrum in enumerate(spectra[1:], start=1):
        if len(spectrum) == len(ref):
            pairs = list(zip(range(len(ref)), spectrum))
        else:
            plain = [r for r in spectrum if r.pole is None]
            if len(plain) != len(ref_plain):
                mismatches.append({"segment": k, "size": len(spectrum), "expected": len(ref)})
                continue
            idx = [i for i, r in enumerate(ref) if r.pole is None]
            pairs = list(zip(idx, plain))
        for i, r in pairs:
            s = slots[i]
            s.max_dev = max(s.max_dev, abs(r.lam - s.lambda0))
            s.pole = s.pole or r.pole is not None
    ok = not mismatches and all(s.pole or s.max_dev <= tol * max(1.0, abs(s.lambda0)) for s in slots)
    return ConservationReport(slots, ok, len(lines), tol, mismatches, spectra)


@dataclass
class TangencyReport:
    residuals: list
    passed: bool
    tol: float

    @property
    def max_residual(self):
        return max(self.residuals) if self.residuals else 0.0

    def to_dict(self):
        return {
            "residuals": self.residuals,
            "max_residual": self.max_residual,
            "pass": self.passed,
            "segments": len(self.residuals),
            "tol": self.tol,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def caustic_tangency_check(traj, gamma, tol=1e-8, first_tol=1e-8):
    """Does every segment stay tangent to ``gamma`` once the first one is?"""
    lines = _segment_lines(traj)
    res = [abs(tangency_discriminant(gamma, ln)) for ln in lines]
    if res[0] > first_tol:
        raise InputError(f"first segment is not tangent to the quadric (residual {res[0]:.3g})")
    return TangencyReport(res, bool(np.all(np.array(res) <= tol)), tol)
