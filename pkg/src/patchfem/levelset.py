"""Implicit interface descriptions with closed-form segment crossings.

Each level set evaluates a signed distance phi; phi < 0 marks subdomain 1 and
phi > 0 subdomain 2. Crossings of straight segments are solved exactly (linear
equation for lines, quadratic for circles), so no iterative root finding is
involved. Values are immutable and all queries are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Circle", "TiltedLine", "HorizontalLine", "vertex_hit", "SNAP_TOL"]

# Crossings within SNAP_TOL (relative to segment length / supplied scale) of a
# segment endpoint are treated as vertex hits, never as interior crossings.
SNAP_TOL = 1e-10


def _interior(roots):
    """Sorted roots strictly inside (0,1) after endpoint snapping."""
    kept = [float(t) for t in roots if SNAP_TOL < t < 1.0 - SNAP_TOL]
    kept.sort()
    return kept


def _line_segment_crossings(phi_a: float, phi_b: float):
    denom = phi_a - phi_b
    if denom == 0.0:
        # Segment parallel to (or lying on) the line: no isolated crossing.
        return []
    return _interior([phi_a / denom])


@dataclass(frozen=True)
class Circle:
    """Circular interface: phi(x) = ||x - center|| - radius."""

    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValueError("circle radius must be positive")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    def eval(self, points):
        points = np.asarray(points, dtype=float)
        d = points - np.asarray(self.center)
        out = np.linalg.norm(d, axis=-1) - self.radius
        return out if out.ndim else float(out)

    def segment_crossings(self, a, b):
        """Parameters t in (0,1) with ||(1-t)a + t b - center|| = radius.

        At most two, solved from the quadratic in t with the numerically
        stable formula. Double roots (tangency) do not cross and yield none.
        """
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        d = b - a
        m = a - np.asarray(self.center)
        qa = float(d @ d)
        qb = 2.0 * float(m @ d)
        qc = float(m @ m) - self.radius**2
        if qa == 0.0:
            raise ValueError("segment endpoints coincide")
        disc = qb * qb - 4.0 * qa * qc
        if disc <= 0.0:
            return []
        sq = np.sqrt(disc)
        # Stable split: q has the sign of qb, avoiding cancellation.
        qq = -0.5 * (qb + np.copysign(sq, qb))
        t1 = qq / qa
        t2 = qc / qq if qq != 0.0 else t1
        if abs(t1 - t2) <= SNAP_TOL:
            return []  # grazing contact, sign does not change
        return _interior([t1, t2])


@dataclass(frozen=True)
class TiltedLine:
    """Line through the origin: phi(x) = cos(alpha) x2 - sin(alpha) x1."""

    alpha: float

    def eval(self, points):
        points = np.asarray(points, dtype=float)
        out = np.cos(self.alpha) * points[..., 1] - np.sin(self.alpha) * points[..., 0]
        return out if out.ndim else float(out)

    def segment_crossings(self, a, b):
        return _line_segment_crossings(self.eval(a), self.eval(b))


@dataclass(frozen=True)
class HorizontalLine:
    """Horizontal line: phi(x) = x2 - y0."""

    y0: float

    def eval(self, points):
        points = np.asarray(points, dtype=float)
        out = points[..., 1] - self.y0
        return out if out.ndim else float(out)

    def segment_crossings(self, a, b):
        return _line_segment_crossings(self.eval(a), self.eval(b))


def vertex_hit(levelset, point, scale: float) -> bool:
    """True iff the interface passes through ``point`` up to snapping.

    ``scale`` is the local length scale (patch diameter) the tolerance is
    relative to.
    """
    return abs(levelset.eval(point)) <= SNAP_TOL * scale
