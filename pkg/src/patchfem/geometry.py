"""Planar triangle primitives: signed areas, interior angles, affine maps,
and quadrature rules on the unit reference triangle.

Triangles are ``(..., 3, 2)`` arrays of vertex coordinates in counterclockwise
order; all routines broadcast over leading axes. Everything here is pure and
allocation-only, safe for unrestricted concurrent use.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DegenerateTriangle",
    "UnsupportedDegree",
    "AffineMap",
    "QuadRule",
    "REFERENCE_TRIANGLE",
    "triangle_area",
    "interior_angles",
    "affine_map_between",
    "reference_quad_rule",
]

# Unit reference triangle (0,0)-(1,0)-(0,1); area 1/2.
REFERENCE_TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])

# A triangle is degenerate when |2*area| < DEGENERACY_TOL * (longest edge)^2;
# scale invariant.
DEGENERACY_TOL = 1e-14


class DegenerateTriangle(ValueError):
    """Triangle with (numerically) collinear vertices."""


class UnsupportedDegree(ValueError):
    """No quadrature rule tabulated for the requested degree."""


def triangle_area(tri) -> np.ndarray | float:
    """Signed area of ``tri``; positive for counterclockwise vertex order.

    Parameters
    ----------
    tri : array_like, shape (..., 3, 2)

    Returns
    -------
    float or ndarray of shape (...)
    """
    tri = np.asarray(tri, dtype=float)
    d1 = tri[..., 1, :] - tri[..., 0, :]
    d2 = tri[..., 2, :] - tri[..., 0, :]
    area = 0.5 * (d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0])
    return area if area.ndim else float(area)


def _edge_lengths_sq(tri):
    e0 = tri[..., 1, :] - tri[..., 0, :]
    e1 = tri[..., 2, :] - tri[..., 1, :]
    e2 = tri[..., 0, :] - tri[..., 2, :]
    return np.stack(
        [np.sum(e0 * e0, axis=-1), np.sum(e1 * e1, axis=-1), np.sum(e2 * e2, axis=-1)],
        axis=-1,
    )


def _check_nondegenerate(tri):
    area = np.asarray(triangle_area(tri))
    longest_sq = _edge_lengths_sq(tri).max(axis=-1)
    bad = np.abs(2.0 * area) < DEGENERACY_TOL * longest_sq
    if np.any(bad):
        raise DegenerateTriangle("triangle vertices are (numerically) collinear")


def interior_angles(tri) -> np.ndarray:
    """Interior angles in degrees; entry ``i`` is the angle at vertex ``i``.

    Computed from normalized dot products of the two edge vectors adjacent to
    each vertex. The three angles sum to 180 degrees.

    Parameters
    ----------
    tri : array_like, shape (..., 3, 2)

    Returns
    -------
    ndarray, shape (..., 3)

    Raises
    ------
    DegenerateTriangle
        If any triangle is numerically collinear.
    """
    tri = np.asarray(tri, dtype=float)
    _check_nondegenerate(tri)
    angles = np.empty(tri.shape[:-1])
    for i in range(3):
        a = tri[..., (i + 1) % 3, :] - tri[..., i, :]
        b = tri[..., (i + 2) % 3, :] - tri[..., i, :]
        cosang = np.sum(a * b, axis=-1) / (
            np.linalg.norm(a, axis=-1) * np.linalg.norm(b, axis=-1)
        )
        angles[..., i] = np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0)))
    return angles


@dataclass(frozen=True)
class AffineMap:
    """Affine map x -> linear @ x + offset with invertible linear part."""

    linear: np.ndarray  # (2, 2)
    offset: np.ndarray  # (2,)

    def __post_init__(self):
        object.__setattr__(self, "linear", np.asarray(self.linear, dtype=float))
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=float))
        if abs(np.linalg.det(self.linear)) == 0.0:
            raise DegenerateTriangle("affine map has singular linear part")

    def __call__(self, points):
        """Apply the map to points of shape (..., 2)."""
        points = np.asarray(points, dtype=float)
        return points @ self.linear.T + self.offset

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.linear))

    def inverse(self) -> "AffineMap":
        inv = np.linalg.inv(self.linear)
        return AffineMap(inv, -inv @ self.offset)


def affine_map_between(source, target) -> AffineMap:
    """Affine map sending the vertices of ``source`` onto ``target`` in order.

    Both arguments are (3, 2) triangles; the source must be non-degenerate.
    """
    source = np.asarray(source, dtype=float)
    target = np.asarray(target, dtype=float)
    _check_nondegenerate(source)
    # Columns of S/T span the edge vectors from vertex 0.
    s_mat = np.column_stack([source[1] - source[0], source[2] - source[0]])
    t_mat = np.column_stack([target[1] - target[0], target[2] - target[0]])
    linear = t_mat @ np.linalg.inv(s_mat)
    offset = target[0] - linear @ source[0]
    return AffineMap(linear, offset)


@dataclass(frozen=True)
class QuadRule:
    """Quadrature rule on the unit reference triangle.

    Points lie inside the closed reference triangle and the weights sum to its
    area 1/2.
    """

    points: np.ndarray  # (n, 2)
    weights: np.ndarray  # (n,)
    degree: int

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        x, y = self.points[:, 0], self.points[:, 1]
        eps = 1e-14
        if np.any(x < -eps) or np.any(y < -eps) or np.any(x + y > 1.0 + eps):
            raise ValueError("quadrature points outside the reference triangle")
        if np.any(self.weights <= 0.0):
            raise ValueError("quadrature weights must be positive")
        if abs(self.weights.sum() - 0.5) > 1e-14:
            raise ValueError("quadrature weights must sum to 1/2")

    def integrate(self, f) -> float:
        """Integrate a callable f(points (n,2)) -> (n,) over the reference triangle."""
        return float(np.dot(self.weights, np.asarray(f(self.points))))


def reference_quad_rule(degree: int) -> QuadRule:
    """Tabulated rule exact for polynomials up to ``degree`` on the reference triangle.

    degree 1: centroid rule (1 point); degree 2: the three-point rule with
    points (2/3,1/6), (1/6,1/6), (1/6,2/3) and weights 1/6; degree 5: the
    classical seven-point rule.
    """
    if degree == 1:
        return QuadRule(np.array([[1.0 / 3.0, 1.0 / 3.0]]), np.array([0.5]), 1)
    if degree == 2:
        pts = np.array(
            [
                [2.0 / 3.0, 1.0 / 6.0],
                [1.0 / 6.0, 1.0 / 6.0],
                [1.0 / 6.0, 2.0 / 3.0],
            ]
        )
        return QuadRule(pts, np.full(3, 1.0 / 6.0), 2)
    if degree == 5:
        sq15 = np.sqrt(15.0)
        a = (6.0 + sq15) / 21.0
        b = (6.0 - sq15) / 21.0
        wa = (155.0 + sq15) / 2400.0
        wb = (155.0 - sq15) / 2400.0
        pts = np.array(
            [
                [1.0 / 3.0, 1.0 / 3.0],
                [a, a],
                [1.0 - 2.0 * a, a],
                [a, 1.0 - 2.0 * a],
                [b, b],
                [1.0 - 2.0 * b, b],
                [b, 1.0 - 2.0 * b],
            ]
        )
        wts = np.array([9.0 / 80.0, wa, wa, wa, wb, wb, wb])
        return QuadRule(pts, wts, 5)
    raise UnsupportedDegree(f"no rule tabulated for degree {degree}")
