"""Deployment domains, uniform node placement and distance computation.

Domains are axis-aligned boxes (square in 2-D, cube in 3-D) with side L.
Points are plain numpy arrays of shape (d,); point sets are (n, d) arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box [0, side]^dimension with dimension in {2, 3}."""

    dimension: int
    side: float

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.dimension}")
        if not (math.isfinite(self.side) and self.side > 0):
            raise ValueError(f"side must be a positive finite real, got {self.side}")

    @property
    def volume(self) -> float:
        return self.side ** self.dimension

    def contains(self, points) -> bool:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.dimension:
            return False
        return bool((pts >= 0).all() and (pts <= self.side).all())


def sample_points(domain: Domain, n: int, seed) -> np.ndarray:
    """Draw n i.i.d. uniform points in the box; deterministic given seed.

    `seed` may be an integer, a SeedSequence or an existing Generator
    (anything accepted by numpy.random.default_rng).
    """
    if n < 1:
        raise ValueError(f"need at least one point, got n={n}")
    rng = np.random.default_rng(seed)
    return rng.random((n, domain.dimension)) * domain.side


def distance(a, b) -> float:
    """Euclidean distance between two points of equal dimension."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


# Square corners indexed counterclockwise from the origin.
_CORNER_SIGNS = ((0, 0), (1, 0), (1, 1), (0, 1))


def corner_polar(point, corner_index: int, domain: Domain) -> tuple[float, float]:
    """Polar coordinates of a point relative to one corner of the square.

    The angle is measured between the two domain edges incident to the
    corner, so theta lies in [0, pi/2] for points inside the domain.
    Defined only for d=2; a point sitting exactly on the corner reports
    theta = 0.
    """
    if domain.dimension != 2:
        raise ValueError("corner coordinates are defined only for square domains")
    if corner_index not in (0, 1, 2, 3):
        raise ValueError(f"corner_index must be in {{0,1,2,3}}, got {corner_index}")
    p = np.asarray(point, dtype=float)
    if p.shape != (2,):
        raise ValueError(f"expected a 2-D point, got shape {p.shape}")
    sx, sy = _CORNER_SIGNS[corner_index]
    L = domain.side
    u = L - p[0] if sx else p[0]
    v = L - p[1] if sy else p[1]
    r = math.hypot(u, v)
    theta = 0.0 if r == 0.0 else math.atan2(v, u)
    return r, theta
