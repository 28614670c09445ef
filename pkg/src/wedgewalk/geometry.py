"""Curvilinear wedge domains: containment, region classification, reflection vectors.

The domain is bounded above by x2 = a_plus * x1**beta_plus and below by
x2 = -a_minus * x1**beta_minus, for x1 >= 0.  States within Euclidean
distance ``band_width`` of the complement form the boundary band where
reflection drift applies; everything else inside is interior.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels


class Side(enum.Enum):
    UPPER = "upper"
    LOWER = "lower"


class Region(enum.Enum):
    INTERIOR = "interior"
    BOUNDARY_UPPER = "boundary_upper"
    BOUNDARY_LOWER = "boundary_lower"
    OUTSIDE = "outside"


_REGION_FROM_CODE = {
    _kernels.INTERIOR: Region.INTERIOR,
    _kernels.BOUNDARY_UPPER: Region.BOUNDARY_UPPER,
    _kernels.BOUNDARY_LOWER: Region.BOUNDARY_LOWER,
    _kernels.OUTSIDE: Region.OUTSIDE,
}

REGION_CODES = {
    Region.INTERIOR: _kernels.INTERIOR,
    Region.BOUNDARY_UPPER: _kernels.BOUNDARY_UPPER,
    Region.BOUNDARY_LOWER: _kernels.BOUNDARY_LOWER,
    Region.OUTSIDE: _kernels.OUTSIDE,
}


@dataclass(frozen=True)
class Point:
    """Planar state in Cartesian coordinates with polar accessors."""

    x1: float
    x2: float

    @property
    def r(self) -> float:
        return math.hypot(self.x1, self.x2)

    @property
    def theta(self) -> float:
        """Polar angle in (-pi, pi], anticlockwise positive."""
        return math.atan2(self.x2, self.x1)

    @classmethod
    def from_polar(cls, r: float, theta: float) -> "Point":
        return cls(r * math.cos(theta), r * math.sin(theta))

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2])


@dataclass(frozen=True)
class WedgeGeometry:
    """Wedge parameters: amplitudes a, curve exponents beta, band width B."""

    a_plus: float
    a_minus: float
    beta_plus: float
    beta_minus: float
    band_width: float

    def __post_init__(self):
        if not (self.a_plus > 0 and self.a_minus > 0):
            raise ValueError("amplitudes a_plus, a_minus must be positive")
        if self.beta_plus < 0 or self.beta_minus < 0:
            raise ValueError("curve exponents must be nonnegative")
        if not self.band_width > 0:
            raise ValueError("band_width must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.a_plus, self.a_minus,
                         self.beta_plus, self.beta_minus, self.band_width])

    def _side_params(self, side: Side) -> tuple[float, float]:
        if side is Side.UPPER:
            return self.a_plus, self.beta_plus
        return self.a_minus, self.beta_minus

    def boundary_height(self, z: float, side: Side) -> float:
        """Height a * z**beta of the wall on the given side, z >= 0."""
        if z < 0:
            raise ValueError(f"z must be nonnegative, got {z}")
        a, b = self._side_params(side)
        return a if b == 0 else a * z ** b

    def contains(self, p: Point) -> bool:
        return _kernels.contains_xy(self.as_array(), p.x1, p.x2)

    def distance_to_complement(self, p: Point) -> float:
        """Euclidean distance from an in-domain point to the complement of D."""
        if not self.contains(p):
            raise ValueError(f"point {p} is outside the domain")
        return _kernels.dist_to_complement(self.as_array(), p.x1, p.x2)

    def classify(self, p: Point) -> Region:
        """Interior / boundary-band (side by sign of x2) / outside."""
        code, _ = _kernels.classify_xy(self.as_array(), p.x1, p.x2)
        return _REGION_FROM_CODE[code]

    def inward_normal(self, x1: float, side: Side) -> np.ndarray:
        """Unit inward normal at the wall point over abscissa x1 > 0."""
        if x1 <= 0:
            raise ValueError("inward normal undefined at the apex (x1 <= 0)")
        return self.reflection_vector(x1, side, 0.0)

    def reflection_vector(self, x1: float, side: Side, alpha: float) -> np.ndarray:
        """Unit vector at angle alpha to the inward normal (opposed convention).

        Positive alpha rotates anticlockwise on the upper side and clockwise
        on the lower side.
        """
        if x1 <= 0:
            raise ValueError("reflection vector undefined at the apex (x1 <= 0)")
        if not abs(alpha) < math.pi / 2:
            raise ValueError(f"reflection angle must satisfy |alpha| < pi/2, got {alpha}")
        v1, v2 = _kernels.oblique_vector(
            self.as_array(), float(x1), side is Side.UPPER, float(alpha))
        return np.array([v1, v2])
