"""Covariance normalization and the critical threshold machinery.

Provides the whitening transform T with T * Sigma * T' = I that fixes the
horizontal direction, the derived reflection angles after the transform,
the critical curve exponent beta_c separating recurrence from transience,
the passage-time tail exponent s0, and the extremal analysis of beta_c
over the reflection angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HALF_PI = math.pi / 2


@dataclass(frozen=True)
class CovarianceSpec:
    """Interior increment covariance: diagonal variances and correlation rho."""

    sigma1_sq: float
    sigma2_sq: float
    rho: float = 0.0

    def __post_init__(self):
        if not (self.sigma1_sq > 0 and self.sigma2_sq > 0):
            raise ValueError("variances must be positive")
        if not self.rho ** 2 < self.sigma1_sq * self.sigma2_sq:
            raise ValueError(
                "rho^2 must be < sigma1_sq * sigma2_sq (positive definiteness)")

    @property
    def s(self) -> float:
        """sqrt of det Sigma."""
        return math.sqrt(self.sigma1_sq * self.sigma2_sq - self.rho ** 2)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.sigma1_sq, self.rho], [self.rho, self.sigma2_sq]])

    def scaled(self, factor: float) -> "CovarianceSpec":
        return CovarianceSpec(self.sigma1_sq * factor,
                              self.sigma2_sq * factor,
                              self.rho * factor)


@dataclass(frozen=True)
class DerivedAngles:
    """Reflection-related angles and scalars after whitening.

    theta1: limiting transformed reflection angle (shallow walls).
    theta2: rotation of the vertical direction under T.
    theta3: limiting transformed reflection angle from the horizontal (steep walls).
    d: normalizing length of the transformed reflection direction.
    eta0 / eta1: spiral slopes used by the logarithmic Lyapunov functions.
    """

    theta1: float
    theta2: float
    theta3: float
    d: float
    eta0: float
    eta1: float


@dataclass(frozen=True)
class Thresholds:
    beta_c: float
    s0: float
    bc_min: float
    bc_max: float


def transform_matrix(cov: CovarianceSpec) -> np.ndarray:
    """Upper-triangular T with T Sigma T' = I, leaving e1 direction fixed."""
    s = cov.s
    sig2 = math.sqrt(cov.sigma2_sq)
    return np.array([[sig2 / s, -cov.rho / (s * sig2)],
                     [0.0, 1.0 / sig2]])


def beta_c(cov: CovarianceSpec, alpha: float) -> float:
    """Critical curve exponent as a function of the reflection angle."""
    if abs(alpha) > HALF_PI + 1e-12:
        raise ValueError(f"alpha must lie in [-pi/2, pi/2], got {alpha}")
    s1, s2, rho = cov.sigma1_sq, cov.sigma2_sq, cov.rho
    sa = math.sin(alpha)
    return s1 / s2 + ((s2 - s1) / s2) * sa * sa + (rho / s2) * math.sin(2 * alpha)


def s0(cov: CovarianceSpec, alpha: float, beta: float) -> float:
    """Passage-time tail exponent (1 - beta/beta_c)/2."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    return 0.5 * (1.0 - beta / beta_c(cov, alpha))


def derived_angles(cov: CovarianceSpec, alpha: float) -> DerivedAngles:
    """Angles theta1, theta2, theta3 and scalars d, eta0, eta1 for given alpha."""
    if not abs(alpha) < HALF_PI:
        raise ValueError(f"alpha must satisfy |alpha| < pi/2, got {alpha}")
    s1, s2, rho = cov.sigma1_sq, cov.sigma2_sq, cov.rho
    s = cov.s
    ta = math.tan(alpha)
    sa, ca = math.sin(alpha), math.cos(alpha)
    theta1 = math.atan((s2 / s) * ta + rho / s)
    theta2 = math.atan(rho / s)
    d = math.sqrt(s2 * ca * ca - 2 * rho * sa * ca + s1 * sa * sa)
    sig2 = math.sqrt(s2)
    sin3 = s * sa / (sig2 * d)
    cos3 = (s2 * ca - rho * sa) / (sig2 * d)
    theta3 = math.atan2(sin3, cos3)
    eta0 = (s2 * ta + rho) / s
    eta1 = (s1 * ta - rho) / s
    return DerivedAngles(theta1, theta2, theta3, d, eta0, eta1)


def phi_stationary(b: float) -> tuple[float, float, float, float]:
    """Stationary points of phi(alpha) = sin^2 alpha + b sin 2 alpha, b != 0.

    Returns (alpha_min, phi_min, alpha_max, phi_max) with the minimizer at
    alpha0 = arctan(-2b)/2 and the maximizer a quarter turn away, on the
    side given by the sign of b.
    """
    if b == 0:
        raise ValueError("b must be nonzero")
    alpha0 = 0.5 * math.atan(-2.0 * b)
    root = math.sqrt(1.0 + 4.0 * b * b)
    phi_min = 0.5 * (1.0 - root)
    alpha1 = alpha0 + HALF_PI if b > 0 else alpha0 - HALF_PI
    phi_max = 0.5 * (1.0 + root)
    return alpha0, phi_min, alpha1, phi_max


def bc_extrema(cov: CovarianceSpec) -> tuple[float, float, float, float]:
    """(bc_min, bc_max, argmin, argmax) of beta_c over alpha in [-pi/2, pi/2].

    In the isotropic uncorrelated case beta_c is constant 1 and the arg
    locations are reported as NaN.
    """
    s1, s2, rho = cov.sigma1_sq, cov.sigma2_sq, cov.rho
    if abs(s1 - s2) + abs(rho) == 0:
        return 1.0, 1.0, math.nan, math.nan
    if s1 == s2:
        # beta_c = 1 + (rho/s2) sin 2a: stationary at alpha = +-pi/4
        candidates = [-HALF_PI / 2, HALF_PI / 2]
    elif rho == 0:
        # phi = sin^2: stationary at 0 and the endpoints +-pi/2
        candidates = [0.0, HALF_PI]
    else:
        a_lo, _, a_hi, _ = phi_stationary(rho / (s2 - s1))
        candidates = [a_lo, a_hi]
    values = [beta_c(cov, a) for a in candidates]
    if values[0] <= values[1]:
        return values[0], values[1], candidates[0], candidates[1]
    return values[1], values[0], candidates[1], candidates[0]


def bc_extrema_closed_form(cov: CovarianceSpec) -> tuple[float, float]:
    """Closed-form (bc_min, bc_max) used as the cross-check target."""
    s1, s2, rho = cov.sigma1_sq, cov.sigma2_sq, cov.rho
    root = math.sqrt((s1 - s2) ** 2 + 4 * rho ** 2)
    base = 0.5 + s1 / (2 * s2)
    return base - root / (2 * s2), base + root / (2 * s2)
