"""Lyapunov test functions and their leading-order expected one-step increments.

The family contains polar harmonic functions h_w and powers of them (after
whitening), a tilted variant that decouples the two walls, and slowly
growing log-log functions for the critical regimes.  For every member the
module produces the predicted leading drift term at a state, against which
Monte Carlo estimates are compared.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .geometry import Point, Region, Side, WedgeGeometry
from .spectral import CovarianceSpec, beta_c, derived_angles, transform_matrix

HALF_PI = math.pi / 2
_ANGLE_TOL = 1e-9


class FunctionKind(enum.Enum):
    HW = "hw"                # r^w cos(w theta - theta0), untransformed
    FW_GAMMA = "fw_gamma"    # (h_w(Tx))^gamma
    F_BIG = "f_big"          # fw_gamma + lam * x2 * |Tx|^(2 nu)
    H_LOG = "h_log"          # log|Tx| + eta * theta(Tx)
    ELL = "ell"              # log of h_log, both logs clamped below at 1
    G_GAMMA = "g_gamma"      # ell + theta^2 / (1+r)^gamma, eta = eta0
    W_GAMMA = "w_gamma"      # ell - x1 / (1+|x|^2)^gamma, eta = eta1


@dataclass(frozen=True)
class LyapunovParams:
    """Parameter tuple (w, gamma, theta0, lam, nu, eta) selecting a member."""

    w: float = 0.0
    gamma: float = 1.0
    theta0: float = 0.0
    lam: float = 0.0
    nu: float = 0.0
    eta: float = 0.0

    def __post_init__(self):
        if not abs(self.theta0) < HALF_PI:
            raise ValueError("theta0 must lie in (-pi/2, pi/2)")


@dataclass(frozen=True)
class DriftPrediction:
    """Leading-order predicted E_x[f(xi_1) - f(x)] and its |x| power."""

    value: float
    order: float
    regime: Region


class DriftPreconditionError(ValueError):
    """A drift expansion was requested outside its hypothesis range."""


def h_w(p: Point, w: float, theta0: float) -> float:
    """Polar harmonic r^w cos(w*theta - theta0)."""
    r = p.r
    if r == 0.0:
        if w < 0:
            raise ValueError("h_w undefined at the origin for negative w")
        return 0.0 if w > 0 else math.cos(-theta0)
    return r ** w * math.cos(w * p.theta - theta0)


def grad_h_w(p: Point, w: float, theta0: float) -> np.ndarray:
    """Cartesian gradient of h_w."""
    r = p.r
    if r == 0.0:
        raise ValueError("gradient of h_w undefined at the origin")
    th = p.theta
    c = w * r ** (w - 1.0)
    ang = (w - 1.0) * th - theta0
    return np.array([c * math.cos(ang), -c * math.sin(ang)])


def clamped_log(y):
    """The convention log y := max(1, log y) used by the slow functions."""
    return np.maximum(1.0, np.log(y))


def asymptotic_radius(eta: float) -> float:
    """Radius beyond which the log-log family is smooth and the expansions apply."""
    return math.exp(math.e + abs(eta) * math.pi)


def _transform(cov: CovarianceSpec, x1, x2):
    t = transform_matrix(cov)
    y1 = t[0, 0] * x1 + t[0, 1] * x2
    y2 = t[1, 1] * x2
    return y1, y2


def evaluate_many(kind: FunctionKind, x1, x2,
                  params: LyapunovParams, cov: CovarianceSpec,
                  geom: WedgeGeometry | None = None) -> np.ndarray:
    """Vectorized evaluation on arrays of coordinates."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if kind is FunctionKind.HW:
        r = np.hypot(x1, x2)
        th = np.arctan2(x2, x1)
        return r ** params.w * np.cos(params.w * th - params.theta0)
    y1, y2 = _transform(cov, x1, x2)
    rt = np.hypot(y1, y2)
    tht = np.arctan2(y2, y1)
    if kind in (FunctionKind.FW_GAMMA, FunctionKind.F_BIG):
        h = rt ** params.w * np.cos(params.w * tht - params.theta0)
        g = params.gamma
        if g == float(int(g)):
            f = h ** g
        else:
            if np.any(h <= 0):
                raise ValueError(
                    "h_w(Tx) <= 0 under non-integer gamma: invalid parameter region")
            f = h ** g
        if kind is FunctionKind.FW_GAMMA:
            return f
        return f + params.lam * x2 * rt ** (2.0 * params.nu)
    hlog = clamped_log(rt) + params.eta * tht
    if kind is FunctionKind.H_LOG:
        return hlog
    if np.any(hlog <= 0):
        raise ValueError("h(Tx) <= 0: state below the domain of the log-log family")
    ell = clamped_log(hlog)
    if kind is FunctionKind.ELL:
        return ell
    if kind is FunctionKind.G_GAMMA:
        r = np.hypot(x1, x2)
        th = np.arctan2(x2, x1)
        return ell + th * th / (1.0 + r) ** params.gamma
    if kind is FunctionKind.W_GAMMA:
        r2 = x1 * x1 + x2 * x2
        return ell - x1 / (1.0 + r2) ** params.gamma
    raise ValueError(f"unknown function kind {kind}")


def evaluate(kind: FunctionKind, p: Point, params: LyapunovParams,
             cov: CovarianceSpec, geom: WedgeGeometry | None = None) -> float:
    """Scalar evaluation of the selected Lyapunov function at a state."""
    return float(evaluate_many(kind, p.x1, p.x2, params, cov, geom))


def make_params(kind: FunctionKind, cov: CovarianceSpec, alpha: float, *,
                w: float = 0.0, gamma: float = 1.0, lam: float = 0.0,
                nu: float = 0.0, steep: bool = False) -> LyapunovParams:
    """Params with theta0/eta matched to the drift expansions.

    steep=False targets walls with exponent below one (theta0 = theta1,
    eta = eta0); steep=True targets exponents above one
    (theta0 = theta3 - (1-w) theta2, eta = eta1).
    """
    ang = derived_angles(cov, alpha)
    if steep:
        theta0 = ang.theta3 - (1.0 - w) * ang.theta2
        eta = ang.eta1
    else:
        theta0 = ang.theta1
        eta = ang.eta0
    return LyapunovParams(w=w, gamma=gamma, theta0=theta0, lam=lam, nu=nu, eta=eta)


def largest_admissible_w(cov: CovarianceSpec, alpha: float) -> float:
    """Largest w in (0, 1/2) keeping sup |w theta - theta0(w)| < pi/2.

    theta0(w) = theta3 - (1-w) theta2; the supremum runs over
    theta in [-pi/2, pi/2].  Found by bisection.
    """
    ang = derived_angles(cov, alpha)

    def excess(w: float) -> float:
        theta0 = ang.theta3 - (1.0 - w) * ang.theta2
        return w * HALF_PI + abs(theta0) - HALF_PI

    if excess(0.5) < 0:
        return 0.5
    lo, hi = 0.0, 0.5
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if excess(mid) < 0:
            lo = mid
        else:
            hi = mid
    return lo


def _require(cond: bool, rule: str, detail: str):
    if not cond:
        raise DriftPreconditionError(f"{rule}: {detail}")


def _side_of(region: Region) -> Side:
    if region is Region.BOUNDARY_UPPER:
        return Side.UPPER
    if region is Region.BOUNDARY_LOWER:
        return Side.LOWER
    raise ValueError(f"no boundary side for region {region}")


def _wall_params(geom: WedgeGeometry, side: Side) -> tuple[float, float]:
    if side is Side.UPPER:
        return geom.a_plus, geom.beta_plus
    return geom.a_minus, geom.beta_minus


def _check_theta0(params: LyapunovParams, expected: float, rule: str, label: str):
    _require(abs(params.theta0 - expected) <= _ANGLE_TOL, rule,
             f"requires theta0 = {label} = {expected:.12g}, got {params.theta0:.12g}")


def predicted_drift(kind: FunctionKind, p: Point, region: Region,
                    params: LyapunovParams, cov: CovarianceSpec,
                    geom: WedgeGeometry, alpha: float, mu: float,
                    p_moment: float = 4.0) -> DriftPrediction:
    """Leading term of the expected one-step increment at state p.

    mu is the boundary drift magnitude on the relevant side (ignored for the
    interior).  Raises DriftPreconditionError when the requested combination
    falls outside the hypotheses of the corresponding expansion.
    """
    if region is Region.OUTSIDE:
        raise ValueError("no drift prediction outside the domain")
    ang = derived_angles(cov, alpha)
    sig2 = math.sqrt(cov.sigma2_sq)
    s = cov.s
    ca = math.cos(alpha)
    bcrit = beta_c(cov, alpha)
    y1, y2 = _transform(cov, p.x1, p.x2)
    rt = math.hypot(y1, y2)

    if kind is FunctionKind.HW:
        params = replace(params, gamma=1.0)
        kind = FunctionKind.FW_GAMMA

    if kind in (FunctionKind.FW_GAMMA, FunctionKind.F_BIG):
        w, g = params.w, params.gamma
        _require(2.0 - p_moment < g * w < p_moment, "power-function drift",
                 f"needs 2-p < gamma*w < p, got gamma*w = {g * w}")
        h = rt ** w * math.cos(w * math.atan2(y2, y1) - params.theta0)
        if region is Region.INTERIOR:
            val = 0.5 * g * (g - 1.0) * w * w * h ** (g - 2.0) * rt ** (2.0 * w - 2.0)
            return DriftPrediction(val, g * w - 2.0, region)
        side = _side_of(region)
        a, b = _wall_params(geom, side)
        if kind is FunctionKind.F_BIG:
            bplus, bminus = geom.beta_plus, geom.beta_minus
            _require(bplus != bminus, "tilted-function drift",
                     "needs distinct wall exponents")
            _require(max(bplus, bminus) < 1.0 and min(bplus, bminus) >= 0.0,
                     "tilted-function drift", "needs both wall exponents in [0, 1)")
            gw = g * w
            lo = gw + min(bplus, bminus) - 2.0
            hi = gw + max(bplus, bminus) - 2.0
            _require(lo < 2.0 * params.nu < hi, "tilted-function drift",
                     f"needs {lo} < 2*nu < {hi}, got 2*nu = {2 * params.nu}")
            _check_theta0(params, ang.theta1, "tilted-function drift", "theta1")
            small_side = Side.UPPER if bplus < bminus else Side.LOWER
            if side is small_side:
                sgn = -1.0 if side is Side.UPPER else 1.0
                val = params.lam * rt ** (2.0 * params.nu) * sgn * mu * ca
                return DriftPrediction(val, 2.0 * params.nu, region)
            # dominant side follows the shallow-wall power formula below
        if b < 1.0:
            _check_theta0(params, ang.theta1, "shallow-wall power drift", "theta1")
            coeff = (a * mu * sig2 * math.cos(ang.theta1)) / (s * ca)
            val = (g * w * rt ** (w - 1.0) * h ** (g - 1.0) * coeff
                   * (b - (1.0 - w) * bcrit) * p.x1 ** (b - 1.0))
            return DriftPrediction(val, g * w - 2.0 + b, region)
        _require(b > 1.0, "power drift", "no expansion at wall exponent exactly 1")
        _require(0.0 < w < 0.5, "steep-wall power drift", "needs w in (0, 1/2)")
        theta0_exp = ang.theta3 - (1.0 - w) * ang.theta2
        _check_theta0(params, theta0_exp, "steep-wall power drift",
                      "theta3 - (1-w) theta2")
        _require(w * HALF_PI + abs(theta0_exp) < HALF_PI, "steep-wall power drift",
                 "needs sup |w theta - theta0| < pi/2 on [-pi/2, pi/2]")
        val = (g * w * rt ** (w - 1.0) * h ** (g - 1.0)
               * (ang.d * mu / s) * math.cos((1.0 - w) * HALF_PI))
        return DriftPrediction(val, g * w - 1.0, region)

    if kind in (FunctionKind.H_LOG, FunctionKind.ELL):
        eta = params.eta
        if region is Region.INTERIOR:
            if kind is FunctionKind.H_LOG:
                return DriftPrediction(0.0, -2.0, region)
            val = -(1.0 + eta * eta) / (2.0 * rt * rt * math.log(rt) ** 2)
            return DriftPrediction(val, -2.0, region)
        side = _side_of(region)
        a, b = _wall_params(geom, side)
        if b < 1.0:
            _require(abs(eta - ang.eta0) <= _ANGLE_TOL, "log drift, shallow wall",
                     f"requires eta = eta0 = {ang.eta0:.12g}, got {eta:.12g}")
            num = (sig2 ** 2 * a * mu / (s * s * ca)) * (b - bcrit) * p.x1 ** b
            order = b - 2.0
        else:
            _require(b > 1.0, "log drift", "no expansion at wall exponent exactly 1")
            _require(abs(eta - ang.eta1) <= _ANGLE_TOL, "log drift, steep wall",
                     f"requires eta = eta1 = {ang.eta1:.12g}, got {eta:.12g}")
            sa = math.sin(alpha)
            num = (mu / (s * s * ca)) * p.x1 * (
                cov.sigma1_sq * sa * sa + cov.sigma2_sq * ca * ca
                - cov.sigma1_sq / b - cov.rho * math.sin(2.0 * alpha))
            order = 1.0 / b - 2.0
        if kind is FunctionKind.H_LOG:
            return DriftPrediction(num / (rt * rt), order, region)
        return DriftPrediction(num / (rt * rt * math.log(rt)), order, region)

    if kind is FunctionKind.G_GAMMA:
        g = params.gamma
        bp, bm = geom.beta_plus, geom.beta_minus
        _require(0.0 < bp < 1.0 and 0.0 < bm < 1.0, "angle-corrected log drift",
                 "needs both wall exponents in (0, 1)")
        _require(max(bp, bm) <= bcrit + 1e-12, "angle-corrected log drift",
                 "needs wall exponents <= beta_c")
        gmax = min(bp, bm, 1.0 - bp, 1.0 - bm, p_moment - 2.0)
        _require(0.0 < g < gmax, "angle-corrected log drift",
                 f"needs 0 < gamma < {gmax}, got {g}")
        eta = ang.eta0
        if region is Region.INTERIOR:
            val = -(1.0 + eta * eta) / (2.0 * rt * rt * math.log(rt) ** 2)
            return DriftPrediction(val, -2.0, region)
        side = _side_of(region)
        a, b = _wall_params(geom, side)
        val = -2.0 * a * mu * ca * p.r ** (b - 2.0 - g)
        return DriftPrediction(val, b - 2.0 - g, region)

    if kind is FunctionKind.W_GAMMA:
        g = params.gamma
        bp, bm = geom.beta_plus, geom.beta_minus
        _require(bp > 1.0 and bm > 1.0, "horizontal-corrected log drift",
                 "needs both wall exponents above 1")
        gmax = min(1.0 - 1.0 / (2.0 * bp), 1.0 - 1.0 / (2.0 * bm),
                   (p_moment - 1.0) / 2.0)
        _require(0.5 < g < gmax, "horizontal-corrected log drift",
                 f"needs 1/2 < gamma < {gmax}, got {g}")
        eta = ang.eta1
        if region is Region.INTERIOR:
            val = -(1.0 + eta * eta) / (2.0 * rt * rt * math.log(rt) ** 2)
            return DriftPrediction(val, -2.0, region)
        val = -mu * ca * p.r ** (-2.0 * g)
        return DriftPrediction(val, -2.0 * g, region)

    raise ValueError(f"unknown function kind {kind}")


def probe_state(geom: WedgeGeometry, region: Region, norm: float) -> Point:
    """A representative state of the given region with |x| close to norm."""
    if region is Region.INTERIOR:
        p = Point(norm, 0.0)
        if geom.classify(p) is not Region.INTERIOR:
            raise ValueError("axis state at this norm is not interior")
        return p
    side = _side_of(region)
    sgn = 1.0 if side is Side.UPPER else -1.0
    a, b = _wall_params(geom, side)
    offset = 0.5 * geom.band_width

    # solve x1 so that |(x1, wall(x1) - inward offset)| = norm
    lo, hi = 1e-9, norm
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        h = geom.boundary_height(mid, side) - offset
        if math.hypot(mid, h) < norm:
            lo = mid
        else:
            hi = mid
    x1 = 0.5 * (lo + hi)
    p = Point(x1, sgn * (geom.boundary_height(x1, side) - offset))
    got = geom.classify(p)
    if got is not region:
        raise ValueError(f"probe construction landed in {got}, wanted {region}")
    return p


def sign_table(kind: FunctionKind, params: LyapunovParams, cov: CovarianceSpec,
               geom: WedgeGeometry, alpha: float,
               mu_plus: float = 1.0, mu_minus: float = 1.0,
               norm: float = 1e6, p_moment: float = 4.0) -> dict[Region, int]:
    """Sign of the predicted leading drift term in each regime at large |x|."""
    table: dict[Region, int] = {}
    for region, mu in ((Region.INTERIOR, 0.0),
                       (Region.BOUNDARY_UPPER, mu_plus),
                       (Region.BOUNDARY_LOWER, mu_minus)):
        p = probe_state(geom, region, norm)
        pred = predicted_drift(kind, p, region, params, cov, geom, alpha, mu,
                               p_moment=p_moment)
        scale = abs(pred.value)
        if scale < 1e-300:
            table[region] = 0
        else:
            table[region] = 1 if pred.value > 0 else -1
    return table
