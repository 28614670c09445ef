"""Concrete Markov transition kernels on the wedge and the moment auditor.

Two families are shipped.  The lattice family lives on Z^2 (intersected with
the domain): interior states draw from a finite symmetric distribution with
exact mean zero and exact covariance Sigma; boundary states mix the in-domain
steps of the 3x3 neighbourhood so the mean equals mu * n(x1, alpha) exactly.
The continuous family scales a whitened four-point noise through a matrix
square root and adds a deterministic reflection step plus symmetric
tangential noise at the boundary, shortening any step that would exit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .geometry import Point, Region, Side, WedgeGeometry, REGION_CODES
from .spectral import CovarianceSpec

_SEED_MIX = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ReflectionSpec:
    """Opposed reflection: angle alpha to the inward normals, drift sizes mu."""

    alpha: float
    mu_plus: float = 1.0
    mu_minus: float = 1.0

    def __post_init__(self):
        if not abs(self.alpha) < math.pi / 2:
            raise ValueError("reflection angle must satisfy |alpha| < pi/2")
        if not (self.mu_plus > 0 and self.mu_minus > 0):
            raise ValueError("boundary drift magnitudes must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.mu_plus, self.mu_minus])


class RandomStream:
    """Deterministic per-walker randomness stream, derived from (seed, id)."""

    def __init__(self, master_seed: int, stream_id: int):
        self.master_seed = int(master_seed)
        self.stream_id = int(stream_id)
        state, inc = _kernels.pcg_init(
            np.uint64(master_seed & _MASK64), np.uint64(stream_id & _MASK64))
        self._state = state
        self._inc = inc


@dataclass(frozen=True, eq=False)
class IncrementModel:
    """A transition kernel honoring the wedge assumptions.

    family: "lattice" or "continuous".  cov_declared is the covariance the
    auditor and the drift predictions consume (for the continuous family the
    configured Sigma scaled by jump_scale**2).  mu_eff_* are the effective
    boundary drift magnitudes entering the reflection assumption.
    """

    family: str
    geom: WedgeGeometry
    refl: ReflectionSpec
    cov_declared: CovarianceSpec
    interior_steps: np.ndarray
    interior_probs: np.ndarray
    jump_scale: float = 0.0
    noise_matrix: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    interior_bias: tuple[float, float] = (0.0, 0.0)
    p_moment: float = 4.0

    # -- packed views for the compiled kernels --------------------------------

    @property
    def mu_eff_plus(self) -> float:
        scale = self.jump_scale if self.family == "continuous" else 1.0
        return self.refl.mu_plus * scale

    @property
    def mu_eff_minus(self) -> float:
        scale = self.jump_scale if self.family == "continuous" else 1.0
        return self.refl.mu_minus * scale

    def mu_eff(self, side: Side) -> float:
        return self.mu_eff_plus if side is Side.UPPER else self.mu_eff_minus

    @property
    def max_interior_step(self) -> float:
        if self.family == "lattice":
            return float(np.max(np.hypot(self.interior_steps[:, 0],
                                         self.interior_steps[:, 1])))
        corners = np.array([[1.0, 1.0], [1.0, -1.0]])
        norms = [np.hypot(*(self.noise_matrix @ c)) for c in corners]
        return float(max(norms) + math.hypot(*self.interior_bias))

    def packed(self):
        l = self.noise_matrix
        model = np.array([
            float(_kernels.LATTICE if self.family == "lattice" else _kernels.CONTINUOUS),
            self.jump_scale, self.max_interior_step,
            self.interior_bias[0], self.interior_bias[1],
            l[0, 0], l[0, 1], l[1, 0], l[1, 1]])
        if self.family == "lattice":
            cum = np.cumsum(self.interior_probs)
            cum[-1] = 1.0
            steps = np.asarray(self.interior_steps, dtype=float)
        else:
            steps = np.zeros((1, 2))
            cum = np.ones(1)
        return (self.geom.as_array(), self.refl.as_array(), model, steps, cum)

    # -- sampling API ----------------------------------------------------------

    def classify(self, p: Point) -> Region:
        return self.geom.classify(p)

    def sample(self, p: Point, region: Region, stream: RandomStream) -> Point:
        """One transition from p given its region, advancing the stream."""
        geom, refl, model, steps, cum = self.packed()
        state, x1, x2 = _kernels.step_state(
            geom, refl, model, steps, cum, p.x1, p.x2,
            REGION_CODES[region], stream._state, stream._inc)
        stream._state = state
        return Point(float(x1), float(x2))

    def transitions(self, p: Point, n: int, master_seed: int,
                    stream_id: int = 0) -> np.ndarray:
        """n independent one-step successors of p, shape (n, 2)."""
        region = self.classify(p)
        if region is Region.OUTSIDE:
            raise ValueError(f"state {p} lies outside the domain")
        geom, refl, model, steps, cum = self.packed()
        out1 = np.empty(n)
        out2 = np.empty(n)
        _kernels.sample_transitions(
            geom, refl, model, steps, cum, p.x1, p.x2, REGION_CODES[region],
            n, np.uint64(master_seed & _MASK64), np.uint64(stream_id & _MASK64),
            out1, out2)
        return np.column_stack([out1, out2])

    def interior_support(self) -> tuple[np.ndarray, np.ndarray]:
        """Finite support and probabilities of the interior increment law."""
        if self.family == "lattice":
            return self.interior_steps.copy(), self.interior_probs.copy()
        corners = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
        steps = corners @ self.noise_matrix.T + np.asarray(self.interior_bias)
        return steps, np.full(4, 0.25)

    def boundary_support(self, p: Point) -> tuple[np.ndarray, np.ndarray]:
        """Steps and probabilities of the boundary law at a lattice state."""
        if self.family != "lattice":
            raise ValueError("enumerable boundary support is lattice-only")
        region = self.classify(p)
        if region not in (Region.BOUNDARY_UPPER, Region.BOUNDARY_LOWER):
            raise ValueError(f"state {p} is not in the boundary band ({region})")
        w, ok = _kernels.lattice_boundary_weights(
            self.geom.as_array(), self.refl.as_array(),
            p.x1, p.x2, region is Region.BOUNDARY_UPPER)
        steps = np.array([[dx, dy] for dx in (-1, 0, 1) for dy in (-1, 0, 1)],
                         dtype=float)
        return steps, np.asarray(w)


def _interior_lattice_support(cov: CovarianceSpec):
    """Exact mean-zero, covariance-Sigma distribution on small lattice steps."""
    s1, s2, rho = cov.sigma1_sq, cov.sigma2_sq, cov.rho
    if s1 == 1.0 and s2 == 1.0:
        q = (1.0 + rho) / 4.0
        p = (1.0 - rho) / 4.0
        steps = np.array([[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])
        return steps, np.array([q, q, p, p])
    ar = abs(rho)
    if s1 < ar or s2 < ar:
        raise ValueError(
            "covariance not realizable on the configured support: "
            f"needs min(sigma1_sq, sigma2_sq) >= |rho|, got {min(s1, s2)} < {ar}")
    best = None
    for k1 in (1, 2, 3):
        for k2 in (1, 2, 3):
            for k3 in (1, 2, 3):
                m1 = (s1 - ar) / k1 ** 2
                m2 = (s2 - ar) / k2 ** 2
                md = ar / k3 ** 2
                tot = m1 + m2 + md
                if tot <= 0.9:
                    key = (max(k1, k2, k3), k1 + k2 + k3, tot)
                    if best is None or key < best[0]:
                        best = (key, k1, k2, k3, m1, m2, md)
    if best is None:
        raise ValueError(
            "covariance not realizable on the configured support "
            "(steps up to range 3): total required mass exceeds 0.9")
    _, k1, k2, k3, m1, m2, md = best
    steps = [[k1, 0.0], [-k1, 0.0], [0.0, k2], [0.0, -k2]]
    probs = [m1 / 2, m1 / 2, m2 / 2, m2 / 2]
    if rho > 0:
        steps += [[k3, k3], [-k3, -k3]]
        probs += [md / 2, md / 2]
    elif rho < 0:
        steps += [[k3, -k3], [-k3, k3]]
        probs += [md / 2, md / 2]
    steps.append([0.0, 0.0])
    probs.append(1.0 - sum(probs))
    return np.array(steps, dtype=float), np.array(probs)


def lattice_model(geom: WedgeGeometry, refl: ReflectionSpec,
                  cov: CovarianceSpec, p_moment: float = 4.0) -> IncrementModel:
    """Kernel on Z^2 within the wedge with exact interior/boundary moments.

    Jumps are bounded, so any declared p_moment > 2 holds; it only scales
    the auditor's tail check.
    """
    if p_moment <= 2.0:
        raise ValueError("declared moment order p must exceed 2")
    steps, probs = _interior_lattice_support(cov)
    max_step = float(np.max(np.hypot(steps[:, 0], steps[:, 1])))
    if geom.band_width < max_step:
        raise ValueError(
            f"band_width {geom.band_width} below the largest interior step "
            f"{max_step:.6g}: interior containment would fail")
    if refl.mu_plus > 1.0 or refl.mu_minus > 1.0:
        raise ValueError(
            "boundary drift magnitude above 1 is not realizable with "
            "single-lattice-unit boundary steps")
    return IncrementModel(
        family="lattice", geom=geom, refl=refl, cov_declared=cov,
        interior_steps=steps, interior_probs=probs, p_moment=p_moment)


def _sqrtm_2x2(m: np.ndarray) -> np.ndarray:
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    sdet = math.sqrt(det)
    tr = m[0, 0] + m[1, 1]
    return (m + sdet * np.eye(2)) / math.sqrt(tr + 2.0 * sdet)


def continuous_model(geom: WedgeGeometry, refl: ReflectionSpec,
                     cov: CovarianceSpec, jump_scale: float,
                     interior_bias: tuple[float, float] = (0.0, 0.0),
                     p_moment: float = 4.0) -> IncrementModel:
    """Off-lattice kernel: whitened four-point interior noise, scaled by
    jump_scale; boundary drift mu * jump_scale along the reflection vector
    plus symmetric tangential noise, shortened to stay inside the domain.

    The declared covariance is jump_scale**2 * Sigma.
    """
    if p_moment <= 2.0:
        raise ValueError("declared moment order p must exceed 2")
    if not 0 < jump_scale <= geom.band_width / 4.0:
        raise ValueError(
            f"jump_scale must lie in (0, band_width/4 = {geom.band_width / 4.0}]")
    noise = jump_scale * _sqrtm_2x2(cov.matrix)
    model = IncrementModel(
        family="continuous", geom=geom, refl=refl,
        cov_declared=cov.scaled(jump_scale ** 2),
        interior_steps=np.zeros((1, 2)), interior_probs=np.ones(1),
        jump_scale=jump_scale, noise_matrix=noise,
        interior_bias=(float(interior_bias[0]), float(interior_bias[1])),
        p_moment=p_moment)
    if model.max_interior_step > geom.band_width:
        raise ValueError("interior step reach exceeds the band width")
    return model


# ---------------------------------------------------------------------------
# Moment auditor.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StateAudit:
    state: Point
    region: Region
    n: int
    mean: np.ndarray
    cov: np.ndarray
    pth_moment: float
    mean_radius: np.ndarray      # 99% normal-approximation radii per component
    target_mean: np.ndarray
    deviation: float             # |mean - target|
    scaled_deviation: float      # |mean - target| * |x|
    cov_deviation: float | None  # operator-norm gap to declared Sigma (interior)
    ok: bool


@dataclass(frozen=True)
class MomentAudit:
    entries: list[StateAudit]
    p_moment: float
    passed: bool


_Z99 = 2.5758293035489004


def moment_audit(model: IncrementModel, states: list[Point], n_samples: int,
                 master_seed: int = 20240901,
                 boundary_band_const: float = 8.0) -> MomentAudit:
    """Empirical check of the zero-drift / reflection / covariance assumptions.

    Interior states must show mean 0 (within 99% CLT radii) and covariance
    near the declared Sigma; boundary states must match mu * n(x1, alpha)
    within radii plus a boundary_band_const / |x| allowance.
    """
    if n_samples < 10_000:
        raise ValueError("audit needs at least 10^4 samples per state")
    if not states:
        raise ValueError("audit needs a nonempty state list")
    entries = []
    for i, p in enumerate(states):
        region = model.classify(p)
        if region is Region.OUTSIDE:
            raise ValueError(f"audit state {p} lies outside the domain")
        succ = model.transitions(p, n_samples, master_seed, stream_id=i)
        inc = succ - p.as_array()
        mean = inc.mean(axis=0)
        cov_hat = (inc.T @ inc) / n_samples
        pth = float(np.mean(np.hypot(inc[:, 0], inc[:, 1]) ** model.p_moment))
        radius = _Z99 * inc.std(axis=0, ddof=1) / math.sqrt(n_samples)
        # floor against unseen rare outcomes of a bounded step law
        step_bound = np.abs(inc).max(axis=0) + 1.0
        radius = np.maximum(radius, 5.0 * step_bound / n_samples)
        if region is Region.INTERIOR:
            target = np.zeros(2)
            slack = 0.0
            cov_dev = float(np.linalg.norm(
                cov_hat - model.cov_declared.matrix, ord=2))
        else:
            side = Side.UPPER if region is Region.BOUNDARY_UPPER else Side.LOWER
            target = model.mu_eff(side) * model.geom.reflection_vector(
                p.x1, side, model.refl.alpha)
            slack = boundary_band_const / max(p.r, 1.0)
            cov_dev = None
        dev_vec = mean - target
        dev = float(np.hypot(*dev_vec))
        ok = bool(np.all(np.abs(dev_vec) <= radius + slack))
        entries.append(StateAudit(
            state=p, region=region, n=n_samples, mean=mean, cov=cov_hat,
            pth_moment=pth, mean_radius=radius, target_mean=target,
            deviation=dev, scaled_deviation=dev * p.r, cov_deviation=cov_dev,
            ok=ok))
    return MomentAudit(entries=entries, p_moment=model.p_moment,
                       passed=all(e.ok for e in entries))
