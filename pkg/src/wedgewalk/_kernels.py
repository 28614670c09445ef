"""Compiled numerical core: RNG streams, wedge distance, samplers, trajectory driver.

Everything here is numba-compiled and operates on plain scalars/arrays so the
hot simulation loop never touches Python objects.  Public modules wrap these
functions with typed APIs; do not import this module from user code.

Conventions
-----------
geom vector  : [a_plus, a_minus, beta_plus, beta_minus, band_width]
refl vector  : [alpha, mu_plus, mu_minus]
model vector : [kind, jump_scale, max_interior_step, bias1, bias2,
                l11, l12, l21, l22]   (kind: 0 lattice, 1 continuous)
region codes : 0 interior, 1 boundary upper, 2 boundary lower, 3 outside
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

U64 = np.uint64
U32 = np.uint32

_PCG_MUL = U64(6364136223846793005)
_INV32 = 2.3283064365386963e-10  # 2**-32

LATTICE = 0
CONTINUOUS = 1

INTERIOR = 0
BOUNDARY_UPPER = 1
BOUNDARY_LOWER = 2
OUTSIDE = 3


# ---------------------------------------------------------------------------
# PCG32 with one stream per walker: stream selection by the walker counter.
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _pcg_next(state, inc):
    old = state
    new = old * _PCG_MUL + inc
    xorshifted = U32(((old >> U64(18)) ^ old) >> U64(27))
    rot = U32(old >> U64(59))
    out = U32((xorshifted >> rot) | (xorshifted << ((U32(0) - rot) & U32(31))))
    return new, out


@njit(cache=True, inline="always")
def pcg_init(master_seed, walker_id):
    """State/increment pair for the (master_seed, walker_id) stream."""
    inc = (U64(walker_id) << U64(1)) | U64(1)
    state = U64(0) * _PCG_MUL + inc
    state = state + U64(master_seed)
    state = state * _PCG_MUL + inc
    return state, inc


@njit(cache=True, inline="always")
def _u01(state, inc):
    state, out = _pcg_next(state, inc)
    return state, out * _INV32


# ---------------------------------------------------------------------------
# Wedge geometry: containment, exact distance to the complement, region test.
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def wall_height(a, b, z):
    if b == 0.0:
        return a
    return a * z ** b


@njit(cache=True, inline="always")
def contains_xy(geom, x1, x2):
    if x1 < 0.0:
        return False
    if x2 > wall_height(geom[0], geom[2], x1):
        return False
    if x2 < -wall_height(geom[1], geom[3], x1):
        return False
    return True


@njit(cache=True)
def _wall_dist_exact(x1, x2, a, b):
    """Distance from (x1, x2), below the wall, to the region {y >= a z^b, z >= 0}.

    Coarse 65-point seeding over [0, 2 x1 + 10], then golden-section refinement.
    """
    if b == 0.0:
        d = a - x2
        return d if d > 0.0 else 0.0
    z_hi = 2.0 * x1 + 10.0
    n_seed = 65
    best = 0.0
    fbest = 1.0e300
    step = z_hi / (n_seed - 1)
    for i in range(n_seed):
        z = i * step
        dy = wall_height(a, b, z) - x2
        f = (z - x1) * (z - x1) + dy * dy
        if f < fbest:
            fbest = f
            best = z
    lo = best - step
    if lo < 0.0:
        lo = 0.0
    hi = best + step
    if hi > z_hi:
        hi = z_hi
    invphi = 0.6180339887498949
    tol = 1e-10 * (1.0 + x1)
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    dyc = wall_height(a, b, c) - x2
    fc = (c - x1) * (c - x1) + dyc * dyc
    dyd = wall_height(a, b, d) - x2
    fd = (d - x1) * (d - x1) + dyd * dyd
    while hi - lo > tol:
        if fc < fd:
            hi = d
            d = c
            fd = fc
            c = hi - invphi * (hi - lo)
            dyc = wall_height(a, b, c) - x2
            fc = (c - x1) * (c - x1) + dyc * dyc
        else:
            lo = c
            c = d
            fc = fd
            d = lo + invphi * (hi - lo)
            dyd = wall_height(a, b, d) - x2
            fd = (d - x1) * (d - x1) + dyd * dyd
    z = 0.5 * (lo + hi)
    dy = wall_height(a, b, z) - x2
    return np.sqrt((z - x1) * (z - x1) + dy * dy)


@njit(cache=True)
def _wall_dist_bounds(x1, x2, a, b, band):
    """Certified (lo, hi) bounds on the single-wall distance, cheap path.

    Only guaranteed useful for deciding dist <=> band; lo may be the window
    radius when the true minimum could sit outside the inspected window.
    Returns (lo, hi); lo > hi signals "bounds unavailable, use the exact path".
    """
    if b == 0.0:
        d = a - x2
        if d < 0.0:
            d = 0.0
        return d, d
    w = 2.0 * band + 4.0
    if b == 1.0:
        # straight wall y = a z: exact foot-of-perpendicular computation
        t = (x1 + a * x2) / (1.0 + a * a)
        if t >= 0.0:
            d = (a * x1 - x2) / np.sqrt(1.0 + a * a)
            if d < 0.0:
                d = 0.0
        else:
            d = np.sqrt(x1 * x1 + x2 * x2)
        return d, d
    if b < 1.0:
        gap = wall_height(a, b, x1) - x2
        if gap < 0.0:
            gap = 0.0
        g = a * b * x1 ** (b - 1.0)
        # widen the inspection window for far walls so the certified lower
        # bound (and with it the interior re-classification guard) grows
        if 0.5 * gap > w:
            w = 0.5 * gap
        if w > 0.5 * x1:
            w = 0.5 * x1
        # perpendicular foot on the tangent must stay at z >= 0
        if x1 * (1.0 + g * g) <= gap * g or x1 - w <= 0.0 or w <= band:
            return 1.0, 0.0
        hi = gap / np.sqrt(1.0 + g * g)
        gw = a * b * (x1 - w) ** (b - 1.0)
        lo = gap / np.sqrt(1.0 + gw * gw)
        if lo > w:
            lo = w
        return lo, hi
    # b > 1: mirror the same argument across the diagonal
    if x2 <= 0.0:
        lo = -x2
        hi = np.sqrt(x1 * x1 + x2 * x2)
        return lo, hi
    zstar = (x2 / a) ** (1.0 / b)
    hgap = x1 - zstar
    if hgap < 0.0:
        hgap = 0.0
    hi = hgap
    if 0.5 * hgap > w:
        w = 0.5 * hgap
    if w > 0.5 * x2:
        w = 0.5 * x2
    if x2 - w <= 0.0 or w <= band:
        return 1.0, 0.0
    bp = 1.0 / b
    cw = bp * (1.0 / a) ** bp * (x2 - w) ** (bp - 1.0)
    lo = hgap / np.sqrt(1.0 + cw * cw)
    if lo > w:
        lo = w
    return lo, hi


@njit(cache=True)
def dist_to_complement(geom, x1, x2):
    """Exact Euclidean distance from an in-domain point to R^2 \\ D."""
    d = x1
    du = _wall_dist_exact(x1, x2, geom[0], geom[2])
    if du < d:
        d = du
    dl = _wall_dist_exact(x1, -x2, geom[1], geom[3])
    if dl < d:
        d = dl
    return d


@njit(cache=True)
def classify_xy(geom, x1, x2):
    """Region code plus a certified lower bound on dist(x, complement).

    The lower bound is only meaningful for interior points (else 0); it lets
    the trajectory driver skip re-classification while the walker provably
    cannot reach the band.
    """
    if not contains_xy(geom, x1, x2):
        return OUTSIDE, 0.0
    band = geom[4]
    if x1 <= band:
        d = dist_to_complement(geom, x1, x2)
        if d <= band:
            return (BOUNDARY_UPPER, 0.0) if x2 >= 0.0 else (BOUNDARY_LOWER, 0.0)
        return INTERIOR, d
    lo_u, hi_u = _wall_dist_bounds(x1, x2, geom[0], geom[2], band)
    lo_l, hi_l = _wall_dist_bounds(x1, -x2, geom[1], geom[3], band)
    need_exact = (lo_u > hi_u) or (lo_l > hi_l)
    if not need_exact:
        hi = min(x1, hi_u, hi_l)
        lo = min(x1, lo_u, lo_l)
        if hi <= band:
            return (BOUNDARY_UPPER, 0.0) if x2 >= 0.0 else (BOUNDARY_LOWER, 0.0)
        if lo > band:
            return INTERIOR, lo
    d = dist_to_complement(geom, x1, x2)
    if d <= band:
        return (BOUNDARY_UPPER, 0.0) if x2 >= 0.0 else (BOUNDARY_LOWER, 0.0)
    return INTERIOR, d


# ---------------------------------------------------------------------------
# Reflection vectors.
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def oblique_vector(geom, x1, upper, alpha):
    """Unit reflection vector at angle alpha to the inward normal.

    Opposed convention: rotation is anticlockwise by alpha on the upper side,
    clockwise by alpha on the lower side.
    """
    if upper:
        a = geom[0]
        b = geom[2]
    else:
        a = geom[1]
        b = geom[3]
    g = 0.0 if b == 0.0 else a * b * x1 ** (b - 1.0)
    r = np.sqrt(1.0 + g * g)
    sa = np.sin(alpha)
    ca = np.cos(alpha)
    if upper:
        return (sa + g * ca) / r, (-ca + g * sa) / r
    return (-sa + g * ca) / r, (ca + g * sa) / r


# ---------------------------------------------------------------------------
# Lattice boundary distribution: least-norm nonnegative weights on the
# in-domain steps of the 3x3 neighbourhood matching the exact target mean.
# ---------------------------------------------------------------------------

@njit(cache=True)
def lattice_boundary_weights(geom, refl, x1, x2, upper):
    """Weights over the 9 steps {-1,0,1}^2 (row-major dy fast) with exact mean.

    Returns (weights[9], ok).  ok=False means the exact-mean system was
    infeasible (apex corner) and a deterministic inward fallback was used.
    """
    mu = refl[1] if upper else refl[2]
    n1, n2 = oblique_vector(geom, x1, upper, refl[0])
    m1 = mu * n1
    m2 = mu * n2

    steps_dx = np.empty(9, dtype=np.float64)
    steps_dy = np.empty(9, dtype=np.float64)
    feas = np.empty(9, dtype=np.bool_)
    k = 0
    for dx in range(-1, 2):
        up_h = wall_height(geom[0], geom[2], x1 + dx) if x1 + dx >= 0.0 else -1.0
        dn_h = wall_height(geom[1], geom[3], x1 + dx) if x1 + dx >= 0.0 else -1.0
        for dy in range(-1, 2):
            steps_dx[k] = dx
            steps_dy[k] = dy
            y = x2 + dy
            feas[k] = (x1 + dx >= 0.0) and (y <= up_h) and (y >= -dn_h)
            k += 1

    w = np.zeros(9, dtype=np.float64)
    active = feas.copy()

    # active-set least-norm solve of sum w = 1, sum w*dx = m1, sum w*dy = m2
    for _ in range(9):
        nact = 0
        for i in range(9):
            if active[i]:
                nact += 1
        if nact < 3:
            break
        # Gram matrix of constraint rows restricted to the active set
        s00 = 0.0
        s01 = 0.0
        s02 = 0.0
        s11 = 0.0
        s12 = 0.0
        s22 = 0.0
        for i in range(9):
            if active[i]:
                s00 += 1.0
                s01 += steps_dx[i]
                s02 += steps_dy[i]
                s11 += steps_dx[i] * steps_dx[i]
                s12 += steps_dx[i] * steps_dy[i]
                s22 += steps_dy[i] * steps_dy[i]
        det = (s00 * (s11 * s22 - s12 * s12)
               - s01 * (s01 * s22 - s12 * s02)
               + s02 * (s01 * s12 - s11 * s02))
        if np.abs(det) < 1e-12:
            break
        i00 = (s11 * s22 - s12 * s12) / det
        i01 = (s02 * s12 - s01 * s22) / det
        i02 = (s01 * s12 - s02 * s11) / det
        i11 = (s00 * s22 - s02 * s02) / det
        i12 = (s01 * s02 - s00 * s12) / det
        i22 = (s00 * s11 - s01 * s01) / det
        l0 = i00 * 1.0 + i01 * m1 + i02 * m2
        l1 = i01 * 1.0 + i11 * m1 + i12 * m2
        l2 = i02 * 1.0 + i12 * m1 + i22 * m2
        worst = -1
        worst_val = -1e-12
        for i in range(9):
            if active[i]:
                w[i] = l0 + l1 * steps_dx[i] + l2 * steps_dy[i]
                if w[i] < worst_val:
                    worst_val = w[i]
                    worst = i
            else:
                w[i] = 0.0
        if worst < 0:
            for i in range(9):
                if w[i] < 0.0:
                    w[i] = 0.0
            return w, True
        active[worst] = False

    # fallback A: two-step decomposition onto an axis step and a diagonal
    s1 = 1.0 if m1 >= 0.0 else -1.0
    s2 = 1.0 if m2 >= 0.0 else -1.0
    am1 = np.abs(m1)
    am2 = np.abs(m2)
    for i in range(9):
        w[i] = 0.0
    if am1 >= am2:
        i_diag = int(3 * (s1 + 1) + (s2 + 1))
        i_axis = int(3 * (s1 + 1) + 1)
        if feas[i_diag] and feas[i_axis] and am1 <= 1.0:
            w[i_diag] = am2
            w[i_axis] = am1 - am2
            w[4] = 1.0 - am1
            return w, True
    else:
        i_diag = int(3 * (s1 + 1) + (s2 + 1))
        i_axis = int(3 * 1 + (s2 + 1))
        if feas[i_diag] and feas[i_axis] and am2 <= 1.0:
            w[i_diag] = am1
            w[i_axis] = am2 - am1
            w[4] = 1.0 - am2
            return w, True

    # fallback B (apex corner): deterministic most-aligned feasible step
    best = 4
    best_dot = -1e300
    for i in range(9):
        if feas[i] and i != 4:
            nrm = np.sqrt(steps_dx[i] * steps_dx[i] + steps_dy[i] * steps_dy[i])
            dot = (steps_dx[i] * m1 + steps_dy[i] * m2) / nrm
            if dot > best_dot:
                best_dot = dot
                best = i
    for i in range(9):
        w[i] = 0.0
    w[best] = 1.0
    return w, False


# ---------------------------------------------------------------------------
# One-step samplers.
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _interior_step_lattice(int_steps, int_cum, state, inc):
    state, u = _u01(state, inc)
    k = 0
    n = int_cum.shape[0]
    while k < n - 1 and u >= int_cum[k]:
        k += 1
    return state, int_steps[k, 0], int_steps[k, 1]


@njit(cache=True, inline="always")
def _interior_step_continuous(model, state, inc):
    state, out = _pcg_next(state, inc)
    sx = 1.0 if (out & U32(1)) else -1.0
    sy = 1.0 if (out & U32(2)) else -1.0
    dx = model[5] * sx + model[6] * sy + model[3]
    dy = model[7] * sx + model[8] * sy + model[4]
    return state, dx, dy


@njit(cache=True)
def _boundary_step_lattice(geom, refl, x1, x2, upper, state, inc):
    w, _ = lattice_boundary_weights(geom, refl, x1, x2, upper)
    state, u = _u01(state, inc)
    acc = 0.0
    k = 8
    for i in range(9):
        acc += w[i]
        if u < acc:
            k = i
            break
    dx = float(k // 3 - 1)
    dy = float(k % 3 - 1)
    return state, dx, dy


@njit(cache=True)
def _boundary_step_continuous(geom, refl, model, x1, x2, upper, state, inc):
    mu = refl[1] if upper else refl[2]
    js = model[1]
    n1, n2 = oblique_vector(geom, x1, upper, refl[0])
    state, out = _pcg_next(state, inc)
    zeta = 0.5 * js if (out & U32(1)) else -0.5 * js
    # tangent = normal rotated by +pi/2
    dx = mu * js * n1 - zeta * n2
    dy = mu * js * n2 + zeta * n1
    if not contains_xy(geom, x1 + dx, x2 + dy):
        # shorten along the step direction to the in-domain segment
        t_lo = 0.0
        t_hi = 1.0
        for _ in range(40):
            t = 0.5 * (t_lo + t_hi)
            if contains_xy(geom, x1 + t * dx, x2 + t * dy):
                t_lo = t
            else:
                t_hi = t
        dx *= t_lo
        dy *= t_lo
    return state, dx, dy


@njit(cache=True)
def step_state(geom, refl, model, int_steps, int_cum, x1, x2, region, state, inc):
    """One transition from (x1, x2) given its region code."""
    if region == INTERIOR:
        if model[0] == LATTICE:
            state, dx, dy = _interior_step_lattice(int_steps, int_cum, state, inc)
        else:
            state, dx, dy = _interior_step_continuous(model, state, inc)
    else:
        upper = region == BOUNDARY_UPPER
        if model[0] == LATTICE:
            state, dx, dy = _boundary_step_lattice(geom, refl, x1, x2, upper, state, inc)
        else:
            state, dx, dy = _boundary_step_continuous(
                geom, refl, model, x1, x2, upper, state, inc)
    return state, x1 + dx, x2 + dy


# ---------------------------------------------------------------------------
# Trajectory driver.
# ---------------------------------------------------------------------------

@njit(cache=True)
def run_walker(geom, refl, model, int_steps, int_cum,
               x01, x02, horizon, return_radius, master_seed, walker_id):
    """Iterate the chain until |x| <= return_radius or the horizon.

    Returns (tau, max_norm, final_norm, status); tau = -1 when censored.
    status: 0 ok, 1 containment violation (kernel bug guard).
    """
    state, inc = pcg_init(master_seed, walker_id)
    x1 = x01
    x2 = x02
    rr = return_radius * return_radius
    maxn2 = x1 * x1 + x2 * x2
    smax = model[2]
    band = geom[4]
    lattice = model[0] == LATTICE
    guard = 0
    # tiny per-walker memo of recent boundary weight solves
    ck1 = np.full(4, -1.0)
    ck2 = np.zeros(4)
    cku = np.zeros(4, dtype=np.bool_)
    cw = np.zeros((4, 9))
    cptr = 0
    for n in range(1, horizon + 1):
        if guard > 0:
            guard -= 1
            region = INTERIOR
        else:
            region, lb = classify_xy(geom, x1, x2)
            if region == OUTSIDE:
                return -1, np.sqrt(maxn2), np.sqrt(x1 * x1 + x2 * x2), 1
            if region == INTERIOR:
                g = int((lb - band) / smax) - 1
                guard = g if g > 0 else 0
        if region == INTERIOR:
            if lattice:
                state, dx, dy = _interior_step_lattice(int_steps, int_cum, state, inc)
            else:
                state, dx, dy = _interior_step_continuous(model, state, inc)
        else:
            upper = region == BOUNDARY_UPPER
            if lattice:
                hit = -1
                for ci in range(4):
                    if ck1[ci] == x1 and ck2[ci] == x2 and cku[ci] == upper:
                        hit = ci
                        break
                if hit < 0:
                    w, _ = lattice_boundary_weights(geom, refl, x1, x2, upper)
                    for j in range(9):
                        cw[cptr, j] = w[j]
                    ck1[cptr] = x1
                    ck2[cptr] = x2
                    cku[cptr] = upper
                    hit = cptr
                    cptr = (cptr + 1) % 4
                state, u = _u01(state, inc)
                acc = 0.0
                k = 8
                for i in range(9):
                    acc += cw[hit, i]
                    if u < acc:
                        k = i
                        break
                dx = float(k // 3 - 1)
                dy = float(k % 3 - 1)
            else:
                state, dx, dy = _boundary_step_continuous(
                    geom, refl, model, x1, x2, upper, state, inc)
        x1 += dx
        x2 += dy
        n2 = x1 * x1 + x2 * x2
        if n2 > maxn2:
            maxn2 = n2
        if n2 <= rr:
            return n, np.sqrt(maxn2), np.sqrt(n2), 0
    return -1, np.sqrt(maxn2), np.sqrt(x1 * x1 + x2 * x2), 0


@njit(cache=True, parallel=True)
def run_batch(geom, refl, model, int_steps, int_cum,
              x01, x02, horizon, return_radius, master_seed, n_walkers,
              taus, max_norms, final_norms, statuses):
    for w in prange(n_walkers):
        tau, mx, fn, st = run_walker(
            geom, refl, model, int_steps, int_cum,
            x01, x02, horizon, return_radius, master_seed, w)
        taus[w] = tau
        max_norms[w] = mx
        final_norms[w] = fn
        statuses[w] = st


@njit(cache=True)
def sample_transitions(geom, refl, model, int_steps, int_cum,
                       x1, x2, region, n, master_seed, stream_id,
                       out1, out2):
    """n independent one-step successors of the fixed state (x1, x2)."""
    state, inc = pcg_init(master_seed, stream_id)
    if model[0] == LATTICE and region != INTERIOR:
        # the weight solve depends only on the (fixed) state: do it once
        w, _ = lattice_boundary_weights(geom, refl, x1, x2,
                                        region == BOUNDARY_UPPER)
        for i in range(n):
            state, u = _u01(state, inc)
            acc = 0.0
            k = 8
            for j in range(9):
                acc += w[j]
                if u < acc:
                    k = j
                    break
            out1[i] = x1 + float(k // 3 - 1)
            out2[i] = x2 + float(k % 3 - 1)
        return
    for i in range(n):
        state, y1, y2 = step_state(
            geom, refl, model, int_steps, int_cum, x1, x2, region, state, inc)
        out1[i] = y1
        out2[i] = y2
