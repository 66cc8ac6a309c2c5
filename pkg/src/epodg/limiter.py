"""Cell-average-anchored scaling limiter: admissibility radii and their minimum.

Every correction acts along the ray avg + theta*(U - avg), theta in [0, 1],
which preserves the cell average. Three families of radii are computed:

* geometric radius theta_p: largest scaling keeping all nodes admissible;
* positivity-first entropy radius theta_pe (one per entropy pair): largest
  scaling along the already-positivity-truncated ray whose quadrature
  entropy stays below the weak budget;
* oscillation radius theta_o: from the canonical convex-scaling coefficient
  or a convex gauge set.

The applied radius is the minimum of the active components. All searches
return certified (feasible) bracket endpoints so the enforced inequalities
hold exactly as computed.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .budgets import budget_slack
from .discretization import lagrange_basis
from .errors import BudgetBelowAverageEntropy, WeakPositivityViolated
from .quadrature import gauss_rule

BISECT_TOL = 1e-12
BISECT_MAX_ITER = 60


@dataclass(frozen=True)
class RadiusBreakdown:
    theta_p: float
    theta_pe: tuple       # one entry per entropy pair
    theta_o: float
    theta_epo: float


@dataclass(frozen=True)
class LimiterToggles:
    p: bool = True
    e: bool = True
    o: bool = True


@dataclass(frozen=True)
class CosConfig:
    """Parameters of the convex oscillation-suppression coefficient."""
    c_k: object = 1.0            # float, or dict keyed by polynomial degree
    eps_floor: float = 1e-12     # coefficient of the roundoff floor
    delta: float = 0.1           # local interface-marker tolerance
    mode: str = "local"          # global | local | off
    distance: str = "frozen-hessian"   # jensen | frozen-hessian

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0,1)")
        if not self.eps_floor > 0.0:
            raise ValueError("eps_floor must be positive")
        if self.mode not in ("global", "local", "off"):
            raise ValueError(f"unknown COS mode {self.mode!r}")
        if self.distance not in ("jensen", "frozen-hessian"):
            raise ValueError(f"unknown COS distance {self.distance!r}")

    def c_for(self, k):
        if isinstance(self.c_k, dict):
            return float(self.c_k.get(k, 1.0))
        return float(self.c_k)


# ---------------------------------------------------------------------------
# Scaling ray
# ---------------------------------------------------------------------------

def apply_scaling(avg, nodal, theta):
    """Scale nodal deviations from the average: U <- avg + theta*(U - avg)."""
    avg = np.asarray(avg, dtype=float)
    nodal = np.asarray(nodal, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if theta.ndim:
        theta = theta[..., None, None]
    return avg[..., None, :] + theta * (nodal - avg[..., None, :])


def _bisect_lower(feasible, lo, hi, tol=BISECT_TOL, max_iter=BISECT_MAX_ITER):
    """Vectorized bisection returning the feasible lower bracket endpoint.

    `feasible(theta)` must carve an interval [0, theta_max] of True values;
    the invariant feasible(lo) is the caller's responsibility.
    """
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    for _ in range(max_iter):
        gap = hi - lo
        if np.all(gap <= tol):
            break
        mid = 0.5 * (lo + hi)
        ok = feasible(mid)
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return lo


def _illinois_lower(residual, lo, hi, tol=BISECT_TOL, max_iter=BISECT_MAX_ITER,
                    flo=None, fhi=None):
    """Bracketed false position (Illinois) on a feasibility residual.

    residual(theta) <= 0 means feasible; the bracket [lo feasible, hi
    infeasible] shrinks until below `tol` and the certified feasible lower
    endpoint is returned. Interleaved bisection and probe steps bound the
    iteration count while converging much faster on smooth residuals.
    """
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    flo = np.asarray(residual(lo) if flo is None else flo, dtype=float)
    fhi = np.asarray(residual(hi) if fhi is None else fhi, dtype=float)
    side = np.zeros(lo.shape)
    for it in range(max_iter):
        gap = hi - lo
        if (gap <= tol).all():
            break
        if it % 4 == 3:
            # probe just above the feasible endpoint: closes the bracket as
            # soon as false position has pinned the root from below
            x = np.minimum(lo + tol, 0.5 * (lo + hi))
        elif it % 4 == 1:
            x = 0.5 * (lo + hi)
        else:
            denom = fhi - flo
            with np.errstate(invalid="ignore", divide="ignore"):
                x = hi - fhi * gap / denom
            bad = ~np.isfinite(x) | (x <= lo) | (x >= hi)
            x = np.where(bad, 0.5 * (lo + hi), x)
        fx = np.asarray(residual(x), dtype=float)
        feas = fx <= 0.0
        fx = np.where(np.isfinite(fx), fx, np.inf)
        new_lo = np.where(feas, x, lo)
        new_flo = np.where(feas, fx, flo)
        new_hi = np.where(feas, hi, x)
        new_fhi = np.where(feas, fhi, fx)
        stall_hi = feas & (side == 1.0)
        stall_lo = ~feas & (side == -1.0)
        new_fhi = np.where(stall_hi, 0.5 * new_fhi, new_fhi)
        new_flo = np.where(stall_lo, 0.5 * new_flo, new_flo)
        lo, hi, flo, fhi = new_lo, new_hi, new_flo, new_fhi
        side = np.where(feas, 1.0, -1.0)
    return lo


# ---------------------------------------------------------------------------
# Geometric radius
# ---------------------------------------------------------------------------

def affine_geometric_radius(avg, nodal, aset):
    """Exact radius for affine constraints via the per-node ratio formula.

    For concave constraints the same ratio is a valid lower bound (the
    constraint along the ray lies above its linear interpolant), so this
    value always yields admissible scaled nodes.
    """
    avg = np.asarray(avg, dtype=float)
    nodal = np.asarray(nodal, dtype=float)
    la = aset.values(avg)                      # (..., R)
    ln = aset.values(nodal)                    # (..., L, R)
    with np.errstate(invalid="ignore", divide="ignore"):
        denom = la[..., None, :] - ln
        ratio = np.where(ln < 0.0, la[..., None, :] / denom, 1.0)
    ratio = np.where(np.isnan(ratio), 0.0, ratio)
    theta = np.clip(np.min(ratio, axis=(-2, -1)), 0.0, 1.0)
    return theta if theta.ndim else float(theta)


def _nodes_admissible(avg, nodal, aset, theta):
    scaled = apply_scaling(avg, nodal, theta)
    return np.all(aset.contains(scaled), axis=-1)


def geometric_radius(avg, nodal, aset):
    """Largest theta in [0,1] with every scaled node in the admissible set.

    Affine-only sets use the exact ratio formula; sets with concave
    constraints refine the ratio seed by bisection on direct membership.
    The result is verified by membership and lowered if verification fails.
    """
    avg = np.asarray(avg, dtype=float)
    nodal = np.asarray(nodal, dtype=float)
    if not bool(aset.contains(avg)):
        raise WeakPositivityViolated("candidate cell average is not admissible")
    if bool(np.all(aset.contains(nodal))):
        return 1.0
    seed = affine_geometric_radius(avg, nodal, aset)
    if not _nodes_admissible(avg, nodal, aset, seed):
        seed = 0.0
    if aset.all_affine:
        theta = seed
    else:
        theta = float(_bisect_lower(
            lambda t: _nodes_admissible(avg, nodal, aset, t),
            np.asarray(seed), np.asarray(1.0)))
    while theta > 0.0 and not _nodes_admissible(avg, nodal, aset, theta):
        theta *= 0.5   # roundoff guard; at most a few trips
        if theta < 1e-300:
            theta = 0.0
    return float(theta)


def _geometric_refine(a, u, aset):
    """Radii for a batch of cells known to contain inadmissible nodes."""
    if _kernels.HAVE_NUMBA and aset.kernel and aset.kernel[0] == "euler-geps":
        _, gamma, eps = aset.kernel
        dev = np.ascontiguousarray(u - a[:, None, :])
        return _kernels.euler_geometric_refine(
            np.ascontiguousarray(a), dev, eps, gamma)
    seed = np.atleast_1d(affine_geometric_radius(a, u, aset))
    feas = _nodes_admissible(a, u, aset, seed)
    seed = np.where(feas, seed, 0.0)
    if aset.all_affine:
        th = seed
    else:
        def residual(t):
            vals = aset.values(apply_scaling(a, u, t))
            worst = np.min(np.nan_to_num(vals, nan=-np.inf),
                           axis=(-2, -1))
            return -worst

        th = _illinois_lower(residual, seed, np.ones_like(seed))
    bad = ~_nodes_admissible(a, u, aset, th)
    for _ in range(80):
        if not bad.any():
            break
        th = np.where(bad, 0.5 * th, th)
        th = np.where(th < 1e-300, 0.0, th)
        bad = ~_nodes_admissible(a, u, aset, th)
    return th


def geometric_radius_field(avgs, nodal, aset):
    """Vectorized geometric radii for a whole field, shape (n,).

    Raises WeakPositivityViolated (with the first offending cell) when any
    candidate average leaves the admissible set.
    """
    avgs = np.asarray(avgs, dtype=float)
    nodal = np.asarray(nodal, dtype=float)
    avg_ok = aset.contains(avgs)
    if not avg_ok.all():
        cell = int(np.argmin(avg_ok))
        raise WeakPositivityViolated(
            "candidate cell average is not admissible", cell=cell)
    ok = np.all(aset.contains(nodal), axis=-1)
    theta = np.ones(len(nodal))
    if ok.all():
        return theta
    idx = np.nonzero(~ok)[0]
    theta[idx] = _geometric_refine(avgs[idx], nodal[idx], aset)
    return theta


# ---------------------------------------------------------------------------
# Entropy radii
# ---------------------------------------------------------------------------

def entropy_profile(avg, nodal, theta, pair, weights):
    """Quadrature entropy of the scaled state: sum_nu w_nu eta(avg + theta*d_nu)."""
    scaled = apply_scaling(avg, nodal, theta)
    return pair.eta(scaled) @ np.asarray(weights, dtype=float)


def quadratic_entropy_radius(avg, nodal, weights, B):
    """Closed-form full-ray radius for eta = |U|^2/2.

    The profile is |avg|^2/2 + (theta^2/2)*sum w|U-avg|^2, so the radius is
    an explicit square root when the budget is active.
    """
    avg = np.asarray(avg, dtype=float)
    nodal = np.asarray(nodal, dtype=float)
    w = np.asarray(weights, dtype=float)
    dev = nodal - avg[..., None, :]
    var = np.einsum("...lm,...lm,l->...", dev, dev, w)
    base = 0.5 * np.sum(avg * avg, axis=-1)
    B = np.asarray(B, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        theta = np.sqrt(np.maximum(2.0 * (B - base), 0.0) / var)
    theta = np.where(var <= 0.0, 1.0, theta)
    full = base + 0.5 * var <= B
    out = np.where(full, 1.0, np.minimum(theta, 1.0))
    return out if out.ndim else float(out)


def positivity_first_entropy_radius(avg, nodal, B, pair, weights, theta_p):
    """Entropy radius computed along the positivity-truncated ray.

    Returns theta_p * vartheta where vartheta is the largest secondary
    parameter keeping the quadrature entropy of the truncated candidate at
    or below the budget (consumed with roundoff slack). Quadratic pairs use
    the closed form; others bisect, returning the feasible endpoint.
    """
    avg = np.asarray(avg, dtype=float)
    nodal = np.asarray(nodal, dtype=float)
    B_eff = B + budget_slack(np.asarray(B, dtype=float))
    eta_avg = pair.eta(avg)
    if eta_avg > B_eff:
        raise BudgetBelowAverageEntropy(
            f"eta(avg)={eta_avg!r} exceeds budget {B!r} plus slack")
    if pair.quadratic:
        theta_e = quadratic_entropy_radius(avg, nodal, weights, B_eff)
        return float(min(theta_p, theta_e))
    truncated = apply_scaling(avg, nodal, theta_p)
    if entropy_profile(avg, truncated, 1.0, pair, weights) <= B_eff:
        return float(theta_p)
    feasible = lambda t: entropy_profile(avg, truncated, t, pair, weights) <= B_eff
    vartheta = float(_bisect_lower(lambda t: np.asarray(feasible(float(t))),
                                   np.asarray(0.0), np.asarray(1.0)))
    return float(theta_p * vartheta)


def entropy_radius_field(avgs, nodal, B, pair, weights, theta_p):
    """Vectorized positivity-first entropy radii, shape (n,)."""
    avgs = np.asarray(avgs, dtype=float)
    nodal = np.asarray(nodal, dtype=float)
    B = np.asarray(B, dtype=float)
    w = np.asarray(weights, dtype=float)
    B_eff = B + budget_slack(B)
    eta_avg = pair.eta(avgs)
    ok_avg = eta_avg <= B_eff
    if not np.all(ok_avg):
        cell = int(np.argmin(ok_avg))
        raise BudgetBelowAverageEntropy(
            f"eta(avg)={eta_avg[cell]!r} exceeds budget {B[cell]!r} plus slack",
            cell=cell)
    if pair.quadratic:
        theta_e = quadratic_entropy_radius(avgs, nodal, w, B_eff)
        return np.minimum(theta_p, theta_e)
    truncated = apply_scaling(avgs, nodal, theta_p)
    ent_full = pair.eta(truncated) @ w
    theta = np.asarray(theta_p, dtype=float).copy()
    need = ent_full > B_eff
    if np.any(need):
        idx = np.nonzero(need)[0]
        vt = _entropy_refine(avgs[idx], truncated[idx], B_eff[idx], pair, w,
                             ent_lo=eta_avg[idx], ent_hi=ent_full[idx])
        theta[idx] = theta[idx] * vt
    return theta


def _entropy_refine(a, u, b_eff, pair, w, ent_lo=None, ent_hi=None):
    """Secondary parameters for cells whose truncated entropy exceeds budget.

    Uses the unchecked entropy evaluation: the truncated ray is certified
    admissible, and any roundoff NaN is treated as infeasible by the solver.
    When the endpoint entropies are supplied, the bracket is pre-tightened
    around the quadratic-profile estimate of the crossing.
    """
    anchor = a[:, None, :]
    dev = u - anchor
    if _kernels.HAVE_NUMBA and pair.kernel and pair.kernel[0] == "euler-entropy":
        _, gamma, scale = pair.kernel
        return _kernels.euler_entropy_refine(
            np.ascontiguousarray(a), np.ascontiguousarray(dev),
            np.ascontiguousarray(np.atleast_1d(b_eff).astype(float)),
            np.ascontiguousarray(w), gamma, scale)

    def residual(t):
        return pair.eta_nan(anchor + t[:, None, None] * dev) @ w - b_eff

    lo = np.zeros(len(a))
    hi = np.ones(len(a))
    flo = fhi = None
    if ent_lo is not None and ent_hi is not None:
        flo = ent_lo - b_eff
        fhi = ent_hi - b_eff
        with np.errstate(invalid="ignore", divide="ignore"):
            seed = np.sqrt(np.clip(-flo / (fhi - flo), 0.0, 1.0))
        seed = np.where(np.isfinite(seed), seed, 0.5)
        for factor in (0.999, 1.002):
            x = np.clip(seed * factor, lo + 1e-15, hi - 1e-15)
            fx = np.asarray(residual(x), dtype=float)
            feas = fx <= 0.0
            fx = np.where(np.isfinite(fx), fx, np.inf)
            lo = np.where(feas, x, lo)
            flo = np.where(feas, fx, flo)
            hi = np.where(feas, hi, x)
            fhi = np.where(feas, fhi, fx)
    return _illinois_lower(residual, lo, hi, flo=flo, fhi=fhi)


# ---------------------------------------------------------------------------
# Oscillation module
# ---------------------------------------------------------------------------

def cos_distance(vals1, vals2, weights, h, sensor, mode="jensen", anchor=None):
    """Squared entropy-induced distance between two cellwise functions.

    `vals1`/`vals2` are evaluations at the integration rule's nodes
    (shape (..., Q, m)), `weights` the normalized rule weights, and `h` the
    physical cell size. Mode "jensen" integrates the exact Jensen gap of the
    sensor entropy; "frozen-hessian" uses the quadratic form of the sensor
    Hessian at `anchor` and never needs sensor evaluations off-domain.
    """
    W1 = np.asarray(vals1, dtype=float)
    W2 = np.asarray(vals2, dtype=float)
    w = np.asarray(weights, dtype=float)
    if mode == "jensen":
        gap = 4.0 * (sensor.eta(W1) + sensor.eta(W2)
                     - 2.0 * sensor.eta(0.5 * (W1 + W2)))
        return h * (gap @ w)
    if mode == "frozen-hessian":
        if anchor is None:
            raise ValueError("frozen-hessian distance needs an anchor state")
        H = sensor.hess(np.asarray(anchor, dtype=float))
        D = W1 - W2
        quad = np.einsum("...qm,...mk,...qk->...q", D, H, D)
        return h * (quad @ w)
    raise ValueError(f"unknown distance mode {mode!r}")


def local_cos_marker(avg_left, avg_right, model, delta):
    """1 when an extremal-eigenvalue drop across the interface flags a shock."""
    lmin_l, lmax_l = model.eigen_range(np.asarray(avg_left, dtype=float))
    lmin_r, lmax_r = model.eigen_range(np.asarray(avg_right, dtype=float))
    hit_max = (lmax_l - lmax_r) > delta * (np.abs(lmax_l) + np.abs(lmax_r))
    hit_min = (lmin_l - lmin_r) > delta * (np.abs(lmin_l) + np.abs(lmin_r))
    out = (hit_max | hit_min).astype(float)
    return out if out.ndim else float(out)


def _cos_floor(config, *avgs):
    scale = max(float(np.max(np.sqrt(np.sum(a * a, axis=-1)))) for a in avgs)
    return config.eps_floor * max(1.0, scale * scale)


def cos_coefficient(nodal_j, nodal_left, nodal_right, avgs, model, dt, h,
                    rule, config, sensor, k=None):
    """Canonical 1D oscillation coefficient lambda = exp(-alpha*dt*sigma/h).

    `avgs` holds the three candidate averages (left, self, right). Distance
    integrals run over the neighbor cells, evaluating both candidates there
    (this cell's polynomial is extrapolated).
    """
    if config.mode == "off" or dt == 0.0:
        return 1.0
    nodal_j = np.asarray(nodal_j, dtype=float)
    avg_l, avg_j, avg_r = (np.asarray(a, dtype=float) for a in avgs)
    if k is None:
        k = len(rule) - 1
    vol = gauss_rule(min(k + 2, 8))
    Ev = lagrange_basis(rule.nodes, vol.nodes)
    Eright = lagrange_basis(rule.nodes, vol.nodes + 2.0)
    Eleft = lagrange_basis(rule.nodes, vol.nodes - 2.0)

    def dist2(A, B):
        return cos_distance(A, B, vol.weights, h, sensor,
                            mode=config.distance, anchor=avg_j)

    sigma = 0.0
    floor = _cos_floor(config, avg_l, avg_j, avg_r)
    for nbr, Eself, a_other, orient in (
            (nodal_left, Eleft, avg_l, "left"),
            (nodal_right, Eright, avg_r, "right")):
        nbr_vals = Ev @ np.asarray(nbr, dtype=float)
        theta_den = dist2(nbr_vals, np.broadcast_to(avg_j, nbr_vals.shape))
        if theta_den < floor:
            continue
        if config.mode == "local":
            if orient == "left":
                chi = local_cos_marker(a_other, avg_j, model, config.delta)
            else:
                chi = local_cos_marker(avg_j, a_other, model, config.delta)
            if chi == 0.0:
                continue
        ours = Eself @ nodal_j
        sigma += config.c_for(k) * dist2(nbr_vals, ours) / theta_den
    alpha_cos = float(np.max(model.max_wave_speed(np.stack([avg_l, avg_j, avg_r]))))
    return float(np.exp(-alpha_cos * dt * sigma / h))


def _marker_from_ranges(lmin_l, lmax_l, lmin_r, lmax_r, delta):
    hit = (lmax_l - lmax_r) > delta * (np.abs(lmax_l) + np.abs(lmax_r))
    hit |= (lmin_l - lmin_r) > delta * (np.abs(lmin_l) + np.abs(lmin_r))
    return hit


def cos_lambda_field(op, nodal, avgs, dt, config, sensor):
    """Vectorized canonical oscillation coefficients for every cell, (n,).

    In local mode the interface markers are evaluated first; the distance
    integrals are skipped entirely when no interface is flagged.
    """
    n = len(nodal)
    if config.mode == "off" or dt == 0.0:
        return np.ones(n)
    nodal = np.asarray(nodal, dtype=float)
    avgs = np.asarray(avgs, dtype=float)
    gl, gr = op.ghosts(nodal)
    avg_gl = op.rule.weights @ gl
    avg_gr = op.rule.weights @ gr

    # eigen ranges once, then shifted views for the neighbor values
    lmin, lmax = op.model.eigen_range(avgs)
    gmin, gmax = op.model.eigen_range(np.stack([avg_gl, avg_gr]))
    lmin_L = np.concatenate([gmin[:1], lmin[:-1]])
    lmax_L = np.concatenate([gmax[:1], lmax[:-1]])
    lmin_R = np.concatenate([lmin[1:], gmin[1:]])
    lmax_R = np.concatenate([lmax[1:], gmax[1:]])

    if config.mode == "local":
        chi_left = _marker_from_ranges(lmin_L, lmax_L, lmin, lmax, config.delta)
        chi_right = _marker_from_ranges(lmin, lmax, lmin_R, lmax_R, config.delta)
        if not (chi_left.any() or chi_right.any()):
            return np.ones(n)
    else:
        chi_left = chi_right = np.ones(n, dtype=bool)

    left = np.concatenate([gl[None], nodal[:-1]], axis=0)
    right = np.concatenate([nodal[1:], gr[None]], axis=0)
    avg_l = np.concatenate([avg_gl[None], avgs[:-1]], axis=0)
    avg_r = np.concatenate([avgs[1:], avg_gr[None]], axis=0)
    wv = op.volume_rule.weights
    h = op.mesh.dx

    if config.distance == "frozen-hessian":
        H = sensor.hess(avgs)

        def dist2(A, B):
            D = A - B
            quad = np.matmul(D, H)
            quad *= D
            return h * (quad.sum(axis=-1) @ wv)
    else:
        def dist2(A, B):
            gap = 4.0 * (sensor.eta(A) + sensor.eta(B)
                         - 2.0 * sensor.eta(0.5 * (A + B)))
            return h * (gap @ wv)

    scale2 = np.sum(avgs * avgs, axis=-1)
    scale2 = np.maximum(np.maximum(scale2, np.concatenate([scale2[:1], scale2[:-1]])),
                        np.concatenate([scale2[1:], scale2[-1:]]))
    floor = config.eps_floor * np.maximum(1.0, scale2)

    sigma = np.zeros(n)
    ck = config.c_for(op.k)
    avg_bc = np.broadcast_to(avgs[:, None, :], (n, len(wv), avgs.shape[-1]))
    for nbr, Eself, chi in ((left, op.eval_on_left_nbr, chi_left),
                            (right, op.eval_on_right_nbr, chi_right)):
        if not chi.any():
            continue
        nbr_vals = np.matmul(op.eval_volume, nbr)
        den = dist2(nbr_vals, avg_bc)
        active = (den >= floor) & chi
        if not active.any():
            continue
        ours = np.matmul(Eself, nodal)
        num = dist2(nbr_vals, ours)
        with np.errstate(invalid="ignore", divide="ignore"):
            contrib = np.where(active, ck * num / np.where(den > 0, den, 1.0), 0.0)
        sigma += contrib
    if not sigma.any():
        return np.ones(n)
    # spectral radius over the three-cell neighborhood
    spr = np.maximum(np.abs(lmin), np.abs(lmax))
    spr_l = np.maximum(np.abs(lmin_L), np.abs(lmax_L))
    spr_r = np.maximum(np.abs(lmin_R), np.abs(lmax_R))
    alpha_cos = np.maximum(np.maximum(spr, spr_l), spr_r)
    return np.exp(-alpha_cos * dt * sigma / h)


# ---------------------------------------------------------------------------
# General oscillation sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OscillationSet:
    """Closed convex oscillation-admissible set along the scaling ray.

    variant "canonical-segment": the segment [0, lam_cos] on the ray;
    variant "gauge": {V : omega(V - avg) <= gamma} for a positively
    homogeneous convex gauge; variant "entropy-deviation": sublevel set of
    the entropy Bregman gap around the average.
    """
    variant: str = "canonical-segment"
    lam_cos: float = 1.0
    omega: callable = None
    gamma: float = 0.0
    pair: object = None

    def __post_init__(self):
        if self.variant not in ("canonical-segment", "gauge", "entropy-deviation"):
            raise ValueError(f"unknown oscillation variant {self.variant!r}")


def entropy_deviation_gauge(avg, nodal, weights, pair):
    """Bregman-gap gauge: sum_nu w_nu [eta(V_nu) - eta(avg) - grad._(V_nu-avg)]."""
    avg = np.asarray(avg, dtype=float)
    nodal = np.asarray(nodal, dtype=float)
    w = np.asarray(weights, dtype=float)
    dev = nodal - avg[..., None, :]
    lin = np.einsum("...lm,...m->...l", dev, pair.grad_eta(avg))
    gap = pair.eta(nodal) - pair.eta(avg)[..., None] - lin
    return gap @ w


def gauge_oscillation_radius(avg, nodal, weights, oset):
    """Oscillation radius for the chosen convex oscillation set."""
    avg = np.asarray(avg, dtype=float)
    nodal = np.asarray(nodal, dtype=float)
    if oset.variant == "canonical-segment":
        return float(oset.lam_cos)
    if oset.variant == "gauge":
        dev = nodal - avg[None, :]
        val = float(oset.omega(dev))
        if val <= oset.gamma:
            return 1.0
        return float(oset.gamma / val)
    # entropy-deviation: convex nondecreasing profile with zero slope at 0
    pair = oset.pair
    full = float(entropy_deviation_gauge(avg, nodal, weights, pair))
    if full <= oset.gamma:
        return 1.0
    if pair.quadratic:
        return float(np.sqrt(oset.gamma / full))

    def feasible(t):
        scaled = apply_scaling(avg, nodal, float(t))
        return np.asarray(
            float(entropy_deviation_gauge(avg, scaled, weights, pair)) <= oset.gamma)

    return float(_bisect_lower(feasible, np.asarray(0.0), np.asarray(1.0)))


# ---------------------------------------------------------------------------
# The combined radius
# ---------------------------------------------------------------------------

def epo_radius(theta_p, theta_pe, theta_o):
    """Min-formula: the applied radius is min(min_r theta_pe[r], theta_o)."""
    pe = tuple(float(t) for t in np.atleast_1d(theta_pe))
    theta = min(min(pe), float(theta_o))
    return RadiusBreakdown(float(theta_p), pe, float(theta_o), theta)


def limit_cell(avg, nodal, budgets, pairs, aset, weights, theta_o=1.0,
               toggles=LimiterToggles()):
    """Full scaling pipeline for one cell; returns (limited nodal, breakdown)."""
    avg = np.asarray(avg, dtype=float)
    nodal = np.asarray(nodal, dtype=float)
    theta_p = geometric_radius(avg, nodal, aset) if (toggles.p or toggles.e) else 1.0
    if toggles.e:
        theta_pe = tuple(
            positivity_first_entropy_radius(avg, nodal, B, pair, weights, theta_p)
            for B, pair in zip(budgets, pairs))
    else:
        theta_pe = (theta_p,) if toggles.p else (1.0,)
    t_o = float(theta_o) if toggles.o else 1.0
    br = epo_radius(theta_p if toggles.p else 1.0, theta_pe, t_o)
    return apply_scaling(avg, nodal, br.theta_epo), br
