"""Rectangular-mesh extension: the mixed tensor node set with kappa-weighted
line-separable weights, 2D candidate average updates, weak geometric and
entropy budgets assembled from directional slice budgets, the 2D oscillation
coefficient, and the unified cell scaling.

The module certifies budgets for any candidate whose average update has the
edge-flux form; the bundled test flows transport nodal deviations and update
averages with that form, which is enough to exercise every certificate.
"""

from dataclasses import dataclass

import numpy as np

from .budgets import budget_slack
from .discretization import lagrange_basis
from .errors import CflViolation, WeakPositivityViolated
from .limiter import (LimiterToggles, _entropy_refine, _geometric_refine,
                      apply_scaling, epo_radius, quadratic_entropy_radius)
from .quadrature import gauss_lobatto_rule, gauss_rule


@dataclass(frozen=True)
class Mesh2D:
    x0: float
    x1: float
    y0: float
    y1: float
    nx: int
    ny: int

    @property
    def dx(self):
        return (self.x1 - self.x0) / self.nx

    @property
    def dy(self):
        return (self.y1 - self.y0) / self.ny

    def centers(self):
        cx = self.x0 + (np.arange(self.nx) + 0.5) * self.dx
        cy = self.y0 + (np.arange(self.ny) + 0.5) * self.dy
        return cx, cy


@dataclass(frozen=True)
class KappaWeights:
    kappa1: float
    kappa2: float


def kappa_weights(alpha1, alpha2, dx, dy):
    """Directional convex weights kappa_i proportional to alpha_i/h_i."""
    if min(alpha1, alpha2, dx, dy) <= 0:
        raise ValueError("kappa weights need positive speeds and spacings")
    r1 = alpha1 / dx
    r2 = alpha2 / dy
    k1 = r1 / (r1 + r2)
    return KappaWeights(k1, 1.0 - k1)


@dataclass(frozen=True)
class RectNodeSet:
    """Mixed node families (GL x Gauss) and (Gauss x GL) on the reference cell.

    Family weights are kappa1*w_mu*hat_w_q and kappa2*hat_w_q*w_mu; both
    families reproduce the average of a tensor polynomial of degree <= k, so
    the union with any kappa in (0,1) does too.
    """
    L: int
    Q: int

    def __post_init__(self):
        gl = gauss_lobatto_rule(self.L)
        gs = gauss_rule(self.Q)
        object.__setattr__(self, "gl", gl)
        object.__setattr__(self, "gauss", gs)

    def family_weights(self, kappa):
        wx = np.outer(self.gl.weights, self.gauss.weights)   # (L, Q)
        wy = np.outer(self.gauss.weights, self.gl.weights)   # (Q, L)
        return kappa.kappa1 * wx, kappa.kappa2 * wy

    def flat_weights(self, kappa):
        wx, wy = self.family_weights(kappa)
        return np.concatenate([wx.ravel(), wy.ravel()])


@dataclass
class CellSolution2D:
    """Nodal values on the two families: ux (L,Q,m) at (GL_x, Gauss_y) and
    uy (Q,L,m) at (Gauss_x, GL_y)."""
    ux: np.ndarray
    uy: np.ndarray

    def flat(self):
        m = self.ux.shape[-1]
        return np.concatenate([self.ux.reshape(-1, m), self.uy.reshape(-1, m)])

    @staticmethod
    def unflatten(flat, L, Q, m):
        nx_ = L * Q
        return CellSolution2D(flat[:nx_].reshape(L, Q, m),
                              flat[nx_:].reshape(Q, L, m))

    def average(self, nodes, kappa):
        w = nodes.flat_weights(kappa)
        return w @ self.flat()


class TensorPoly:
    """Tensor-product polynomial stored as nodal values on (GL_x x GL_y).

    Evaluation matrices map the (L, L, m) coefficients to any tensor grid,
    inside or outside the reference cell (extrapolation for the oscillation
    sensor integrals).
    """

    def __init__(self, vals, gl_nodes):
        self.vals = np.asarray(vals, dtype=float)
        self.gl_nodes = np.asarray(gl_nodes, dtype=float)

    def eval_grid(self, xi, eta):
        Ex = lagrange_basis(self.gl_nodes, np.atleast_1d(xi))
        Ey = lagrange_basis(self.gl_nodes, np.atleast_1d(eta))
        return np.einsum("pa,qb,abm->pqm", Ex, Ey, self.vals)

    def average(self, gl_weights):
        return np.einsum("a,b,abm->m", gl_weights, gl_weights, self.vals)

    def sample(self, nodes):
        """CellSolution2D of this polynomial on the mixed node set."""
        ux = self.eval_grid(nodes.gl.nodes, nodes.gauss.nodes)
        uy = self.eval_grid(nodes.gauss.nodes, nodes.gl.nodes)
        return CellSolution2D(ux, uy)


def rect_candidate_update(avg, flux_x_left, flux_x_right, flux_y_bottom,
                          flux_y_top, lam_x, lam_y, gauss_weights):
    """Average update with Gauss-weighted directional flux differences.

    The per-edge fluxes carry the edge Gauss node on their first axis.
    """
    wq = np.asarray(gauss_weights, dtype=float)
    dfx = wq @ (np.asarray(flux_x_right) - np.asarray(flux_x_left))
    dfy = wq @ (np.asarray(flux_y_top) - np.asarray(flux_y_bottom))
    return np.asarray(avg, dtype=float) - lam_x * dfx - lam_y * dfy


def directional_entropy_flux(UL, UR, alpha, pair, component):
    """1D numerical entropy flux of the directional slice system."""
    q = pair.q_flux
    qL = q(np.asarray(UL, dtype=float))[..., component]
    qR = q(np.asarray(UR, dtype=float))[..., component]
    return 0.5 * (qL + qR) - 0.5 * alpha * (pair.eta(UR) - pair.eta(UL))


def entropy_flux_2d(UL, UR, alpha, pair, normal):
    """Directional numerical entropy flux with an explicit unit normal.

    Satisfies the antisymmetry Qhat(A,B;-n) = -Qhat(B,A;n).
    """
    q = pair.q_flux
    qn_L = q(np.asarray(UL, dtype=float)) @ np.asarray(normal, dtype=float)
    qn_R = q(np.asarray(UR, dtype=float)) @ np.asarray(normal, dtype=float)
    return 0.5 * (qn_L + qn_R) - 0.5 * alpha * (pair.eta(UR) - pair.eta(UL))


def rect_cfl_check(dt, dx, dy, alpha1, alpha2, omega1, safety_fraction=1.0):
    """2D CFL: (alpha1/dx + alpha2/dy)*dt <= omega1 * safety."""
    lhs = (alpha1 / dx + alpha2 / dy) * dt
    margin = omega1 * safety_fraction - lhs
    return margin >= 0.0, margin


def rect_weak_budget(cell, nodes, kappa, qx_left, qx_right, qy_bottom, qy_top,
                     lam_x, lam_y, pair, cfl_ok=None):
    """Weak entropy budget B^R: kappa-weighted Gauss average of slice budgets.

    The per-edge numerical entropy fluxes carry the edge Gauss node on their
    axis; the slice budgets use effective ratios lam/kappa, whose kappa
    factors cancel in the assembled flux contribution.
    """
    if cfl_ok is not None and not cfl_ok:
        raise CflViolation("2D budget not certified: CFL violated")
    wq = nodes.gauss.weights
    wl = nodes.gl.weights
    eta_x = pair.eta(cell.ux)            # (L, Q)
    eta_y = pair.eta(cell.uy)            # (Q, L)
    Bx = wl @ eta_x - (lam_x / kappa.kappa1) * (np.asarray(qx_right)
                                                - np.asarray(qx_left))
    By = eta_y @ wl - (lam_y / kappa.kappa2) * (np.asarray(qy_top)
                                                - np.asarray(qy_bottom))
    return kappa.kappa1 * (wq @ Bx) + kappa.kappa2 * (wq @ By)


def rect_slice_candidates(cell, nodes, kappa, fx_left, fx_right, fy_bottom,
                          fy_top, lam_x, lam_y):
    """Directional slice candidate averages A^x_q and A^y_q, each (Q, m)."""
    wl = nodes.gl.weights
    avg_x = np.einsum("l,lqm->qm", wl, cell.ux)
    avg_y = np.einsum("l,qlm->qm", wl, cell.uy)
    Ax = avg_x - (lam_x / kappa.kappa1) * (np.asarray(fx_right)
                                           - np.asarray(fx_left))
    Ay = avg_y - (lam_y / kappa.kappa2) * (np.asarray(fy_top)
                                           - np.asarray(fy_bottom))
    return Ax, Ay


def rect_weak_positivity_check(cell, nodes, kappa, exterior_traces, aset,
                               cfl_ok):
    """Certificate that the updated average stays admissible.

    True when every node of the mixed set, every exterior trace, and the 2D
    CFL hypothesis hold; the caller may then assert membership of the update.
    """
    if not cfl_ok:
        return False
    if not bool(np.all(aset.contains(cell.flat()))):
        return False
    for tr in exterior_traces:
        if not bool(np.all(aset.contains(np.asarray(tr, dtype=float)))):
            return False
    return True


def cos2d_coefficient(poly, neighbor_polys, avg, neighbor_avgs, model, dt,
                      dx, dy, config, sensor):
    """Canonical 2D oscillation coefficient exp(-(dt/|K|) sum |E| beta sigma).

    `neighbor_polys`/`neighbor_avgs` are keyed by edge name (left, right,
    bottom, top); distance integrals run over the neighbor cell, evaluating
    both candidates there on a tensor Gauss grid.
    """
    if config.mode == "off" or dt == 0.0:
        return 1.0
    area = dx * dy
    k = len(poly.gl_nodes) - 1
    vol = gauss_rule(min(k + 2, 8))
    edges = {
        "left": ((-1.0, 0.0), dy, (vol.nodes - 2.0, vol.nodes)),
        "right": ((1.0, 0.0), dy, (vol.nodes + 2.0, vol.nodes)),
        "bottom": ((0.0, -1.0), dx, (vol.nodes, vol.nodes - 2.0)),
        "top": ((0.0, 1.0), dx, (vol.nodes, vol.nodes + 2.0)),
    }
    total = 0.0
    scale2 = max(float(np.sum(a * a)) for a in
                 [avg] + [np.asarray(v) for v in neighbor_avgs.values()])
    floor = config.eps_floor * max(1.0, scale2)
    H = sensor.hess(avg) if config.distance == "frozen-hessian" else None
    for name, (normal, elen, (xi_self, eta_self)) in edges.items():
        if name not in neighbor_polys:
            continue
        nbr = neighbor_polys[name]
        nbr_avg = np.asarray(neighbor_avgs[name], dtype=float)
        if config.mode == "local":
            lmin_s, lmax_s = model.eigen_range_normal(avg, normal)
            lmin_n, lmax_n = model.eigen_range_normal(nbr_avg, normal)
            hit = (lmax_s - lmax_n) > config.delta * (abs(lmax_s) + abs(lmax_n))
            hit |= (lmin_s - lmin_n) > config.delta * (abs(lmin_s) + abs(lmin_n))
            if not hit:
                continue
        nbr_vals = nbr.eval_grid(vol.nodes, vol.nodes)
        ours = poly.eval_grid(xi_self, eta_self)

        def dist2(A, B):
            D = A - B
            if H is not None:
                quad = np.einsum("pqm,mk,pqk->pq", D, H, D)
            else:
                quad = 4.0 * (sensor.eta(A) + sensor.eta(B)
                              - 2.0 * sensor.eta(0.5 * (A + B)))
            return area * float(
                vol.weights @ quad @ vol.weights)

        den = dist2(nbr_vals, np.broadcast_to(avg, nbr_vals.shape))
        if den < floor:
            continue
        num = dist2(nbr_vals, ours)
        beta = max(float(model.normal_wave_speed(avg, normal)),
                   float(model.normal_wave_speed(nbr_avg, normal)))
        total += elen * beta * config.c_for(k) * num / den
    return float(np.exp(-dt * total / area))


def epo2d_apply(cell, nodes, kappa, avg, budgets, pairs, aset, theta_o=1.0,
                toggles=LimiterToggles(), passive_entropy=False):
    """Unified 2D scaling: same min-formula over the mixed node set.

    With `passive_entropy` the entropy radius is taken equal to the
    geometric radius (candidate already entropy stable).
    """
    flat = cell.flat()
    w = nodes.flat_weights(kappa)
    avg = np.asarray(avg, dtype=float)
    if toggles.p or toggles.e:
        if not bool(aset.contains(avg)):
            raise WeakPositivityViolated("2D candidate average not admissible")
        if bool(np.all(aset.contains(flat))):
            theta_p = 1.0
        else:
            theta_p = float(_geometric_refine(avg[None], flat[None], aset)[0])
    else:
        theta_p = 1.0
    if toggles.e and not passive_entropy:
        theta_pe = []
        for pair, B in zip(pairs, budgets):
            B_eff = B + budget_slack(np.asarray(B, dtype=float))
            if pair.quadratic:
                theta_e = quadratic_entropy_radius(avg, flat, w, B_eff)
                theta_pe.append(min(theta_p, float(theta_e)))
                continue
            trunc = apply_scaling(avg, flat, theta_p)
            if float(pair.eta(trunc) @ w) <= B_eff:
                theta_pe.append(theta_p)
                continue
            vt = _entropy_refine(avg[None], trunc[None],
                                 np.atleast_1d(B_eff), pair, w)
            theta_pe.append(theta_p * float(vt[0]))
        theta_pe = tuple(theta_pe)
    else:
        theta_pe = (theta_p,)
    br = epo_radius(theta_p, theta_pe, theta_o if toggles.o else 1.0)
    if br.theta_epo >= 1.0:
        return cell, br
    scaled = apply_scaling(avg, flat, br.theta_epo)
    m = flat.shape[-1]
    return CellSolution2D.unflatten(scaled, nodes.L, nodes.Q, m), br
