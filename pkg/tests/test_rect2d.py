import numpy as np
import pytest

from epodg import rect2d
from epodg.budgets import budget_slack
from epodg.limiter import CosConfig, apply_scaling
from epodg.physics import (Advection2DModel, EulerParams, advection2d_pair,
                           euler2d_admissible_set, euler2d_entropy_pair,
                           euler2d_model, euler_entropy_pair,
                           euler_primitive_to_conservative, scalar_model)
from epodg.quadrature import gauss_lobatto_rule

PAR = EulerParams()
NODES = rect2d.RectNodeSet(L=3, Q=3)


def tensor_euler_poly(rng, spread=0.5):
    L = NODES.L
    rho = rng.uniform(0.5, 2.0, size=(L, L))
    u = rng.uniform(-1.0, 1.0, size=(L, L))
    v = rng.uniform(-1.0, 1.0, size=(L, L))
    p = rng.uniform(0.5, 2.0, size=(L, L))
    E = p / (PAR.gamma - 1.0) + 0.5 * rho * (u * u + v * v)
    vals = np.stack([rho, rho * u, rho * v, E], axis=-1)
    return rect2d.TensorPoly(vals, NODES.gl.nodes)


def test_kappa_examples():
    k = rect2d.kappa_weights(1.0, 1.0, 1.0, 1.0)
    assert k.kappa1 == 0.5 and k.kappa2 == 0.5
    k = rect2d.kappa_weights(3.0, 1.0, 1.0, 1.0)
    assert abs(k.kappa1 - 0.75) <= 1e-15 and abs(k.kappa2 - 0.25) <= 1e-15
    rng = np.random.default_rng(0)
    for _ in range(100):
        k = rect2d.kappa_weights(*rng.uniform(0.1, 5.0, size=4))
        assert abs(k.kappa1 + k.kappa2 - 1.0) <= 1e-15
    with pytest.raises(ValueError):
        rect2d.kappa_weights(0.0, 1.0, 1.0, 1.0)


def test_node_set_weights_positive_unit_sum():
    rng = np.random.default_rng(1)
    for _ in range(50):
        kap = rect2d.kappa_weights(*rng.uniform(0.1, 5.0, size=4))
        w = NODES.flat_weights(kap)
        assert np.all(w > 0)
        assert abs(w.sum() - 1.0) <= 1e-15


def test_mixed_node_average_matches_tensor_average():
    rng = np.random.default_rng(2)
    for _ in range(50):
        poly = tensor_euler_poly(rng)
        cell = poly.sample(NODES)
        kap = rect2d.kappa_weights(*rng.uniform(0.1, 5.0, size=4))
        avg_mixed = cell.average(NODES, kap)
        avg_tensor = poly.average(NODES.gl.weights)
        assert np.abs(avg_mixed - avg_tensor).max() <= 1e-13 * max(
            1.0, np.abs(avg_tensor).max())


def test_candidate_update_constant_unchanged():
    model = euler2d_model(PAR)
    U = euler_primitive_to_conservative(1.0, 0.0, 2.5, PAR)
    U = np.array([1.0, 0.3, -0.1, 2.5])
    q = NODES.gauss
    fx = np.tile(model.flux_x(U), (3, 1))
    fy = np.tile(model.flux_y(U), (3, 1))
    out = rect2d.rect_candidate_update(U, fx, fx, fy, fy, 0.1, 0.2, q.weights)
    assert np.abs(out - U).max() <= 1e-15


def test_y_constant_data_reduces_to_1d_update():
    # y-independent field: the 2D update equals the 1D flux-difference update
    from epodg.budgets import lf_flux
    from epodg.physics import euler_model
    rng = np.random.default_rng(3)
    model2 = euler2d_model(PAR)
    model1 = euler_model(PAR)
    line = rng.uniform(0.5, 2.0, size=(3, 3))  # 1D nodal data (L, m)
    U1 = euler_primitive_to_conservative(line[:, 0], line[:, 1] - 1.2,
                                         line[:, 2], PAR)
    # lift to 2D with zero transverse momentum
    vals = np.zeros((3, 3, 4))
    for b in range(3):
        vals[:, b, 0] = U1[:, 0]
        vals[:, b, 1] = U1[:, 1]
        vals[:, b, 3] = U1[:, 2]
    poly = rect2d.TensorPoly(vals, NODES.gl.nodes)
    cell = poly.sample(NODES)
    UL1 = U1[0]
    UR1 = U1[-1]
    alpha1 = 2.0
    # 1D fluxes at the two traces against exterior copies of the traces
    f_left_1d = lf_flux(UL1, UL1, alpha1, model1)
    f_right_1d = lf_flux(UR1, UR1, alpha1, model1)
    lift = lambda F: np.stack([F[0], F[1], np.zeros_like(F[0]), F[2]], axis=-1)
    fx_l = np.tile(lift(f_left_1d), (3, 1))
    fx_r = np.tile(lift(f_right_1d), (3, 1))
    fy = np.zeros((3, 4))
    # y-fluxes of a y-constant field are equal top and bottom: difference 0
    lam_x, lam_y = 0.01, 0.013
    kap = rect2d.kappa_weights(alpha1, 1e-30 + alpha1, 1.0, 1.0)
    avg2 = cell.average(NODES, kap)
    out2 = rect2d.rect_candidate_update(avg2, fx_l, fx_r, fy, fy, lam_x,
                                        lam_y, NODES.gauss.weights)
    avg1 = NODES.gl.weights @ U1
    out1 = avg1 - lam_x * (f_right_1d - f_left_1d)
    assert np.abs(out2[[0, 1, 3]] - out1).max() <= 1e-13 * max(1.0, np.abs(out1).max())
    assert abs(out2[2]) <= 1e-15


def test_rect_cfl_and_positivity_certificate():
    rng = np.random.default_rng(4)
    aset = euler2d_admissible_set(PAR)
    poly = tensor_euler_poly(rng)
    cell = poly.sample(NODES)
    kap = rect2d.kappa_weights(1.0, 1.0, 1.0, 1.0)
    ok, margin = rect2d.rect_cfl_check(1e-3, 1.0, 1.0, 1.0, 1.0,
                                       NODES.gl.weights[0])
    assert ok and margin > 0
    bad, _ = rect2d.rect_cfl_check(1.0, 1.0, 1.0, 1.0, 1.0,
                                   NODES.gl.weights[0])
    assert not bad
    assert rect2d.rect_weak_positivity_check(cell, NODES, kap, [], aset, True)
    assert not rect2d.rect_weak_positivity_check(cell, NODES, kap, [], aset,
                                                 False)


def test_rect_weak_budget_constant_field():
    pair = euler2d_entropy_pair(PAR)
    U = np.array([1.0, 0.2, -0.3, 2.5])
    vals = np.tile(U, (3, 3, 1))
    poly = rect2d.TensorPoly(vals, NODES.gl.nodes)
    cell = poly.sample(NODES)
    kap = rect2d.kappa_weights(1.0, 2.0, 1.0, 1.0)
    q = pair.q_flux(U)
    qx = np.tile(q[0], 3)
    qy = np.tile(q[1], 3)
    B = rect2d.rect_weak_budget(cell, NODES, kap, qx, qx, qy, qy, 0.01, 0.01,
                                pair)
    assert abs(B - float(pair.eta(U))) <= 1e-13 * max(1.0, abs(float(pair.eta(U))))


def test_entropy_flux_antisymmetry():
    pair = euler2d_entropy_pair(PAR)
    rng = np.random.default_rng(5)
    for _ in range(200):
        rho, p = rng.uniform(0.3, 3.0, size=2)
        u, v = rng.uniform(-1.5, 1.5, size=2)
        E = p / (PAR.gamma - 1.0) + 0.5 * rho * (u * u + v * v)
        A = np.array([rho, rho * u, rho * v, E])
        rho, p = rng.uniform(0.3, 3.0, size=2)
        u, v = rng.uniform(-1.5, 1.5, size=2)
        E = p / (PAR.gamma - 1.0) + 0.5 * rho * (u * u + v * v)
        B = np.array([rho, rho * u, rho * v, E])
        phi = rng.uniform(0, 2 * np.pi)
        n = np.array([np.cos(phi), np.sin(phi)])
        alpha = rng.uniform(0.5, 4.0)
        q1 = rect2d.entropy_flux_2d(A, B, alpha, pair, -n)
        q2 = rect2d.entropy_flux_2d(B, A, alpha, pair, n)
        assert abs(q1 + q2) <= 1e-15 * max(1.0, abs(q1))


def test_cos2d_examples():
    model = euler2d_model(PAR)
    pair = euler2d_entropy_pair(PAR)
    cfg = CosConfig(mode="global")
    rng = np.random.default_rng(6)
    # one global, nearly constant tensor polynomial split across cells (so
    # two-cell extrapolations stay admissible): no damping
    L = NODES.L
    rho = 1.0 + 0.01 * rng.normal(size=(L, L))
    u = 0.05 * rng.normal(size=(L, L))
    v = 0.05 * rng.normal(size=(L, L))
    p = 1.0 + 0.01 * rng.normal(size=(L, L))
    E = p / (PAR.gamma - 1.0) + 0.5 * rho * (u * u + v * v)
    base = rect2d.TensorPoly(np.stack([rho, rho * u, rho * v, E], axis=-1),
                             NODES.gl.nodes)

    def shifted(dx_cells, dy_cells):
        # evaluate the same global polynomial in the neighbor's frame
        xi = NODES.gl.nodes + 2.0 * dx_cells
        eta = NODES.gl.nodes + 2.0 * dy_cells
        return rect2d.TensorPoly(base.eval_grid(xi, eta), NODES.gl.nodes)

    center = shifted(0, 0)
    nbrs = {"left": shifted(-1, 0), "right": shifted(1, 0),
            "bottom": shifted(0, -1), "top": shifted(0, 1)}
    avg = center.average(NODES.gl.weights)
    avgs = {k: v.average(NODES.gl.weights) for k, v in nbrs.items()}
    lam = rect2d.cos2d_coefficient(center, nbrs, avg, avgs, model, 0.05,
                                   1.0, 1.0, cfg, pair)
    assert abs(lam - 1.0) <= 1e-10
    lam0 = rect2d.cos2d_coefficient(center, nbrs, avg, avgs, model, 0.0,
                                    1.0, 1.0, cfg, pair)
    assert lam0 == 1.0


def test_cos2d_single_edge_arithmetic():
    # |E|=1, |K|=1, beta=2, sigma=1, dt=0.1 -> exp(-0.2)
    assert abs(np.exp(-0.1 * 1.0 * 2.0 * 1.0 / 1.0) - np.exp(-0.2)) == 0.0


def test_epo2d_apply_identity_and_certificates():
    pair = euler2d_entropy_pair(PAR)
    aset = euler2d_admissible_set(PAR)
    rng = np.random.default_rng(7)
    poly = tensor_euler_poly(rng)
    cell = poly.sample(NODES)
    kap = rect2d.kappa_weights(1.3, 0.7, 1.0, 1.0)
    avg = cell.average(NODES, kap)
    big_B = float(pair.eta(cell.flat()) @ NODES.flat_weights(kap)) + 1.0
    out, br = rect2d.epo2d_apply(cell, NODES, kap, avg, [big_B], [pair], aset)
    assert br.theta_epo == 1.0
    assert np.abs(out.flat() - cell.flat()).max() == 0.0
    # active budget: certificates hold and the mean is preserved
    tight_B = float(pair.eta(avg)) + 1e-4
    out, br = rect2d.epo2d_apply(cell, NODES, kap, avg, [tight_B], [pair], aset)
    w = NODES.flat_weights(kap)
    assert np.abs(w @ out.flat() - avg).max() <= 1e-14 * max(1.0, np.abs(avg).max())
    ent = float(pair.eta(out.flat()) @ w)
    assert ent <= tight_B + float(budget_slack(np.asarray(tight_B)))
    assert bool(np.all(aset.contains(out.flat())))
    # passive mode: entropy radius equals the geometric radius
    out, br = rect2d.epo2d_apply(cell, NODES, kap, avg, [tight_B], [pair],
                                 aset, passive_entropy=True)
    assert br.theta_pe == (br.theta_p,)


def test_passive_entropy_monotone_along_ray():
    pair = euler2d_entropy_pair(PAR)
    rng = np.random.default_rng(8)
    poly = tensor_euler_poly(rng)
    cell = poly.sample(NODES)
    kap = rect2d.kappa_weights(1.0, 1.0, 1.0, 1.0)
    w = NODES.flat_weights(kap)
    flat = cell.flat()
    avg = w @ flat
    vals = [float(pair.eta(apply_scaling(avg, flat, t)) @ w)
            for t in np.linspace(0, 1, 9)]
    for a, b in zip(vals, vals[1:]):
        assert a <= b + 1e-12 * max(1.0, abs(b))
