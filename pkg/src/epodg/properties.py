"""Seeded randomized invariant suites, shared by the `properties` CLI command
and the test suite. Each check returns (name, n_trials); it raises
AssertionError with a description on the first violated instance.
"""

import numpy as np

from . import budgets as bg
from .discretization import DGOperator, Mesh1D, cell_average
from .limiter import (OscillationSet, affine_geometric_radius,
                      apply_scaling, entropy_deviation_gauge,
                      entropy_profile, epo_radius, gauge_oscillation_radius,
                      geometric_radius, positivity_first_entropy_radius,
                      quadratic_entropy_radius)
from . import rect2d
from .physics import (EulerParams, euler2d_admissible_set,
                      euler2d_entropy_pair, euler2d_model,
                      euler_admissible_set, euler_entropy_pair, euler_model,
                      euler_primitive_to_conservative,
                      interval_admissible_set, scalar_model)
from .quadrature import gauss_lobatto_rule, gauss_rule


def _random_euler_states(rng, n, rho_range=(0.1, 10.0), u_range=(-3.0, 3.0),
                         p_range=(0.1, 10.0), params=None):
    params = params or EulerParams()
    rho = rng.uniform(*rho_range, size=n)
    u = rng.uniform(*u_range, size=n)
    p = rng.uniform(*p_range, size=n)
    return euler_primitive_to_conservative(rho, u, p, params)


def _random_admissible_field(rng, n_cells, L, params):
    """Nodal Euler field with every node strictly admissible."""
    shape = (n_cells, L)
    rho = rng.uniform(0.2, 5.0, size=shape)
    u = rng.uniform(-2.0, 2.0, size=shape)
    p = rng.uniform(0.2, 5.0, size=shape)
    return euler_primitive_to_conservative(rho, u, p, params)


def check_two_point_inequality(seed=0, trials=1000):
    """Two-point Riemann-average entropy inequality with a doubled bound."""
    rng = np.random.default_rng(seed)
    params = EulerParams()
    model = euler_model(params)
    pair = euler_entropy_pair(params)
    aset = euler_admissible_set(params)
    UL = _random_euler_states(rng, trials, params=params)
    UR = _random_euler_states(rng, trials, params=params)
    for i in range(trials):
        alpha = 2.0 * float(max(model.max_wave_speed(UL[i]),
                                model.max_wave_speed(UR[i])))
        H = bg.h_alpha(UL[i], UR[i], alpha, model)
        assert bool(aset.contains(H)), f"H_alpha left G on trial {i}"
        lhs = float(pair.eta(H))
        rhs = 0.5 * float(pair.eta(UL[i]) + pair.eta(UR[i])) \
            - float(pair.q_flux(UR[i]) - pair.q_flux(UL[i])) / (2.0 * alpha)
        scale = max(1.0, abs(rhs))
        assert lhs <= rhs + 1e-12 * scale, \
            f"two-point inequality failed on trial {i}: {lhs} > {rhs}"
    return "two-point entropy inequality", trials


def check_weak_budgets(seed=1, trials=200, n_cells=24):
    """Forward-Euler weak budgets and periodic telescoping on random fields."""
    rng = np.random.default_rng(seed)
    params = EulerParams()
    model = euler_model(params)
    pair = euler_entropy_pair(params)
    aset = euler_admissible_set(params)
    rule = gauss_lobatto_rule(3)
    mesh = Mesh1D(0.0, 1.0, n_cells)
    op = DGOperator(model, mesh, rule, bc="periodic", k=2)
    omega1 = rule.weights[0]
    for trial in range(trials):
        nodal = _random_admissible_field(rng, n_cells, 3, params)
        alpha = op.global_alpha(nodal)
        lam = rng.uniform(0.1, 1.0) * omega1 / alpha
        fh = op.interface_fluxes(nodal, alpha)
        avgs = cell_average(nodal, rule)
        star = avgs - lam * (fh[1:] - fh[:-1])
        assert bool(np.all(aset.contains(star))), \
            f"weak positivity failed on trial {trial}"
        qh = op.interface_entropy_fluxes(nodal, alpha, pair)
        node_eta = pair.eta(nodal)
        B = bg.weak_budget_forward_euler(node_eta, rule.weights, qh[:-1],
                                         qh[1:], lam)
        lhs = pair.eta(star)
        scale = np.maximum(1.0, np.abs(B))
        assert bool(np.all(lhs <= B + 1e-12 * scale)), \
            f"weak entropy budget failed on trial {trial}"
        total_B = float(B.sum())
        total_eta = float(node_eta @ rule.weights @ np.ones(n_cells))
        assert abs(total_B - total_eta) <= 1e-11 * max(1.0, abs(total_eta)), \
            f"budget telescoping failed on trial {trial}"
    return "weak budgets and telescoping", trials


def check_radius_structure(seed=2, trials=120, samples=2000):
    """Interval structure of the admissible theta-set and the min-formula."""
    rng = np.random.default_rng(seed)
    params = EulerParams()
    pair = euler_entropy_pair(params)
    aset = euler_admissible_set(params)
    rule = gauss_lobatto_rule(3)
    w = rule.weights
    for trial in range(trials):
        avg = _random_euler_states(rng, 1, rho_range=(0.5, 2.0),
                                   p_range=(0.5, 2.0), params=params)[0]
        dev = rng.normal(scale=rng.uniform(0.1, 3.0), size=(3, 3))
        dev -= w @ dev   # zero weighted mean
        nodal = avg + dev
        theta_p = geometric_radius(avg, nodal, aset)
        B = float(pair.eta(avg)) + rng.uniform(0.0, 1.0)
        theta_pe = positivity_first_entropy_radius(avg, nodal, B, pair, w,
                                                   theta_p)
        theta_o = rng.uniform(0.3, 1.0)
        br = epo_radius(theta_p, [theta_pe], theta_o)
        assert br.theta_epo == min(theta_pe, theta_o)
        B_eff = B + float(bg.budget_slack(np.asarray(B)))

        def admissible(t):
            sc = apply_scaling(avg, nodal, t)
            if not bool(np.all(aset.contains(sc))):
                return False
            if float(pair.eta(sc) @ w) > B_eff:
                return False
            return t <= theta_o + 1e-15

        ts = rng.uniform(0.0, 1.0, size=samples)
        for t in ts:
            inside = admissible(float(t))
            if t > br.theta_epo + 1e-9:
                assert not inside, \
                    f"admissible theta above the radius on trial {trial}"
            if t < br.theta_epo - 1e-9 and not inside:
                raise AssertionError(
                    f"inadmissible theta below the radius on trial {trial}")
        # bracket-refined membership oracle for the sup itself
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if admissible(mid) else (lo, mid)
        assert abs(lo - br.theta_epo) <= 1e-9, \
            f"min-formula disagrees with the membership oracle on trial {trial}"
    return "radius interval structure and min-formula", trials


def check_quadratic_closed_form(seed=3, trials=1000):
    """Closed-form quadratic entropy radius against plain bisection."""
    rng = np.random.default_rng(seed)
    model, pair, _ = scalar_model("burgers", u_min=-5.0, u_max=5.0)
    rule = gauss_lobatto_rule(3)
    w = rule.weights
    for trial in range(trials):
        avg = np.array([rng.uniform(-2.0, 2.0)])
        dev = rng.normal(scale=rng.uniform(0.1, 2.0), size=(3, 1))
        dev -= w @ dev
        nodal = avg + dev
        B = float(pair.eta(avg)) + rng.uniform(0.0, 0.5)
        theta = float(quadratic_entropy_radius(avg, nodal, w, B))
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            val = float(entropy_profile(avg, nodal, mid, pair, w))
            lo, hi = (mid, hi) if val <= B else (lo, mid)
        assert abs(theta - lo) <= 1e-10, \
            f"quadratic radius vs bisection failed on trial {trial}"
    return "quadratic entropy closed form vs bisection", trials


def check_affine_radius(seed=4, trials=1000):
    """Affine-set geometric radius formula against a line-search oracle."""
    rng = np.random.default_rng(seed)
    aset = interval_admissible_set(0.0, 1.0)
    rule = gauss_lobatto_rule(3)
    w = rule.weights
    for trial in range(trials):
        avg = np.array([rng.uniform(0.05, 0.95)])
        dev = rng.normal(scale=rng.uniform(0.05, 2.0), size=(3, 1))
        dev -= w @ dev
        nodal = avg + dev
        theta = float(affine_geometric_radius(avg, nodal, aset))
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            ok = bool(np.all(aset.contains(apply_scaling(avg, nodal, mid))))
            lo, hi = (mid, hi) if ok else (lo, mid)
        assert abs(min(theta, 1.0) - lo) <= 1e-10, \
            f"affine radius vs line search failed on trial {trial}"
    return "affine geometric radius vs line search", trials


def check_cos_operator(seed=5, trials=400):
    """Scaling-operator mean preservation, L2 nonexpansiveness, and
    quadrature entropy inheritance."""
    rng = np.random.default_rng(seed)
    params = EulerParams()
    pair = euler_entropy_pair(params)
    rule = gauss_lobatto_rule(3)
    vol = gauss_rule(4)
    from .discretization import lagrange_basis
    E = lagrange_basis(rule.nodes, vol.nodes)
    w = rule.weights
    for trial in range(trials):
        avg = _random_euler_states(rng, 1, rho_range=(0.5, 3.0),
                                   p_range=(0.5, 3.0), params=params)[0]
        dev = rng.normal(scale=0.3, size=(3, 3))
        dev -= w @ dev
        nodal = avg + dev
        if not bool(np.all(pair.in_domain(nodal))):
            continue
        lam = rng.uniform(0.0, 1.0)
        scaled = apply_scaling(avg, nodal, lam)
        mean_err = np.abs(w @ scaled - w @ nodal).max()
        assert mean_err <= 1e-14 * max(1.0, np.abs(nodal).max()), \
            f"mean preservation failed on trial {trial}"
        # discrete L2 norm via the volume quadrature of the interpolants
        before = float((((E @ nodal) ** 2).sum(axis=1) @ vol.weights))
        after = float((((E @ scaled) ** 2).sum(axis=1) @ vol.weights))
        assert after <= before + 1e-12 * max(1.0, before), \
            f"L2 nonexpansiveness failed on trial {trial}"
        ent_after = float(pair.eta(scaled) @ w)
        ent_before = float(pair.eta(nodal) @ w)
        assert ent_after <= ent_before + 1e-12 * max(1.0, abs(ent_before)), \
            f"entropy inheritance failed on trial {trial}"
    return "COS operator properties", trials


def check_ray_composition(seed=6, trials=1000):
    rng = np.random.default_rng(seed)
    rule = gauss_lobatto_rule(3)
    w = rule.weights
    for trial in range(trials):
        avg = rng.normal(size=3)
        dev = rng.normal(size=(3, 3))
        dev -= w @ dev
        nodal = avg + dev
        t1, t2 = rng.uniform(0.0, 1.0, size=2)
        lhs = apply_scaling(avg, apply_scaling(avg, nodal, t1), t2)
        rhs = apply_scaling(avg, nodal, t1 * t2)
        assert np.abs(lhs - rhs).max() <= 1e-15 * max(1.0, np.abs(nodal).max()), \
            f"ray composition failed on trial {trial}"
    return "ray composition identity", trials


def check_stage_budgets(seed=7, trials=500):
    """SSPRK33 stage budgets and the multistep budget by direct substitution."""
    rng = np.random.default_rng(seed)
    for trial in range(trials):
        E0, E1, E2 = rng.uniform(-2.0, 2.0, size=3)
        d0, d1, d2 = rng.uniform(-1.0, 1.0, size=3)
        B1 = bg.ssprk_stage_budget(1, [E0], [d0])
        B2 = bg.ssprk_stage_budget(2, [E0, E1], [d0, d1])
        B3 = bg.ssprk_stage_budget(3, [E0, E1, E2], [d0, d1, d2])
        assert abs(B1 - (E0 - d0)) <= 1e-14
        assert abs(B2 - (0.75 * E0 + 0.25 * (E1 - d1))) <= 1e-14
        assert abs(B3 - (E0 / 3.0 + 2.0 / 3.0 * (E2 - d2))) <= 1e-14
        En, Em, dn, dm = rng.uniform(-2.0, 2.0, size=4)
        B = bg.multistep_budget({0: En, 3: Em}, {0: dn, 3: dm})
        direct = 16.0 / 27.0 * (En - 3.0 * dn) \
            + 11.0 / 27.0 * (Em - 12.0 / 11.0 * dm)
        assert abs(B - direct) <= 1e-14
    return "SSP stage and multistep budgets vs substitution", trials


def check_gauge_radii(seed=8, trials=400):
    """Entropy-deviation gauge: nonnegativity, monotone profile, radius."""
    rng = np.random.default_rng(seed)
    model, pair, _ = scalar_model("burgers", u_min=-5.0, u_max=5.0)
    rule = gauss_lobatto_rule(3)
    w = rule.weights
    for trial in range(trials):
        avg = np.array([rng.uniform(-2.0, 2.0)])
        dev = rng.normal(scale=rng.uniform(0.05, 2.0), size=(3, 1))
        dev -= w @ dev
        nodal = avg + dev
        gap_full = float(entropy_deviation_gauge(avg, nodal, w, pair))
        assert gap_full >= -1e-14
        assert abs(float(entropy_deviation_gauge(
            avg, np.repeat(avg[None, :], 3, axis=0), w, pair))) <= 1e-14
        ts = np.sort(rng.uniform(0.0, 1.0, size=8))
        vals = [float(entropy_deviation_gauge(
            avg, apply_scaling(avg, nodal, t), w, pair)) for t in ts]
        assert all(vals[i] <= vals[i + 1] + 1e-13 for i in range(len(ts) - 1)), \
            f"gauge profile not nondecreasing on trial {trial}"
        gamma = rng.uniform(0.0, 1.5) * max(gap_full, 1e-12)
        oset = OscillationSet("entropy-deviation", gamma=gamma, pair=pair)
        theta = gauge_oscillation_radius(avg, nodal, w, oset)
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            v = float(entropy_deviation_gauge(
                avg, apply_scaling(avg, nodal, mid), w, pair))
            lo, hi = (mid, hi) if v <= gamma else (lo, mid)
        assert abs(theta - lo) <= 1e-10 or (theta == 1.0 and hi >= 1.0 - 1e-10), \
            f"gauge radius vs bisection failed on trial {trial}"
    return "entropy-deviation gauge", trials


# ---------------------------------------------------------------------------
# 2D rectangular suite
# ---------------------------------------------------------------------------

def _random_tensor_cell(rng, nodes, params, rho_range=(0.3, 3.0)):
    L = nodes.L
    gl = nodes.gl
    rho = rng.uniform(*rho_range, size=(L, L))
    u = rng.uniform(-1.5, 1.5, size=(L, L))
    v = rng.uniform(-1.5, 1.5, size=(L, L))
    p = rng.uniform(0.3, 3.0, size=(L, L))
    E = p / (params.gamma - 1.0) + 0.5 * rho * (u * u + v * v)
    vals = np.stack([rho, rho * u, rho * v, E], axis=-1)
    return rect2d.TensorPoly(vals, gl.nodes)


def check_rect2d_certificates(seed=9, trials=10000, report_every=None):
    """Weak positivity and weak entropy on random admissible tensor cells.

    Each trial builds one cell and its four neighbors, forms the edge-flux
    average update under the 2D CFL condition, and asserts both certificates.
    """
    rng = np.random.default_rng(seed)
    params = EulerParams()
    model = euler2d_model(params)
    pair = euler2d_entropy_pair(params)
    aset = euler2d_admissible_set(params)
    k = 2
    nodes = rect2d.RectNodeSet(L=3, Q=k + 1)
    dx, dy = 0.7, 1.3
    omega1 = nodes.gl.weights[0]
    for trial in range(trials):
        # rejection sampling: the certificate hypothesis requires the mixed
        # node set and every edge trace to be admissible, which random tensor
        # coefficients admissible only at (GL x GL) do not guarantee
        for _ in range(200):
            polys = [_random_tensor_cell(rng, nodes, params) for _ in range(5)]
            center, left, right, bottom, top = polys
            cell = center.sample(nodes)
            own_l = center.eval_grid(np.array([-1.0]), nodes.gauss.nodes)[0]
            own_r = center.eval_grid(np.array([1.0]), nodes.gauss.nodes)[0]
            own_b = center.eval_grid(nodes.gauss.nodes, np.array([-1.0]))[:, 0]
            own_t = center.eval_grid(nodes.gauss.nodes, np.array([1.0]))[:, 0]
            ext_l = left.eval_grid(np.array([1.0]), nodes.gauss.nodes)[0]
            ext_r = right.eval_grid(np.array([-1.0]), nodes.gauss.nodes)[0]
            ext_b = bottom.eval_grid(nodes.gauss.nodes, np.array([1.0]))[:, 0]
            ext_t = top.eval_grid(nodes.gauss.nodes, np.array([-1.0]))[:, 0]
            all_states = np.concatenate([cell.flat(), own_l, own_r, own_b,
                                         own_t, ext_l, ext_r, ext_b, ext_t])
            if bool(np.all(aset.contains(all_states))):
                break
        else:
            raise AssertionError("could not draw an admissible 2D instance")
        alpha1 = float(max(model.max_wave_speed_x(all_states).max(), 1e-10))
        alpha2 = float(max(model.max_wave_speed_y(all_states).max(), 1e-10))
        kap = rect2d.kappa_weights(alpha1, alpha2, dx, dy)
        dt = rng.uniform(0.2, 1.0) * omega1 / (alpha1 / dx + alpha2 / dy)
        lam_x, lam_y = dt / dx, dt / dy
        ok, _ = rect2d.rect_cfl_check(dt, dx, dy, alpha1, alpha2, omega1)
        assert ok
        assert rect2d.rect_weak_positivity_check(
            cell, nodes, kap, [ext_l, ext_r, ext_b, ext_t], aset, ok)

        def lf(UL, UR, alpha, comp):
            fl = model.flux_x(UL) if comp == 0 else model.flux_y(UL)
            fr = model.flux_x(UR) if comp == 0 else model.flux_y(UR)
            return 0.5 * (fl + fr) - 0.5 * alpha * (UR - UL)

        fx_l = lf(ext_l, own_l, alpha1, 0)
        fx_r = lf(own_r, ext_r, alpha1, 0)
        fy_b = lf(ext_b, own_b, alpha2, 1)
        fy_t = lf(own_t, ext_t, alpha2, 1)
        avg = cell.average(nodes, kap)
        star = rect2d.rect_candidate_update(avg, fx_l, fx_r, fy_b, fy_t,
                                            lam_x, lam_y, nodes.gauss.weights)
        assert bool(aset.contains(star)), \
            f"2D weak positivity failed on trial {trial}"
        # line-separable decomposition check
        Ax, Ay = rect2d.rect_slice_candidates(cell, nodes, kap, fx_l, fx_r,
                                              fy_b, fy_t, lam_x, lam_y)
        recomb = kap.kappa1 * (nodes.gauss.weights @ Ax) \
            + kap.kappa2 * (nodes.gauss.weights @ Ay)
        assert np.abs(recomb - star).max() <= 1e-12 * max(1.0, np.abs(star).max())
        qx_l = rect2d.directional_entropy_flux(ext_l, own_l, alpha1, pair, 0)
        qx_r = rect2d.directional_entropy_flux(own_r, ext_r, alpha1, pair, 0)
        qy_b = rect2d.directional_entropy_flux(ext_b, own_b, alpha2, pair, 1)
        qy_t = rect2d.directional_entropy_flux(own_t, ext_t, alpha2, pair, 1)
        B = rect2d.rect_weak_budget(cell, nodes, kap, qx_l, qx_r, qy_b, qy_t,
                                    lam_x, lam_y, pair)
        lhs = float(pair.eta(star))
        assert lhs <= B + 1e-12 * max(1.0, abs(B)), \
            f"2D weak entropy failed on trial {trial}: {lhs} > {B}"
    return "2D weak positivity and entropy certificates", trials


def check_rect2d_identities(seed=10, trials=2000):
    """kappa identities, entropy-flux antisymmetry, passive monotonicity."""
    rng = np.random.default_rng(seed)
    params = EulerParams()
    pair = euler2d_entropy_pair(params)
    nodes = rect2d.RectNodeSet(L=3, Q=3)
    for trial in range(trials):
        a1, a2 = rng.uniform(0.1, 10.0, size=2)
        dx, dy = rng.uniform(0.1, 5.0, size=2)
        kap = rect2d.kappa_weights(a1, a2, dx, dy)
        assert abs(kap.kappa1 + kap.kappa2 - 1.0) <= 1e-15
        expect = (a1 / dx) / (a1 / dx + a2 / dy)
        assert abs(kap.kappa1 - expect) <= 1e-14
        UL = _random_euler_states(rng, 1, params=params)[0]
        UR = _random_euler_states(rng, 1, params=params)[0]
        UL2 = np.array([UL[0], UL[1], 0.3 * UL[1], UL[2]])
        UR2 = np.array([UR[0], UR[1], -0.2 * UR[1], UR[2]])
        # keep pressure positive after adding transverse momentum
        UL2[3] += 0.5 * UL2[2] ** 2 / UL2[0]
        UR2[3] += 0.5 * UR2[2] ** 2 / UR2[0]
        phi = rng.uniform(0.0, 2.0 * np.pi)
        nvec = np.array([np.cos(phi), np.sin(phi)])
        alpha = rng.uniform(0.5, 5.0)
        q1 = rect2d.entropy_flux_2d(UL2, UR2, alpha, pair, -nvec)
        q2 = rect2d.entropy_flux_2d(UR2, UL2, alpha, pair, nvec)
        assert abs(q1 + q2) <= 1e-15 * max(1.0, abs(q1)), \
            f"entropy-flux antisymmetry failed on trial {trial}"
        # passive-entropy monotonicity along the ray
        poly = _random_tensor_cell(rng, nodes, params)
        cell = poly.sample(nodes)
        kapc = rect2d.kappa_weights(1.0, 1.0, 1.0, 1.0)
        w = nodes.flat_weights(kapc)
        flat = cell.flat()
        avg = w @ flat
        if not bool(np.all(pair.in_domain(flat))):
            continue
        ent_full = float(pair.eta(flat) @ w)
        t1, t2 = np.sort(rng.uniform(0.0, 1.0, size=2))
        e1 = float(pair.eta(apply_scaling(avg, flat, t1)) @ w)
        e2 = float(pair.eta(apply_scaling(avg, flat, t2)) @ w)
        scale = max(1.0, abs(ent_full))
        assert e1 <= e2 + 1e-12 * scale <= ent_full + 2e-12 * scale, \
            f"passive entropy monotonicity failed on trial {trial}"
    return "2D kappa/antisymmetry/passive-entropy identities", trials


ALL_CHECKS = [
    check_two_point_inequality,
    check_weak_budgets,
    check_radius_structure,
    check_quadratic_closed_form,
    check_affine_radius,
    check_cos_operator,
    check_ray_composition,
    check_stage_budgets,
    check_gauge_radii,
    check_rect2d_identities,
    check_rect2d_certificates,
]


def run_all(seed=0, fast=False):
    """Run every suite; returns a list of (name, trials, passed, message)."""
    import zlib
    results = []
    for fn in ALL_CHECKS:
        kwargs = {"seed": seed + zlib.crc32(fn.__name__.encode()) % 1000}
        if fast and fn is check_rect2d_certificates:
            kwargs["trials"] = 500
        try:
            name, trials = fn(**kwargs)
            results.append((name, trials, True, ""))
        except AssertionError as exc:
            results.append((fn.__name__, 0, False, str(exc)))
    return results
