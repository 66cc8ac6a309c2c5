import numpy as np
import pytest

from epodg import limiter as lim
from epodg.budgets import budget_slack
from epodg.errors import BudgetBelowAverageEntropy, WeakPositivityViolated
from epodg.physics import (EulerParams, euler_admissible_set,
                           euler_entropy_pair, euler_model,
                           euler_primitive_to_conservative,
                           interval_admissible_set, scalar_model)
from epodg.quadrature import gauss_lobatto_rule, gauss_rule

PAR = EulerParams()
RULE = gauss_lobatto_rule(3)
W = RULE.weights


def euler_cell(rng, spread=1.0):
    avg = euler_primitive_to_conservative(
        rng.uniform(0.5, 2.0), rng.uniform(-1, 1), rng.uniform(0.5, 2.0), PAR)
    dev = rng.normal(scale=spread, size=(3, 3))
    dev -= W @ dev
    return avg, avg + dev


# -- scaling ray -------------------------------------------------------------

def test_apply_scaling_examples():
    avg = np.array([0.0])
    nodal = np.array([[-1.0], [0.0], [1.0]])
    assert np.allclose(lim.apply_scaling(avg, nodal, 1.0), nodal)
    assert np.allclose(lim.apply_scaling(avg, nodal, 0.0), 0.0)
    half = lim.apply_scaling(avg, nodal, 0.5)
    assert np.allclose(half.ravel(), [-0.5, 0.0, 0.5])
    assert abs(float(W @ half)) <= 1e-16


def test_mean_preservation_tight():
    rng = np.random.default_rng(0)
    for _ in range(300):
        avg, nodal = euler_cell(rng, spread=rng.uniform(0.01, 2.0))
        theta = rng.uniform(0, 1)
        scaled = lim.apply_scaling(avg, nodal, theta)
        err = np.abs(W @ scaled - W @ nodal).max()
        assert err <= 1e-15 * max(1.0, np.abs(nodal).max())


def test_ray_composition_identity():
    rng = np.random.default_rng(1)
    avg, nodal = euler_cell(rng)
    lhs = lim.apply_scaling(avg, lim.apply_scaling(avg, nodal, 0.7), 0.3)
    rhs = lim.apply_scaling(avg, nodal, 0.7 * 0.3)
    assert np.abs(lhs - rhs).max() <= 1e-15 * max(1.0, np.abs(nodal).max())


# -- geometric radius ---------------------------------------------------------

def test_geometric_radius_interval_example():
    iset = interval_admissible_set(0.0, 1.0)
    avg = np.array([0.5])
    nodal = np.array([[-0.5], [0.5], [1.5]])
    assert abs(lim.geometric_radius(avg, nodal, iset) - 0.5) <= 1e-14
    inside = np.array([[0.2], [0.5], [0.8]])
    assert lim.geometric_radius(avg, inside, iset) == 1.0
    with pytest.raises(WeakPositivityViolated):
        lim.geometric_radius(np.array([2.0]), nodal, iset)


def test_geometric_radius_euler_vs_bisection_oracle():
    aset = euler_admissible_set(PAR)
    rng = np.random.default_rng(2)
    for _ in range(200):
        avg, nodal = euler_cell(rng, spread=rng.uniform(0.5, 4.0))
        theta = lim.geometric_radius(avg, nodal, aset)
        lo, hi = 0.0, 1.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            ok = bool(np.all(aset.contains(lim.apply_scaling(avg, nodal, mid))))
            lo, hi = (mid, hi) if ok else (lo, mid)
        assert abs(theta - lo) <= 1e-10
        scaled = lim.apply_scaling(avg, nodal, theta)
        assert bool(np.all(aset.contains(scaled)))


def test_geometric_field_matches_per_cell():
    aset = euler_admissible_set(PAR)
    rng = np.random.default_rng(3)
    avgs, nodals = [], []
    for _ in range(40):
        a, u = euler_cell(rng, spread=rng.uniform(0.5, 4.0))
        avgs.append(a)
        nodals.append(u)
    avgs = np.array(avgs)
    nodals = np.array(nodals)
    field = lim.geometric_radius_field(avgs, nodals, aset)
    for j in range(40):
        single = lim.geometric_radius(avgs[j], nodals[j], aset)
        assert abs(field[j] - single) <= 1e-10


# -- entropy profile and radii -------------------------------------------------

def test_entropy_profile_examples():
    pair = euler_entropy_pair(PAR)
    rng = np.random.default_rng(4)
    avg, nodal = euler_cell(rng, spread=0.1)
    psi0 = lim.entropy_profile(avg, nodal, 0.0, pair, W)
    assert abs(psi0 - float(pair.eta(avg))) <= 1e-14
    # monotonicity on admissible data
    assert lim.entropy_profile(avg, nodal, 0.3, pair, W) <= \
        lim.entropy_profile(avg, nodal, 0.7, pair, W) + 1e-13


def test_quadratic_profile_identity():
    # quadratic entropy: Psi(theta) = |avg|^2/2 + theta^2/2 * variance
    rng = np.random.default_rng(5)
    _, pair, _ = scalar_model("burgers", u_min=-9, u_max=9)
    avg = np.array([rng.uniform(-1, 1)])
    dev = rng.normal(size=(3, 1))
    dev -= W @ dev
    nodal = avg + dev
    var = float(np.einsum("lm,lm,l->", dev, dev, W))
    for theta in (0.2, 0.5, 0.9):
        psi = lim.entropy_profile(avg, nodal, theta, pair, W)
        assert abs(psi - (0.5 * avg[0] ** 2 + 0.5 * theta ** 2 * var)) <= 1e-14


def test_quadratic_entropy_radius_example():
    avg = np.array([0.0])
    nodal = np.array([[-1.0], [0.0], [1.0]])
    theta = lim.quadratic_entropy_radius(avg, nodal, W, 1.0 / 12.0)
    assert abs(float(theta) - np.sqrt(0.5)) <= 1e-14


def test_pe_radius_budget_inactive():
    pair = euler_entropy_pair(PAR)
    rng = np.random.default_rng(6)
    avg, nodal = euler_cell(rng, spread=0.05)
    big_B = float(pair.eta(nodal) @ W) + 1.0
    assert lim.positivity_first_entropy_radius(
        avg, nodal, big_B, pair, W, 1.0) == 1.0


def test_pe_radius_quadratic_matches_closed_form():
    _, pair, _ = scalar_model("burgers", u_min=-9, u_max=9)
    avg = np.array([0.0])
    nodal = np.array([[-1.0], [0.0], [1.0]])
    B = 1.0 / 12.0
    got = lim.positivity_first_entropy_radius(avg, nodal, B, pair, W, 1.0)
    # slack shifts the budget by 1e-12
    expect = float(lim.quadratic_entropy_radius(avg, nodal, W,
                                                B + float(budget_slack(np.asarray(B)))))
    assert abs(got - expect) <= 1e-14


def test_pe_equals_min_on_full_ray():
    # whole candidate ray admissible: theta_pe = min(theta_p, theta_e)
    pair = euler_entropy_pair(PAR)
    aset = euler_admissible_set(PAR)
    rng = np.random.default_rng(7)
    hits = 0
    for _ in range(200):
        avg, nodal = euler_cell(rng, spread=0.3)
        if not bool(np.all(aset.contains(nodal))):
            continue
        theta_p = lim.geometric_radius(avg, nodal, aset)
        assert theta_p == 1.0
        B = float(pair.eta(avg)) + rng.uniform(0.0, 0.05)
        B_eff = B + float(budget_slack(np.asarray(B)))
        theta_pe = lim.positivity_first_entropy_radius(avg, nodal, B, pair, W,
                                                       theta_p)
        # independent full-ray radius by bisection on the direct profile
        lo, hi = 0.0, 1.0
        if lim.entropy_profile(avg, nodal, 1.0, pair, W) <= B_eff:
            lo = 1.0
        else:
            hits += 1
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                ok = lim.entropy_profile(avg, nodal, mid, pair, W) <= B_eff
                lo, hi = (mid, hi) if ok else (lo, mid)
        assert abs(theta_pe - min(theta_p, lo)) <= 1e-10
    assert hits > 20


def test_pe_budget_below_average_raises():
    pair = euler_entropy_pair(PAR)
    rng = np.random.default_rng(8)
    avg, nodal = euler_cell(rng)
    bad_B = float(pair.eta(avg)) - 1.0
    with pytest.raises(BudgetBelowAverageEntropy):
        lim.positivity_first_entropy_radius(avg, nodal, bad_B, pair, W, 1.0)


# -- oscillation module --------------------------------------------------------

def test_cos_distance_scalar_quadratic_exact():
    # with g = u^2/2 the Jensen distance is the plain L2 distance
    _, pair, _ = scalar_model("burgers", u_min=-9, u_max=9)
    vol = gauss_rule(4)
    rng = np.random.default_rng(9)
    a = rng.normal(size=(4, 1))
    b = rng.normal(size=(4, 1))
    h = 0.37
    d2 = lim.cos_distance(a, b, vol.weights, h, pair, mode="jensen")
    expect = h * float(((a - b)[:, 0] ** 2) @ vol.weights)
    assert abs(d2 - expect) <= 1e-14
    frozen = lim.cos_distance(a, b, vol.weights, h, pair,
                              mode="frozen-hessian", anchor=np.array([0.3]))
    assert abs(frozen - expect) <= 1e-14
    assert lim.cos_distance(a, a, vol.weights, h, pair, mode="jensen") == 0.0


def test_local_cos_marker():
    model, _, _ = scalar_model("burgers", u_min=-9, u_max=9)
    assert lim.local_cos_marker(np.array([2.0]), np.array([2.0]), model, 0.1) == 0.0
    assert lim.local_cos_marker(np.array([2.0]), np.array([0.0]), model, 0.1) == 1.0
    assert lim.local_cos_marker(np.array([0.0]), np.array([2.0]), model, 0.1) == 0.0


def test_cos_coefficient_examples():
    model, pair, _ = scalar_model("burgers", u_min=-9, u_max=9)
    cfg = lim.CosConfig(mode="global", distance="jensen")
    rng = np.random.default_rng(10)
    # one global linear profile sampled cellwise: candidates coincide as
    # functions, so the discrepancy and the damping vanish identically
    nodal_j = (1.0 + 0.25 * RULE.nodes)[:, None]
    nodal_l = (0.5 + 0.25 * RULE.nodes)[:, None]
    nodal_r = (1.5 + 0.25 * RULE.nodes)[:, None]
    avgs = (np.array([0.5]), np.array([1.0]), np.array([1.5]))
    one = lim.cos_coefficient(nodal_j, nodal_l, nodal_r, avgs, model,
                              0.1, 0.5, RULE, cfg, pair)
    assert abs(one - 1.0) <= 1e-12
    zero_dt = lim.cos_coefficient(nodal_j, rng.normal(size=(3, 1)),
                                  rng.normal(size=(3, 1)), avgs,
                                  model, 0.0, 0.5, RULE, cfg, pair)
    assert zero_dt == 1.0


def test_cos_lambda_arithmetic():
    # alpha=2, dt=0.1, h=0.5, sigma=1 -> exp(-0.4)
    assert abs(np.exp(-2.0 * 0.1 * 1.0 / 0.5) - 0.6703200460356393) <= 1e-15


def test_gauge_oscillation_radius():
    rng = np.random.default_rng(11)
    avg = np.array([0.0])
    dev = rng.normal(size=(3, 1))
    dev -= W @ dev
    nodal = avg + dev

    def omega(d):
        return float(np.sqrt(np.sum(d ** 2)))

    val = omega(nodal - avg)
    inactive = lim.OscillationSet("gauge", omega=omega, gamma=2.0 * val)
    assert lim.gauge_oscillation_radius(avg, nodal, W, inactive) == 1.0
    active = lim.OscillationSet("gauge", omega=omega, gamma=0.5 * val)
    assert abs(lim.gauge_oscillation_radius(avg, nodal, W, active) - 0.5) <= 1e-14
    seg = lim.OscillationSet("canonical-segment", lam_cos=0.77)
    assert lim.gauge_oscillation_radius(avg, nodal, W, seg) == 0.77


def test_entropy_deviation_radius_closed_form():
    _, pair, _ = scalar_model("burgers", u_min=-9, u_max=9)
    rng = np.random.default_rng(12)
    avg = np.array([0.4])
    dev = rng.normal(size=(3, 1))
    dev -= W @ dev
    nodal = avg + dev
    full = float(lim.entropy_deviation_gauge(avg, nodal, W, pair))
    gamma = 0.3 * full
    oset = lim.OscillationSet("entropy-deviation", gamma=gamma, pair=pair)
    theta = lim.gauge_oscillation_radius(avg, nodal, W, oset)
    assert abs(theta - np.sqrt(gamma / full)) <= 1e-10


def test_epo_radius_min_formula():
    br = lim.epo_radius(1.0, [1.0], 1.0)
    assert br.theta_epo == 1.0
    br = lim.epo_radius(0.8, [0.3, 0.6], 0.9)
    assert br.theta_epo == 0.3
    assert br.theta_pe == (0.3, 0.6)
    br = lim.epo_radius(1.0, [0.9], 0.4)
    assert br.theta_epo == 0.4


def test_limit_cell_pipeline_and_degenerate_ray():
    pair = euler_entropy_pair(PAR)
    aset = euler_admissible_set(PAR)
    rng = np.random.default_rng(13)
    avg, nodal = euler_cell(rng, spread=3.0)
    B = float(pair.eta(avg)) + 0.01
    limited, br = lim.limit_cell(avg, nodal, [B], [pair], aset, W)
    assert bool(np.all(aset.contains(limited)))
    B_eff = B + float(budget_slack(np.asarray(B)))
    assert float(pair.eta(limited) @ W) <= B_eff
    assert np.abs(W @ limited - avg).max() <= 1e-14 * max(1.0, np.abs(nodal).max())
    # degenerate ray: all nodes equal the average
    const = np.repeat(avg[None, :], 3, axis=0)
    limited, br = lim.limit_cell(avg, const, [B], [pair], aset, W)
    assert br.theta_p == 1.0 and br.theta_epo == 1.0
    assert np.allclose(limited, const)


def test_cos_config_validation():
    with pytest.raises(ValueError):
        lim.CosConfig(delta=1.5)
    with pytest.raises(ValueError):
        lim.CosConfig(mode="sometimes")
    with pytest.raises(ValueError):
        lim.CosConfig(distance="euclidean")
    cfg = lim.CosConfig(c_k={2: 0.5})
    assert cfg.c_for(2) == 0.5 and cfg.c_for(1) == 1.0
