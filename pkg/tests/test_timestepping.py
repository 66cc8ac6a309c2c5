import numpy as np
import pytest

from epodg.budgets import SSP_MS3
from epodg.discretization import DGOperator, Mesh1D, cell_average
from epodg.limiter import CosConfig, LimiterToggles
from epodg.physics import (EulerParams, euler_admissible_set,
                           euler_entropy_pair, euler_model,
                           euler_primitive_to_conservative,
                           interval_admissible_set, scalar_model)
from epodg.quadrature import gauss_lobatto_rule
from epodg.timestepping import (HistoryRing, IntegratorConfig, Stepper,
                                compute_dt, simulate)

PAR = EulerParams()
RULE = gauss_lobatto_rule(3)


def euler_setup(n=32, bc="periodic"):
    model = euler_model(PAR)
    pair = euler_entropy_pair(PAR)
    aset = euler_admissible_set(PAR)
    mesh = Mesh1D(0.0, 1.0, n)
    op = DGOperator(model, mesh, RULE, bc=bc, k=2)
    x = mesh.node_positions(RULE)
    U0 = euler_primitive_to_conservative(
        1.0 + 0.2 * np.sin(2 * np.pi * x), 0.7 * np.ones_like(x),
        0.1 * np.ones_like(x), PAR)
    return model, pair, aset, mesh, op, U0


def advection_setup(n=24):
    model, pair, _ = scalar_model("advection", a=1.0)
    aset = interval_admissible_set(-0.1, 1.1)
    mesh = Mesh1D(0.0, 1.0, n)
    op = DGOperator(model, mesh, RULE, bc="periodic", k=2)
    x = mesh.node_positions(RULE)
    U0 = (0.5 + 0.4 * np.sin(2 * np.pi * x))[..., None]
    return model, pair, aset, mesh, op, U0


def test_compute_dt_examples():
    model, pair, aset, mesh, op, U0 = euler_setup(4)
    # alpha=1, dx=1, omega1=1/6, fraction 1, forward Euler -> dt = 1/6
    op1 = DGOperator(model, Mesh1D(0.0, 4.0, 4), RULE, bc="periodic", k=2)
    cfg = IntegratorConfig(scheme="forward-euler", cfl_fraction=1.0)
    dt = compute_dt(U0, op1, cfg, alpha=1.0)
    assert abs(dt - 1 / 6) <= 1e-15
    cfg = IntegratorConfig(scheme="ssp-ms3", cfl_fraction=1.0)
    dt = compute_dt(U0, op1, cfg, alpha=1.0)
    assert abs(dt - 1 / 18) <= 1e-15
    # final-step clipping
    dt = compute_dt(U0, op1, cfg, t=0.9, t_final=0.9 + 1e-4, alpha=1.0)
    assert abs(dt - 1e-4) <= 1e-15


def test_constant_field_unchanged():
    model, pair, aset, mesh, op, _ = euler_setup(16)
    Uc = np.tile(np.array([1.0, 0.0, 2.5]), (16, 3, 1))
    for scheme in ("forward-euler", "ssprk33", "ssp-ms3"):
        cfg = IntegratorConfig(scheme=scheme, cfl_fraction=0.4)
        res = simulate(op, [pair], aset, cfg, Uc, 0.0, 0.05)
        assert np.abs(res.nodal - Uc).max() <= 1e-14


def test_smooth_advection_po_modules_inactive():
    # geometric and oscillation modules leave resolved smooth data untouched
    model, pair, aset, mesh, op, U0 = advection_setup()
    cfg_po = IntegratorConfig(scheme="ssprk33", cfl_fraction=0.4,
                              toggles=LimiterToggles(True, False, True))
    cfg_off = IntegratorConfig(scheme="ssprk33", cfl_fraction=0.4,
                               toggles=LimiterToggles(False, False, False))
    r_po = simulate(op, [pair], aset, cfg_po, U0, 0.0, 0.1)
    r_off = simulate(op, [pair], aset, cfg_off, U0, 0.0, 0.1)
    assert np.abs(r_po.nodal - r_off.nodal).max() <= 1e-12
    assert min(r.theta_p_min for r in r_po.records) == 1.0
    assert min(r.theta_o_min for r in r_po.records) == 1.0


def test_smooth_euler_full_epo_nearly_inactive():
    # at the accuracy configuration the full pipeline leaves only the
    # certified entropy correction of the time discretization (sub-1e-8)
    model, pair, aset, mesh, op, U0 = euler_setup(64)
    cfg_on = IntegratorConfig(scheme="ssp-ms3", cfl_fraction=0.02)
    cfg_off = IntegratorConfig(scheme="ssp-ms3", cfl_fraction=0.02,
                               toggles=LimiterToggles(False, False, False))
    r_on = simulate(op, [pair], aset, cfg_on, U0, 0.0, 0.02)
    r_off = simulate(op, [pair], aset, cfg_off, U0, 0.0, 0.02)
    assert np.abs(r_on.nodal - r_off.nodal).max() <= 5e-9
    assert min(r.theta_epo_min for r in r_on.records) >= 1.0 - 1e-6


def test_single_step_average_equality_limiter_on_off():
    # averages are flux-determined: one step with and without limiting gives
    # identical new cell averages from the same input state
    model, pair, aset, mesh, op, U0 = euler_setup(24)
    cfg_on = IntegratorConfig(scheme="forward-euler", cfl_fraction=0.4)
    cfg_off = IntegratorConfig(scheme="forward-euler", cfl_fraction=0.4,
                               toggles=LimiterToggles(False, False, False))
    stepper_on = Stepper(op, [pair], aset, cfg_on)
    stepper_off = Stepper(op, [pair], aset, cfg_off)
    rec = stepper_on.make_record(U0, 0.0)
    dt = compute_dt(U0, op, cfg_on, alpha=rec.alpha)
    out_on, _, _ = stepper_on.forward_euler_step(rec, dt)
    out_off, _, _ = stepper_off.forward_euler_step(rec, dt)
    a_on = cell_average(out_on, RULE)
    a_off = cell_average(out_off, RULE)
    assert np.abs(a_on - a_off).max() <= 1e-14 * max(1.0, np.abs(a_on).max())


def test_ms3_step_matches_direct_combination_formula():
    # with the limiter disabled, one multistep step equals the printed formula
    model, pair, aset, mesh, op, U0 = advection_setup()
    cfg = IntegratorConfig(scheme="ssp-ms3", cfl_fraction=0.3,
                           toggles=LimiterToggles(False, False, False))
    stepper = Stepper(op, [pair], aset, cfg)
    dt = compute_dt(U0, op, cfg)
    history, _ = stepper.startup(stepper.make_record(U0, 0.0), dt)
    out, _, _ = stepper.ms3_step(history, dt)
    Un = history.offset(0).nodal
    Um = history.offset(3).nodal
    direct = (16 / 27) * (Un + 3 * dt * op(Un, op.global_alpha(Un))) \
        + (11 / 27) * (Um + (12 / 11) * dt * op(Um, op.global_alpha(Um)))
    assert np.abs(out - direct).max() <= 1e-13 * max(1.0, np.abs(out).max())


def test_startup_bookkeeping():
    model, pair, aset, mesh, op, U0 = euler_setup(16)
    cfg = IntegratorConfig(scheme="ssp-ms3", cfl_fraction=0.3)
    stepper = Stepper(op, [pair], aset, cfg)
    dt = 1e-4
    history, radii = stepper.startup(stepper.make_record(U0, 0.5), dt)
    times = [lev.t for lev in history.levels]
    assert np.allclose(times, [0.5, 0.5 + dt, 0.5 + 2 * dt, 0.5 + 3 * dt])
    assert history.full()
    assert len(radii) == 3
    # constant data: four identical levels
    Uc = np.tile(np.array([1.0, 0.0, 2.5]), (16, 3, 1))
    history, _ = stepper.startup(stepper.make_record(Uc, 0.0), dt)
    for lev in history.levels[1:]:
        assert np.abs(lev.nodal - Uc).max() <= 1e-13


def test_insufficient_history_raises():
    from epodg.errors import InvariantViolation
    model, pair, aset, mesh, op, U0 = euler_setup(8)
    cfg = IntegratorConfig(scheme="ssp-ms3", cfl_fraction=0.3)
    stepper = Stepper(op, [pair], aset, cfg)
    ring = HistoryRing(depth=4)
    ring.push(stepper.make_record(U0, 0.0))
    with pytest.raises(InvariantViolation):
        stepper.ms3_step(ring, 1e-4)


@pytest.mark.parametrize("scheme", ["ssprk33", "ssp-ms3"])
def test_conservation_inheritance_periodic(scheme):
    model, pair, aset, mesh, op, U0 = euler_setup(32)
    cfg = IntegratorConfig(scheme=scheme, cfl_fraction=0.4)
    res = simulate(op, [pair], aset, cfg, U0, 0.0, 0.3)
    tot0 = (cell_average(U0, RULE) * mesh.dx).sum(axis=0)
    tot1 = (cell_average(res.nodal, RULE) * mesh.dx).sum(axis=0)
    assert np.abs(tot1 - tot0).max() <= 1e-11 * max(1.0, np.abs(tot0).max())


def test_certified_run_records():
    model, pair, aset, mesh, op, U0 = euler_setup(24)
    cfg = IntegratorConfig(scheme="ssp-ms3", cfl_fraction=0.3)
    res = simulate(op, [pair], aset, cfg, U0, 0.0, 0.1)
    assert res.t >= 0.1 - 1e-12
    for r in res.records:
        assert not r.violation
        for v in (r.theta_p_min, r.theta_pe_min, r.theta_o_min, r.theta_epo_min):
            assert 0.0 <= v <= 1.0
    # entropy series recorded each step
    assert len(res.records) == res.steps


def test_ssprk33_endpoint_o_stagewise_consistent():
    # endpoint-only O (default) and stagewise O both keep certificates
    model, pair, aset, mesh, op, U0 = euler_setup(16)
    for endpoint in (True, False):
        cfg = IntegratorConfig(scheme="ssprk33", cfl_fraction=0.4,
                               endpoint_o_only=endpoint)
        res = simulate(op, [pair], aset, cfg, U0, 0.0, 0.05)
        assert bool(np.all(aset.contains(res.nodal)))


def test_multi_pair_runs():
    from epodg.physics import euler_scaled_entropy_pair
    model, pair, aset, mesh, op, U0 = euler_setup(16)
    pairs = [pair, euler_scaled_entropy_pair(PAR)]
    cfg = IntegratorConfig(scheme="ssp-ms3", cfl_fraction=0.3)
    res = simulate(op, pairs, aset, cfg, U0, 0.0, 0.05)
    assert bool(np.all(aset.contains(res.nodal)))


def test_nan_detection():
    from epodg.errors import NumericalFailure
    model, pair, aset, mesh, op, U0 = euler_setup(8)
    bad = U0.copy()
    bad[3, 1, 2] = np.nan
    cfg = IntegratorConfig(scheme="forward-euler", cfl_fraction=0.3)
    with pytest.raises(NumericalFailure):
        simulate(op, [pair], aset, cfg, bad, 0.0, 0.01)
