"""Time integration drivers: forward Euler, the stagewise SSPRK33 realization
(positivity/entropy limited at every stage, oscillation damping at the step
end by default), and the third-order SSP multistep realization with a single
end-of-step correction.

The multistep scheme runs at a fixed dt per segment; the segment is restarted
through the SSPRK33 startup whenever the stored wave-speed bounds would
violate the certified CFL condition.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import budgets as bg
from .errors import (BudgetBelowAverageEntropy, CflViolation,
                     InvariantViolation, NumericalFailure,
                     WeakPositivityViolated)
from .limiter import (CosConfig, LimiterToggles, _entropy_refine,
                      _geometric_refine, apply_scaling, cos_lambda_field,
                      quadratic_entropy_radius)

SCHEMES = ("forward-euler", "ssprk33", "ssp-ms3")
_SCHEME_CONSTANT = {"forward-euler": 1.0, "ssprk33": bg.SSPRK33.c_ssp,
                    "ssp-ms3": bg.SSP_MS3.c_ms}


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: str = "ssp-ms3"
    cfl_fraction: float = 0.8
    endpoint_o_only: bool = True
    toggles: LimiterToggles = field(default_factory=LimiterToggles)
    cos: CosConfig = field(default_factory=CosConfig)
    alpha_factor: float = 1.0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not 0.0 < self.cfl_fraction <= 1.0:
            raise ValueError("cfl_fraction must lie in (0,1]")


@dataclass(frozen=True)
class StepRecord:
    t: float
    dt: float
    alpha: float
    theta_p_min: float
    theta_pe_min: float
    theta_o_min: float
    theta_epo_min: float
    entropy: float            # global discrete entropy of the new state
    violation: bool = False


@dataclass
class LevelRecord:
    """One stored time level: state plus everything the budgets reuse."""
    t: float
    nodal: np.ndarray
    alpha: float
    ddt: np.ndarray           # spatial operator at this level
    entropies: list           # per pair: quadrature entropy per cell, (n,)
    dq: list                  # per pair: entropy-flux difference per cell, (n,)


class HistoryRing:
    """The last `depth` time levels, newest last."""

    def __init__(self, depth=4):
        self.depth = depth
        self.levels = []

    def push(self, rec):
        self.levels.append(rec)
        if len(self.levels) > self.depth:
            self.levels.pop(0)

    def full(self):
        return len(self.levels) == self.depth

    def newest(self):
        return self.levels[-1]

    def offset(self, r):
        """Level n-r, where n is the newest stored level."""
        return self.levels[-1 - r]


def compute_dt(nodal, op, config, t=0.0, t_final=np.inf, alpha=None):
    """dt = cfl_fraction * C_scheme * omega1 * dx / alpha, clipped to t_final-t."""
    omega1 = op.rule.weights[0]
    if alpha is None:
        alpha = op.global_alpha(nodal, config.alpha_factor)
    if alpha <= 0.0:
        return t_final - t
    dt = config.cfl_fraction * _SCHEME_CONSTANT[config.scheme] \
        * omega1 * op.mesh.dx / alpha
    return min(dt, t_final - t)


class Stepper:
    """Carries the spatial operator, entropy pairs, and limiter settings."""

    def __init__(self, op, pairs, aset, config, sensor=None):
        self.op = op
        self.pairs = list(pairs)
        self.aset = aset
        self.config = config
        self.sensor = sensor if sensor is not None else self.pairs[0]
        self.weights = op.rule.weights
        self.omega1 = float(op.rule.weights[0])

    # -- shared pieces ---------------------------------------------------

    def make_record(self, nodal, t, entropies=None):
        """Evaluate everything the budgets reuse for this level in one pass.

        The nodal flux array is computed once and reused for both the
        collocated volume term and the interface traces (trace nodes are
        nodal); only the two ghost traces need extra flux evaluations.
        """
        op = self.op
        alpha = op.global_alpha(nodal, self.config.alpha_factor)
        F = op.model.flux(nodal)
        gl, gr = op.ghosts(nodal)
        UL = np.concatenate([gl[None, -1], nodal[:, -1]], axis=0)
        UR = np.concatenate([nodal[:, 0], gr[None, 0]], axis=0)
        fg = op.model.flux(np.stack([gl[-1], gr[0]]))
        fL = np.concatenate([fg[:1], F[:, -1]], axis=0)
        fR = np.concatenate([F[:, 0], fg[1:]], axis=0)
        fh = 0.5 * (fL + fR) - 0.5 * alpha * (UR - UL)
        ddt = op.assemble(nodal, fh, nodal_fluxes=F)
        if entropies is None:
            # NaN-safe: uncertified (limiter-off) runs may carry off-domain
            # states; certified states evaluate identically either way
            entropies = [pair.eta_nan(nodal) @ self.weights
                         for pair in self.pairs]
        stacked = np.concatenate([UL, UR], axis=0)
        ni = len(UL)
        dq = []
        for pair in self.pairs:
            eta_s, q_s = pair.eta_and_q(stacked)
            qh = 0.5 * (q_s[:ni] + q_s[ni:]) \
                - 0.5 * alpha * (eta_s[ni:] - eta_s[:ni])
            dq.append(qh[1:] - qh[:-1])
        return LevelRecord(t, nodal, alpha, ddt, entropies, dq)

    def _require_cfl(self, dt, alpha, gamma=1.0):
        lam = dt / self.op.mesh.dx
        if gamma * lam * alpha > self.omega1:
            raise CflViolation(
                f"gamma*lam*alpha={gamma * lam * alpha:.6e} exceeds "
                f"omega1={self.omega1:.6e}")

    def _limit(self, candidate, budget_list, dt, apply_o, step=None):
        """EPO scaling of a candidate field with fused verification.

        Fast paths: cells whose candidate nodes are admissible and whose
        candidate entropy already sits below the budget keep theta = 1 and
        are certified without rescaling; only cells with theta < 1 are
        scaled and re-verified explicitly. Returns
        (limited, (theta_p, theta_pe, theta_o, theta), entropies of limited).
        """
        cfg = self.config
        tg = cfg.toggles
        nodal = candidate
        w = self.weights
        avgs = np.matmul(w, nodal)
        n = len(nodal)

        if tg.p or tg.e:
            vals_avg = self.aset.values(avgs)
            avg_ok = (vals_avg >= 0.0).all(axis=-1)
            if not avg_ok.all():
                cell = int(np.argmin(avg_ok))
                raise WeakPositivityViolated(
                    "candidate cell average is not admissible",
                    cell=cell, step=step)
            vals_nodes = self.aset.values(nodal)
            nodes_ok = (vals_nodes >= 0.0).all(axis=(-2, -1))
            theta_p = np.ones(n)
            if not nodes_ok.all():
                idx = np.nonzero(~nodes_ok)[0]
                theta_p[idx] = _geometric_refine(avgs[idx], nodal[idx], self.aset)
        else:
            theta_p = np.ones(n)

        ent_cand = []           # per pair, entropy of the candidate at theta_p
        if tg.e:
            theta_pe = np.empty((len(self.pairs), n))
            for p, (pair, B) in enumerate(zip(self.pairs, budget_list)):
                B_eff = B + bg.budget_slack(B)
                eta_avg = pair.eta(avgs)
                bad = eta_avg > B_eff
                if bad.any():
                    cell = int(np.argmax(eta_avg - B_eff))
                    raise BudgetBelowAverageEntropy(
                        "average entropy exceeds its weak budget",
                        cell=cell, step=step)
                if pair.quadratic:
                    theta_e = quadratic_entropy_radius(avgs, nodal, w, B_eff)
                    theta_pe[p] = np.minimum(theta_p, theta_e)
                    ent_cand.append(None)
                    continue
                # candidate nodes may sit outside the entropy domain; they are
                # NaN here and get overwritten by the truncated-ray values
                ent = pair.eta_nan(nodal) @ w
                trunc_idx = np.nonzero(theta_p < 1.0)[0]
                if len(trunc_idx):
                    ent = ent.copy()
                    ent[trunc_idx] = pair.eta(apply_scaling(
                        avgs[trunc_idx], nodal[trunc_idx],
                        theta_p[trunc_idx])) @ w
                ent_cand.append(ent)
                over = np.nonzero(ent > B_eff)[0]
                theta_pe[p] = theta_p
                if len(over):
                    truncated = apply_scaling(avgs[over], nodal[over],
                                              theta_p[over])
                    vt = _entropy_refine(avgs[over], truncated, B_eff[over],
                                         pair, w, ent_lo=eta_avg[over],
                                         ent_hi=ent[over])
                    theta_pe[p, over] = theta_p[over] * vt
        else:
            theta_pe = theta_p[None, :]

        if tg.o and apply_o:
            theta_o = cos_lambda_field(self.op, nodal, avgs, dt, cfg.cos,
                                       self.sensor)
        else:
            theta_o = np.ones(n)

        theta = np.minimum(theta_pe.min(axis=0), theta_o)
        scaled_idx = np.nonzero(theta < 1.0)[0]
        if len(scaled_idx) == 0:
            limited = nodal
        else:
            limited = nodal.copy()
            limited[scaled_idx] = apply_scaling(
                avgs[scaled_idx], nodal[scaled_idx], theta[scaled_idx])
            # the searches certify their own arithmetic; repair the last few
            # ulps so the verifier's evaluation of the scaled state passes too
            theta = self._repair(avgs, nodal, limited, theta, scaled_idx,
                                 budget_list, tg)
        ent_limited = self._verify_scaled(avgs, nodal, limited, scaled_idx,
                                          budget_list, ent_cand, tg, step)
        return limited, (theta_p, theta_pe, theta_o, theta), ent_limited

    def _repair(self, avgs, nodal, limited, theta, scaled_idx, budget_list, tg):
        """Shrink scaled radii by escalating nudges until the verifier agrees."""
        w = self.weights
        shrink = 1e-13
        for _ in range(40):
            sub = limited[scaled_idx]
            bad = np.zeros(len(scaled_idx), dtype=bool)
            if tg.p or tg.e:
                bad |= ~(self.aset.values(sub) >= 0.0).all(axis=(-2, -1))
            if tg.e:
                for pair, B in zip(self.pairs, budget_list):
                    Bs = B[scaled_idx] + bg.budget_slack(B[scaled_idx])
                    bad |= pair.eta_nan(sub) @ w > Bs
            if not bad.any():
                break
            cells = scaled_idx[bad]
            theta[cells] = np.maximum(theta[cells] - shrink, 0.0)
            limited[cells] = apply_scaling(avgs[cells], nodal[cells],
                                           theta[cells])
            shrink *= 4.0
        return theta

    def _verify_scaled(self, avgs, candidate, limited, scaled_idx, budget_list,
                       ent_cand, tg, step):
        """Certified-run assertions; unscaled cells are covered by fast paths."""
        w = self.weights
        ent_limited = []
        if len(scaled_idx):
            sub = limited[scaled_idx]
            new_avgs = np.matmul(w, sub)
            scale = np.maximum(1.0, np.abs(sub).max(axis=(1, 2)))
            err = np.abs(new_avgs - avgs[scaled_idx]).max(axis=-1)
            if np.any(err > 1e-15 * scale):
                cell = int(scaled_idx[np.argmax(err / scale)])
                raise InvariantViolation(
                    "limiter failed to preserve the cell mean",
                    cell=cell, step=step)
            if tg.p or tg.e:
                ok = (self.aset.values(sub) >= 0.0).all(axis=(-2, -1))
                if not ok.all():
                    cell = int(scaled_idx[np.argmin(ok)])
                    raise InvariantViolation(
                        "limited nodal state left the admissible set",
                        cell=cell, step=step)
        for p, pair in enumerate(self.pairs):
            if not tg.e:
                ent_limited.append(None)
                continue
            base = ent_cand[p] if p < len(ent_cand) else None
            if base is None:
                ent = pair.eta(limited) @ w
            else:
                ent = base
                if len(scaled_idx):
                    ent = ent.copy()
                    ent[scaled_idx] = pair.eta(limited[scaled_idx]) @ w
            B = budget_list[p]
            bad = ent > B + bg.budget_slack(B)
            if bad.any():
                cell = int(np.argmax(ent - B))
                raise InvariantViolation(
                    f"quadrature entropy exceeds the {pair.name} budget",
                    cell=cell, step=step)
            ent_limited.append(ent)
        if not tg.e:
            ent_limited = [None] * len(self.pairs)
        return ent_limited

    # -- schemes -----------------------------------------------------------

    def forward_euler_step(self, rec, dt, step=None):
        lam = dt / self.op.mesh.dx
        self._require_cfl(dt, rec.alpha)
        candidate = rec.nodal + dt * rec.ddt
        _check_finite(candidate)
        budget_list = [E - lam * dq for E, dq in zip(rec.entropies, rec.dq)]
        return self._limit(candidate, budget_list, dt, True, step)

    def ssprk33_step(self, rec0, dt, step=None):
        """Stagewise positivity/entropy limiting with endpoint oscillation pass."""
        lam = dt / self.op.mesh.dx
        coeffs = bg.SSPRK33
        recs = [rec0]
        limited = radii = ents = None
        for i in (1, 2, 3):
            arow, grow = coeffs.alphas[i - 1], coeffs.gammas[i - 1]
            candidate = None
            for k in range(i):
                if arow[k] == 0.0:
                    continue
                if grow[k] > 0.0:
                    self._require_cfl(dt, recs[k].alpha, grow[k])
                term = arow[k] * (recs[k].nodal + grow[k] * dt * recs[k].ddt)
                candidate = term if candidate is None else candidate + term
            _check_finite(candidate)
            budget_list = [
                bg.ssprk_stage_budget(i, [r.entropies[p] for r in recs],
                                      [lam * r.dq[p] for r in recs], coeffs)
                for p in range(len(self.pairs))]
            apply_o = (i == 3) or not self.config.endpoint_o_only
            limited, radii, ents = self._limit(candidate, budget_list, dt,
                                               apply_o, step)
            if i < 3:
                recs.append(self.make_record(
                    limited, rec0.t + dt, entropies=_or_none(ents)))
        return limited, radii, ents

    def ms3_step(self, history, dt, step=None):
        """One-shot end-of-step correction for the SSP multistep combination."""
        coeffs = bg.SSP_MS3
        if len(history.levels) < coeffs.depth:
            raise InvariantViolation("insufficient multistep history")
        lam = dt / self.op.mesh.dx
        candidate = None
        ents, dqs = {}, {}
        for r, a, g in zip(coeffs.levels, coeffs.alphas, coeffs.gammas):
            rec = history.offset(r)
            self._require_cfl(dt, rec.alpha, g)
            term = a * (rec.nodal + g * dt * rec.ddt)
            candidate = term if candidate is None else candidate + term
            ents[r] = rec.entropies
            dqs[r] = rec.dq
        _check_finite(candidate)
        budget_list = [
            bg.multistep_budget({r: ents[r][p] for r in coeffs.levels},
                                {r: lam * dqs[r][p] for r in coeffs.levels},
                                coeffs)
            for p in range(len(self.pairs))]
        return self._limit(candidate, budget_list, dt, True, step)

    def startup(self, rec0, dt, n_steps=3, step=None):
        """Populate the multistep history with stagewise SSPRK33-EPO steps."""
        history = HistoryRing(depth=n_steps + 1)
        history.push(rec0)
        rec = rec0
        radii_list = []
        for j in range(n_steps):
            limited, radii, ents = self.ssprk33_step(rec, dt, step=step)
            rec = self.make_record(limited, rec0.t + (j + 1) * dt,
                                   entropies=_or_none(ents))
            history.push(rec)
            radii_list.append(radii)
        return history, radii_list


def _or_none(entropies):
    """Stage entropies are reusable only when every pair produced them."""
    if entropies is None or any(e is None for e in entropies):
        return None
    return entropies


def _check_finite(nodal):
    if not np.all(np.isfinite(nodal)):
        raise NumericalFailure("NaN or Inf in the solution")


def _global_entropy(pair, nodal, op, ents=None):
    """dx-weighted nodal entropy sum, reusing per-cell values when available."""
    if ents is not None and ents[0] is not None:
        return float(op.mesh.dx * np.sum(ents[0]))
    return float(op.mesh.dx * np.sum(pair.eta_nan(nodal) @ op.rule.weights))


def _radii_record(t, dt, alpha, radii, entropy):
    theta_p, theta_pe, theta_o, theta = radii
    return StepRecord(t, dt, alpha, float(theta_p.min()), float(theta_pe.min()),
                      float(theta_o.min()), float(theta.min()), entropy)


@dataclass
class SimResult:
    nodal: np.ndarray
    t: float
    records: list
    alphas: list
    steps: int
    restarts: int = 0


def simulate(op, pairs, aset, config, nodal0, t0, t_final, sensor=None,
             collect_records=True, max_step_retries=40):
    """Advance the field from t0 to t_final and collect per-step diagnostics.

    Forward Euler and SSPRK33 recompute dt each step and halve it on a
    certified-inequality failure (bounded retries). The multistep scheme runs
    fixed-dt segments sized to divide the remaining time evenly; a CFL breach
    triggers a conservative restart through startup.
    """
    stepper = Stepper(op, pairs, aset, config, sensor)
    dx = op.mesh.dx
    _check_finite(nodal0)
    records = []
    alphas = []

    def emit(rec_tuple):
        if collect_records:
            records.append(rec_tuple)

    if config.scheme in ("forward-euler", "ssprk33"):
        nodal, t, step = np.asarray(nodal0, dtype=float), t0, 0
        while t < t_final - 1e-14 * max(1.0, abs(t_final)):
            rec = stepper.make_record(nodal, t)
            dt = compute_dt(nodal, op, config, t, t_final, alpha=rec.alpha)
            for attempt in range(max_step_retries):
                try:
                    if config.scheme == "forward-euler":
                        nodal_new, radii, ents = stepper.forward_euler_step(
                            rec, dt, step)
                    else:
                        nodal_new, radii, ents = stepper.ssprk33_step(
                            rec, dt, step)
                    break
                except (CflViolation, WeakPositivityViolated,
                        BudgetBelowAverageEntropy):
                    if attempt == max_step_retries - 1:
                        raise
                    dt *= 0.5
            t += dt
            step += 1
            nodal = nodal_new
            alphas.append(rec.alpha)
            if collect_records:
                emit(_radii_record(t, dt, rec.alpha, radii,
                                   _global_entropy(pairs[0], nodal, op, ents)))
        return SimResult(nodal, t, records, alphas, step)

    # ssp-ms3: fixed-dt segments with conservative restarts
    nodal, t, step, restarts = np.asarray(nodal0, dtype=float), t0, 0, 0
    history = None
    local_fraction = config.cfl_fraction
    t_at_restart = None
    slow_steps = 0
    while t < t_final - 1e-14 * max(1.0, abs(t_final)):
        if history is None:
            rec = stepper.make_record(nodal, t)
            seg_cfg = replace(config, cfl_fraction=local_fraction)
            dt_raw = compute_dt(nodal, op, seg_cfg, t, t_final, alpha=rec.alpha)
            remaining = t_final - t
            n_steps = max(int(np.ceil(remaining / dt_raw)), 1)
            dt = remaining / n_steps
            if n_steps < 5:
                # too few steps left for a useful history: finish with SSPRK33
                rk_cfg = replace(config, scheme="ssprk33",
                                 cfl_fraction=local_fraction)
                tail = simulate(op, pairs, aset, rk_cfg, nodal, t, t_final,
                                sensor, collect_records)
                records.extend(tail.records)
                alphas.extend(tail.alphas)
                return SimResult(tail.nodal, tail.t, records, alphas,
                                 step + tail.steps, restarts)
            try:
                history, startup_radii = stepper.startup(rec, dt, step=step)
            except (CflViolation, WeakPositivityViolated,
                    BudgetBelowAverageEntropy):
                local_fraction *= 0.5
                if local_fraction < 1e-8:
                    raise
                continue
            for j in range(3):
                lev = history.levels[j + 1]
                t = lev.t
                step += 1
                alphas.append(history.levels[j].alpha)
                if collect_records:
                    emit(_radii_record(t, dt, history.levels[j].alpha,
                                       startup_radii[j],
                                       _global_entropy(pairs[0], lev.nodal, op)))
            nodal = history.newest().nodal
            continue
        try:
            nodal_new, radii, ents = stepper.ms3_step(history, dt, step)
        except (CflViolation, WeakPositivityViolated, BudgetBelowAverageEntropy):
            restarts += 1
            if t_at_restart is not None and t <= t_at_restart:
                local_fraction *= 0.5
                if local_fraction < 1e-8:
                    raise
            t_at_restart = t
            history = None
            continue
        t = history.newest().t + dt
        step += 1
        nodal = nodal_new
        rec_alpha = history.newest().alpha
        alphas.append(rec_alpha)
        new_rec = stepper.make_record(nodal, t, entropies=_or_none(ents))
        history.push(new_rec)
        if collect_records:
            emit(_radii_record(t, dt, rec_alpha, radii,
                               _global_entropy(pairs[0], nodal, op, ents)))
        # recover dt after transient wave-speed spikes: replan the segment
        # once the current bound would allow a persistently larger step
        dt_possible = compute_dt(nodal, op, replace(config, cfl_fraction=local_fraction),
                                 t, t_final, alpha=new_rec.alpha)
        if dt < 0.45 * dt_possible:
            slow_steps += 1
            if slow_steps >= 3:
                history = None
                slow_steps = 0
        else:
            slow_steps = 0
    return SimResult(nodal, t, records, alphas, step, restarts)
