"""Weak cell-average budgets: Lax-Friedrichs fluxes, numerical entropy fluxes,
the two-point Riemann average, and the forward-Euler / SSP stage / SSP
multistep entropy budgets they induce.

A budget B certifies eta(avg_candidate) <= B for the matching candidate
average under the CFL condition lam*alpha <= omega_1. Budgets are consumed
with a small roundoff slack, see `budget_slack`.
"""

from dataclasses import dataclass

import numpy as np

from .errors import CflViolation


def lf_flux(UL, UR, alpha, model):
    """Global Lax-Friedrichs flux (F(UL)+F(UR))/2 - (alpha/2)(UR-UL)."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    UL = np.asarray(UL, dtype=float)
    UR = np.asarray(UR, dtype=float)
    return 0.5 * (model.flux(UL) + model.flux(UR)) - 0.5 * alpha * (UR - UL)


def numerical_entropy_flux(UL, UR, alpha, pair):
    """Entropy flux (Q(UL)+Q(UR))/2 - (alpha/2)(eta(UR)-eta(UL)) paired with lf_flux."""
    UL = np.asarray(UL, dtype=float)
    UR = np.asarray(UR, dtype=float)
    return 0.5 * (pair.q_flux(UL) + pair.q_flux(UR)) \
        - 0.5 * alpha * (pair.eta(UR) - pair.eta(UL))


def h_alpha(UL, UR, alpha, model):
    """Two-point Riemann average (UL+UR)/2 - (F(UR)-F(UL))/(2 alpha).

    Lands in the admissible set and satisfies the two-point entropy
    inequality whenever alpha dominates the Riemann wave speeds.
    """
    UL = np.asarray(UL, dtype=float)
    UR = np.asarray(UR, dtype=float)
    return 0.5 * (UL + UR) - (model.flux(UR) - model.flux(UL)) / (2.0 * alpha)


def budget_slack(B):
    """Roundoff slack absorbed when a budget is consumed: 1e-12*max(1,|B|)."""
    return 1e-12 * np.maximum(1.0, np.abs(B))


@dataclass(frozen=True)
class CflReport:
    lam: float          # dt/dx
    alpha: float
    omega1: float
    safety_fraction: float
    satisfied: bool
    margin: float       # omega1*safety - lam*alpha


def cfl_check(dt, dx, alpha, omega1, safety_fraction=1.0):
    if min(dt, dx, omega1) <= 0 or alpha < 0 or not 0 < safety_fraction <= 1:
        raise ValueError("cfl_check requires positive dt, dx, omega1 and safety in (0,1]")
    lam = dt / dx
    margin = omega1 * safety_fraction - lam * alpha
    return CflReport(lam, alpha, omega1, safety_fraction, margin >= 0.0, margin)


def weak_budget_forward_euler(node_eta, weights, qhat_left, qhat_right, lam,
                              cfl_report=None):
    """Forward-Euler budget B = sum_nu w_nu eta(U_nu) - lam*(Qhat_R - Qhat_L).

    `node_eta` carries the nodal entropies on its last axis; the interface
    entropy fluxes are single-valued (shared with the neighbor cells).
    """
    if cfl_report is not None and not cfl_report.satisfied:
        raise CflViolation(
            f"budget not certified: lam*alpha={cfl_report.lam * cfl_report.alpha:.3e} "
            f"exceeds omega1*safety={cfl_report.omega1 * cfl_report.safety_fraction:.3e}")
    node_eta = np.asarray(node_eta, dtype=float)
    return node_eta @ np.asarray(weights, dtype=float) \
        - lam * (np.asarray(qhat_right) - np.asarray(qhat_left))


# ---------------------------------------------------------------------------
# SSP time discretizations (Shu-Osher form)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SspCoefficients:
    """alpha_ik (convex weights, rows sum to 1) and gamma_ik (substep sizes)."""
    alphas: tuple
    gammas: tuple

    def __post_init__(self):
        for i, row in enumerate(self.alphas):
            if abs(sum(row) - 1.0) > 1e-14:
                raise ValueError(f"stage {i + 1} alpha row does not sum to 1")

    @property
    def stages(self):
        return len(self.alphas)

    def beta(self, i, k):
        return self.alphas[i][k] * self.gammas[i][k]

    @property
    def c_ssp(self):
        gs = [g for row in self.gammas for g in row if g > 0]
        return 1.0 / max(gs)


SSPRK33 = SspCoefficients(
    alphas=((1.0,), (0.75, 0.25), (1.0 / 3.0, 0.0, 2.0 / 3.0)),
    gammas=((1.0,), (0.0, 1.0), (0.0, 0.0, 1.0)),
)


@dataclass(frozen=True)
class MultistepCoefficients:
    """End-of-step SSP multistep combination over stored levels n-r."""
    levels: tuple   # offsets r
    alphas: tuple
    gammas: tuple

    @property
    def c_ms(self):
        return 1.0 / max(g for g in self.gammas if g > 0)

    @property
    def depth(self):
        return max(self.levels) + 1


SSP_MS3 = MultistepCoefficients(
    levels=(0, 3),
    alphas=(16.0 / 27.0, 11.0 / 27.0),
    gammas=(3.0, 12.0 / 11.0),
)


def ssprk_stage_budget(stage, stage_entropies, stage_lam_dq, coeffs=SSPRK33,
                       cfl_report=None):
    """Stagewise budget B^(i) = sum_k alpha_ik (E(U^(k)) - gamma_ik*lam*dQhat(U^(k))).

    `stage` is 1-based; inputs are the post-limited entropies and the
    lam-scaled entropy-flux differences of stages 0..stage-1.
    """
    if cfl_report is not None and not cfl_report.satisfied:
        raise CflViolation("stage budget not certified: CFL violated")
    if not 1 <= stage <= coeffs.stages:
        raise ValueError(f"stage {stage} out of range")
    arow = coeffs.alphas[stage - 1]
    grow = coeffs.gammas[stage - 1]
    B = None
    for k in range(stage):
        if arow[k] == 0.0:
            continue
        term = arow[k] * (np.asarray(stage_entropies[k], dtype=float)
                          - grow[k] * np.asarray(stage_lam_dq[k], dtype=float))
        B = term if B is None else B + term
    return B


def multistep_budget(entropies_by_level, lam_dq_by_level, coeffs=SSP_MS3,
                     cfl_report=None):
    """End-of-step budget sum_r alpha_r (E(U^{n-r}) - gamma_r*lam*dQhat(U^{n-r})).

    The dict arguments are keyed by level offset r; all offsets in
    `coeffs.levels` must be present.
    """
    if cfl_report is not None and not cfl_report.satisfied:
        raise CflViolation("multistep budget not certified: CFL violated")
    missing = [r for r in coeffs.levels if r not in entropies_by_level]
    if missing:
        raise ValueError(f"insufficient history: missing levels {missing}")
    B = None
    for r, a, g in zip(coeffs.levels, coeffs.alphas, coeffs.gammas):
        term = a * (np.asarray(entropies_by_level[r], dtype=float)
                    - g * np.asarray(lam_dq_by_level[r], dtype=float))
        B = term if B is None else B + term
    return B
